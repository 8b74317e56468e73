#pragma once

#include <stdexcept>
#include <string>

namespace gradflow {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration or argument (bad sizes, alpha < 1/2, unknown names).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Grid or vector size mismatch between operands.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A pointwise transform left the valid branch of its auxiliary function.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// The linear solver failed or could not meet its residual contract.
class SolverError : public Error {
 public:
  SolverError(const std::string& what, double residual)
      : Error(what), residual_(residual) {}

  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// A runtime invariant (energy decay, conservation) was violated.
class InvariantViolation : public Error {
 public:
  using Error::Error;
};

}  // namespace gradflow
