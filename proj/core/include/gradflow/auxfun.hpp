#pragma once

#include <functional>
#include <limits>
#include <string>
#include <string_view>
#include <variant>

#include "gradflow/grid.hpp"

namespace gradflow {

/// A convex auxiliary function c with c(r) = F(phi) + a1, used by IEC and C-SAV.
///
/// `cinv` inverts c on its increasing branch [domain_lo, inf). Values y handed to
/// cinv must lie above range_lo (or equal it when range_closed is set).
struct ConvexAux {
  using Fn = std::function<double(double)>;

  std::string name;
  Fn c;
  Fn cprime;
  Fn csecond;
  Fn cinv;
  /// Smoothness constant the scheme multiplies by alpha.
  double L = 2.0;
  double domain_lo = -std::numeric_limits<double>::infinity();
  double range_lo = 0.0;
  bool range_closed = true;

  /// Copy with the scheme's L replaced.
  ConvexAux with_L(double new_L) const;
  /// True if y is a valid argument of cinv.
  bool in_range(double y) const noexcept;
};

/// Builtin families: "quadratic", "softplus", "logsquare", "exponential".
///
/// quadratic and softplus carry their global smoothness constants (2 and 1/4).
/// logsquare and exponential are only locally smooth and default to L = 2, which is
/// the exact bound for logsquare on [1, e].
ConvexAux builtin_convex(std::string_view name);

/// g(r) = r^p for p = 0 or p odd, so that g'(r) >= 0 for every real r and
/// r g(r) = r^(p+1) is invertible on [0, inf). Used by IEF.
class MonoAux {
 public:
  /// g(r) = r^(2k+1).
  static MonoAux from_k(int k);
  /// g(r) = r^p with p == 0 or p odd.
  static MonoAux power(int p);

  int exponent() const noexcept { return exponent_; }
  double g(double r) const noexcept;
  double gprime(double r) const noexcept;
  std::string name() const;

 private:
  explicit MonoAux(int p) : exponent_(p) {}
  int exponent_;
};

using AuxSpec = std::variant<ConvexAux, MonoAux>;

/// Parses "quadratic" | "softplus" | "logsquare" | "exponential" |
/// "monomial:k=<int>" (g = r^(2k+1)) | "power:p=<int>" (g = r^p).
AuxSpec parse_aux(std::string_view name);
std::string aux_name(const AuxSpec& aux);

/// r = cinv(F(phi) + a1) nodewise. Throws DomainError naming the first bad node.
Field r_of_phi(const Field& phi, const ConvexAux& aux, double a1);

/// P = dr/dphi = f(phi) / c'(r(phi)) nodewise.
Field p_of_phi(const Field& phi, const ConvexAux& aux, double a1);

/// r = (F(phi) + a1)^(1/(p+1)) nodewise.
Field r_of_phi_mono(const Field& phi, const MonoAux& mono, double a1);

/// P = f(phi) / ((p+1) (F(phi) + a1)^(p/(p+1))) nodewise.
Field p_of_phi_mono(const Field& phi, const MonoAux& mono, double a1);

/// Scalar building blocks of the field transforms above.
double r_of_value(double phi, const ConvexAux& aux, double a1);
double p_of_value(double phi, const ConvexAux& aux, double a1);
double r_of_value_mono(double phi, const MonoAux& mono, double a1);
double p_of_value_mono(double phi, const MonoAux& mono, double a1);

}  // namespace gradflow
