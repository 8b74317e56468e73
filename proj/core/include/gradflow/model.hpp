#pragma once

#include <string_view>

#include "gradflow/grid.hpp"

namespace gradflow {

enum class Flow {
  AllenCahn,     ///< L2 flow, G = -M I
  CahnHilliard,  ///< H^-1 flow, G = M Laplacian
};

Flow parse_flow(std::string_view name);
std::string_view to_string(Flow flow);

struct ModelParams {
  double mobility = 0.6;
  double epsilon = 0.4;
  Flow flow = Flow::AllenCahn;
  /// Shift keeping F + a1 inside the range of the auxiliary function.
  double a1 = 1.0;
  /// Shift for the scalar (SAV-type) auxiliary variable.
  double a2 = 1.0;

  /// Throws ConfigError unless all constants are strictly positive.
  void validate() const;
};

/// Double well F(phi) = (phi^2 - 1)^2 / 4.
constexpr double potential(double phi) noexcept {
  const double w = phi * phi - 1.0;
  return 0.25 * w * w;
}

/// f = F'(phi) = phi^3 - phi.
constexpr double dpotential(double phi) noexcept { return phi * (phi * phi - 1.0); }

Field potential(const Field& phi);
Field dpotential(const Field& phi);

/// E(phi) = eps^2/2 |grad phi|^2 + integral F(phi).
double free_energy(const Field& phi, const ModelParams& params);

/// Applies the discrete flow operator: -M mu (Allen-Cahn) or M lap(mu) (Cahn-Hilliard).
Field apply_flow_operator(const Field& mu, const ModelParams& params);

/// Chemical potential -eps^2 lap(phi) + f(phi).
Field chemical_potential(const Field& phi, const ModelParams& params);

/// Manufactured solution sin(x) cos(y) cos(t) and its time derivative.
Field manufactured_state(double t, const GridSpec& grid);
Field manufactured_rate(double t, const GridSpec& grid);

enum class ForcingMode {
  Off,
  /// Source built from the discrete operators, so the exact nodal solution has zero
  /// spatial truncation error.
  Discrete,
  /// Source built from the continuous operators (lap phi_e = -2 phi_e).
  Analytic,
};

ForcingMode parse_forcing(std::string_view name);
std::string_view to_string(ForcingMode mode);

/// Source S(t) such that phi_t = G mu + S holds for the manufactured solution.
/// Does not validate params, so M = 0 is allowed here.
Field forcing(double t, const GridSpec& grid, const ModelParams& params,
              ForcingMode mode = ForcingMode::Discrete);

}  // namespace gradflow
