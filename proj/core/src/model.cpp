#include "gradflow/model.hpp"

#include <cmath>
#include <string>

#include "gradflow/errors.hpp"

namespace gradflow {

Flow parse_flow(std::string_view name) {
  if (name == "allen-cahn" || name == "ac" || name == "AC") return Flow::AllenCahn;
  if (name == "cahn-hilliard" || name == "ch" || name == "CH") return Flow::CahnHilliard;
  throw ConfigError("unknown flow '" + std::string(name) + "' (expected allen-cahn or cahn-hilliard)");
}

std::string_view to_string(Flow flow) {
  return flow == Flow::AllenCahn ? "allen-cahn" : "cahn-hilliard";
}

void ModelParams::validate() const {
  if (!(mobility > 0.0)) throw ConfigError("mobility must be positive");
  if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
  if (!(a1 > 0.0)) throw ConfigError("a1 must be positive");
  if (!(a2 > 0.0)) throw ConfigError("a2 must be positive");
}

Field potential(const Field& phi) {
  return phi.map([](double p) { return potential(p); });
}

Field dpotential(const Field& phi) {
  return phi.map([](double p) { return dpotential(p); });
}

double free_energy(const Field& phi, const ModelParams& params) {
  const double eps2 = params.epsilon * params.epsilon;
  return 0.5 * eps2 * grad_sq_norm(phi) + integrate(potential(phi));
}

Field apply_flow_operator(const Field& mu, const ModelParams& params) {
  if (params.flow == Flow::AllenCahn) return -params.mobility * mu;
  return params.mobility * laplacian(mu);
}

Field chemical_potential(const Field& phi, const ModelParams& params) {
  const double eps2 = params.epsilon * params.epsilon;
  return dpotential(phi) - eps2 * laplacian(phi);
}

Field manufactured_state(double t, const GridSpec& grid) {
  const double ct = std::cos(t);
  return Field::from_function(grid, [ct](double x, double y) { return std::sin(x) * std::cos(y) * ct; });
}

Field manufactured_rate(double t, const GridSpec& grid) {
  const double st = -std::sin(t);
  return Field::from_function(grid, [st](double x, double y) { return std::sin(x) * std::cos(y) * st; });
}

ForcingMode parse_forcing(std::string_view name) {
  if (name == "off" || name == "none") return ForcingMode::Off;
  if (name == "discrete") return ForcingMode::Discrete;
  if (name == "analytic") return ForcingMode::Analytic;
  throw ConfigError("unknown forcing mode '" + std::string(name) + "' (expected off, discrete or analytic)");
}

std::string_view to_string(ForcingMode mode) {
  switch (mode) {
    case ForcingMode::Off: return "off";
    case ForcingMode::Discrete: return "discrete";
    case ForcingMode::Analytic: return "analytic";
  }
  return "off";
}

Field forcing(double t, const GridSpec& grid, const ModelParams& params, ForcingMode mode) {
  if (mode == ForcingMode::Off) return Field(grid);
  const Field exact = manufactured_state(t, grid);
  Field mu(grid);
  if (mode == ForcingMode::Discrete) {
    mu = chemical_potential(exact, params);
  } else {
    // sin(x)cos(y) is an eigenfunction of the continuous Laplacian with eigenvalue -2.
    const double eps2 = params.epsilon * params.epsilon;
    mu = dpotential(exact) + (2.0 * eps2) * exact;
  }
  return manufactured_rate(t, grid) - apply_flow_operator(mu, params);
}

}  // namespace gradflow
