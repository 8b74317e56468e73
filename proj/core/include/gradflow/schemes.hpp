#pragma once

#include <optional>
#include <string_view>
#include <variant>

#include "gradflow/auxfun.hpp"
#include "gradflow/grid.hpp"
#include "gradflow/linalg.hpp"
#include "gradflow/model.hpp"

namespace gradflow {

enum class SchemeKind {
  IEC,   ///< convexified auxiliary field r with c(r) = F + a1
  IEF,   ///< functionalized auxiliary pair (r, g) with r g(r) = F + a1
  CSAV,  ///< convexified scalar auxiliary variable c(r) = E1 + a2
};

SchemeKind parse_scheme(std::string_view name);
std::string_view to_string(SchemeKind kind);

struct SchemeConfig {
  SchemeKind scheme = SchemeKind::IEC;
  AuxSpec aux = builtin_convex("softplus");
  /// Stabilization weight on L (r^{n+1} - r^n); energy stability needs alpha >= 1/2.
  double alpha = 0.5;
  double dt = 0.01;
  ModelParams params;
  ForcingMode forcing = ForcingMode::Off;
  double t0 = 0.0;
  SolveOptions solver;
  /// IEC/IEF only: substitute the explicit r, g and mu rows and solve the remaining
  /// phi system with FFT-preconditioned BiCGSTAB. Agrees with the block system up to
  /// solver tolerance and is much cheaper per step.
  bool reduced = false;

  /// Throws ConfigError on inconsistent settings.
  void validate() const;
  const ConvexAux& convex() const;
  const MonoAux& mono() const;
};

struct SchemeState {
  Field phi;
  /// Nodal field for IEC/IEF, scalar for C-SAV.
  std::variant<Field, double> r;
  /// IEF only.
  std::optional<Field> g;
  long step = 0;
  double time = 0.0;

  const Field& r_field() const;
  double r_scalar() const;
};

struct StepReport {
  /// ||Ax - b|| of the accepted linear solve.
  double residual = 0.0;
  double energy_modified = 0.0;
  double energy_original = 0.0;
  /// -(G mu^{n+1}, mu^{n+1}) dt, nonnegative for both flows.
  double dissipation = 0.0;
  double mass = 0.0;
  double r_min = 0.0;
  double r_max = 0.0;
};

struct StepResult {
  SchemeState state;
  StepReport report;
  /// mu^{n+1}
  Field mu;
};

SchemeState init_state(const Field& phi0, const SchemeConfig& config);

/// Block system in (phi, mu, r) for one IEC step (the 3N x 3N operator).
LinearSystem assemble_iec(const SchemeState& state, const SchemeConfig& config);
/// Block system in (phi, mu, r, g) for one IEF step (the 4N x 4N operator).
LinearSystem assemble_ief(const SchemeState& state, const SchemeConfig& config);

StepResult step_iec(const SchemeState& state, const SchemeConfig& config);
StepResult step_ief(const SchemeState& state, const SchemeConfig& config);
StepResult step_csav(const SchemeState& state, const SchemeConfig& config);
/// Dispatches on config.scheme.
StepResult step(const SchemeState& state, const SchemeConfig& config);

/// eps^2/2 |grad phi|^2 + integral c(r).
double modified_energy_iec(const SchemeState& state, const SchemeConfig& config);
/// eps^2/2 |grad phi|^2 + integral g r.
double modified_energy_ief(const SchemeState& state, const SchemeConfig& config);
/// eps^2/2 |grad phi|^2 + c(r) with scalar r.
double modified_energy_csav(const SchemeState& state, const SchemeConfig& config);
double modified_energy(const SchemeState& state, const SchemeConfig& config);

/// -(G mu, mu): M ||mu||^2 for Allen-Cahn, M |grad mu|^2 for Cahn-Hilliard.
double dissipation_rate(const Field& mu, const ModelParams& params);

}  // namespace gradflow
