#include "gradflow/schemes.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gradflow/errors.hpp"
#include "spectral.hpp"

namespace gradflow {

namespace {

/// Triplet accumulator for block operators whose blocks are N x N.
class BlockBuilder {
 public:
  BlockBuilder(const GridSpec& grid, int blocks) : grid_(grid), n_(static_cast<int>(grid.size())), blocks_(blocks) {
    entries_.reserve(static_cast<std::size_t>(n_) * blocks * 6);
  }

  void diagonal(int br, int bc, double value) {
    for (int k = 0; k < n_; ++k) add(br, bc, k, k, value);
  }

  void diagonal(int br, int bc, const Field& values, double scale = 1.0) {
    for (int k = 0; k < n_; ++k) add(br, bc, k, k, scale * values[k]);
  }

  /// scale * five-point Laplacian.
  void laplacian(int br, int bc, double scale) {
    const double ax = scale / (grid_.hx() * grid_.hx());
    const double ay = scale / (grid_.hy() * grid_.hy());
    for (int j = 0; j < grid_.ny(); ++j) {
      for (int i = 0; i < grid_.nx(); ++i) {
        const int row = static_cast<int>(grid_.index(i, j));
        add(br, bc, row, row, -2.0 * ax - 2.0 * ay);
        add(br, bc, row, static_cast<int>(grid_.index(i + 1, j)), ax);
        add(br, bc, row, static_cast<int>(grid_.index(i - 1, j)), ax);
        add(br, bc, row, static_cast<int>(grid_.index(i, j + 1)), ay);
        add(br, bc, row, static_cast<int>(grid_.index(i, j - 1)), ay);
      }
    }
  }

  /// -G: +M I for Allen-Cahn, -M Laplacian for Cahn-Hilliard.
  void minus_flow(int br, int bc, const ModelParams& params) {
    if (params.flow == Flow::AllenCahn)
      diagonal(br, bc, params.mobility);
    else
      laplacian(br, bc, -params.mobility);
  }

  SparseMatrix build() {
    const int size = n_ * blocks_;
    return SparseMatrix::from_triplets(size, size, std::move(entries_));
  }

 private:
  void add(int br, int bc, int r, int c, double v) { entries_.push_back({br * n_ + r, bc * n_ + c, v}); }

  GridSpec grid_;
  int n_;
  int blocks_;
  std::vector<SparseMatrix::Entry> entries_;
};

std::vector<double> stack(std::initializer_list<const Field*> parts) {
  std::vector<double> out;
  for (const Field* f : parts) out.insert(out.end(), f->values().begin(), f->values().end());
  return out;
}

Field slice(const GridSpec& grid, std::span<const double> x, int block) {
  const std::size_t n = grid.size();
  return Field(grid, std::vector<double>(x.begin() + block * n, x.begin() + (block + 1) * n));
}

/// phi^n/dt plus the manufactured source at t^{n+1}.
Field phi_rhs(const SchemeState& state, const SchemeConfig& config, double t_next) {
  Field rhs = (1.0 / config.dt) * state.phi;
  if (config.forcing != ForcingMode::Off) rhs += forcing(t_next, state.phi.grid(), config.params, config.forcing);
  return rhs;
}

double next_time(const SchemeState& state, const SchemeConfig& config) {
  return config.t0 + static_cast<double>(state.step + 1) * config.dt;
}

void fill_report(StepResult& out, const SchemeConfig& config) {
  StepReport& rep = out.report;
  rep.energy_modified = modified_energy(out.state, config);
  rep.energy_original = free_energy(out.state.phi, config.params);
  rep.dissipation = dissipation_rate(out.mu, config.params) * config.dt;
  rep.mass = integrate(out.state.phi);
  if (const auto* r = std::get_if<Field>(&out.state.r)) {
    rep.r_min = r->min();
    rep.r_max = r->max();
  } else {
    rep.r_min = rep.r_max = std::get<double>(out.state.r);
  }
}

void check_finite(const Field& f, const char* what) {
  if (!f.all_finite()) throw SolverError(std::string("non-finite values in ") + what + " after solve",
                                         std::numeric_limits<double>::infinity());
}

}  // namespace

SchemeKind parse_scheme(std::string_view name) {
  if (name == "iec" || name == "IEC") return SchemeKind::IEC;
  if (name == "ief" || name == "IEF") return SchemeKind::IEF;
  if (name == "csav" || name == "CSAV" || name == "c-sav" || name == "sav") return SchemeKind::CSAV;
  throw ConfigError("unknown scheme '" + std::string(name) + "' (expected iec, ief or csav)");
}

std::string_view to_string(SchemeKind kind) {
  switch (kind) {
    case SchemeKind::IEC: return "iec";
    case SchemeKind::IEF: return "ief";
    case SchemeKind::CSAV: return "csav";
  }
  return "iec";
}

void SchemeConfig::validate() const {
  params.validate();
  if (!(alpha >= 0.5)) {
    throw ConfigError("alpha = " + std::to_string(alpha) +
                      " violates the energy-stability requirement alpha >= 1/2");
  }
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("time step must be positive");
  if (!(solver.tol > 0.0)) throw ConfigError("solver tolerance must be positive");
  if (solver.max_iter < 0) throw ConfigError("solver max_iter must be nonnegative");
  const bool is_convex = std::holds_alternative<ConvexAux>(aux);
  if (scheme == SchemeKind::IEF && is_convex) {
    throw ConfigError("IEF needs a monomial auxiliary function (monomial:k=<int> or power:p=<int>)");
  }
  if (scheme != SchemeKind::IEF && !is_convex) {
    throw ConfigError(std::string(to_string(scheme)) + " needs a convex auxiliary function");
  }
  if (is_convex && !(std::get<ConvexAux>(aux).L > 0.0)) throw ConfigError("L must be positive");
  if (reduced && scheme == SchemeKind::CSAV) throw ConfigError("reduced solve applies to iec/ief only");
}

const ConvexAux& SchemeConfig::convex() const {
  if (const auto* c = std::get_if<ConvexAux>(&aux)) return *c;
  throw ConfigError("scheme configured with a monomial auxiliary function");
}

const MonoAux& SchemeConfig::mono() const {
  if (const auto* m = std::get_if<MonoAux>(&aux)) return *m;
  throw ConfigError("scheme configured with a convex auxiliary function");
}

const Field& SchemeState::r_field() const {
  if (const auto* f = std::get_if<Field>(&r)) return *f;
  throw ConfigError("state holds a scalar auxiliary variable");
}

double SchemeState::r_scalar() const {
  if (const auto* s = std::get_if<double>(&r)) return *s;
  throw ConfigError("state holds a field auxiliary variable");
}

SchemeState init_state(const Field& phi0, const SchemeConfig& config) {
  config.validate();
  if (!phi0.all_finite()) throw DomainError("initial field has non-finite values");
  SchemeState s{phi0, 0.0, std::nullopt, 0, config.t0};
  const double a1 = config.params.a1;
  switch (config.scheme) {
    case SchemeKind::IEC:
      s.r = r_of_phi(phi0, config.convex(), a1);
      break;
    case SchemeKind::IEF: {
      const MonoAux& mono = config.mono();
      Field r = r_of_phi_mono(phi0, mono, a1);
      s.g = r.map([&](double v) { return mono.g(v); });
      s.r = std::move(r);
      break;
    }
    case SchemeKind::CSAV: {
      const ConvexAux& aux = config.convex();
      const double y = integrate(potential(phi0)) + config.params.a2;
      if (!aux.in_range(y)) throw DomainError(aux.name + ": E1 + a2 outside the range of c");
      s.r = aux.cinv(y);
      break;
    }
  }
  return s;
}

LinearSystem assemble_iec(const SchemeState& state, const SchemeConfig& config) {
  const ConvexAux& aux = config.convex();
  const GridSpec& grid = state.phi.grid();
  const Field& r = state.r_field();
  const Field P = p_of_phi(state.phi, aux, config.params.a1);
  const double aL = config.alpha * aux.L;
  const double eps2 = config.params.epsilon * config.params.epsilon;

  BlockBuilder b(grid, 3);
  b.diagonal(0, 0, 1.0 / config.dt);
  b.minus_flow(0, 1, config.params);
  b.laplacian(1, 0, eps2);
  b.diagonal(1, 1, 1.0);
  b.diagonal(1, 2, P, -aL);
  b.diagonal(2, 0, P, -1.0);
  b.diagonal(2, 2, 1.0);

  const Field rhs0 = phi_rhs(state, config, next_time(state, config));
  Field rhs1(grid);
  Field rhs2(grid);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    rhs1[k] = aux.cprime(r[k]) * P[k] - aL * r[k] * P[k];
    rhs2[k] = r[k] - P[k] * state.phi[k];
  }
  return {b.build(), stack({&rhs0, &rhs1, &rhs2})};
}

LinearSystem assemble_ief(const SchemeState& state, const SchemeConfig& config) {
  const MonoAux& mono = config.mono();
  if (!state.g) throw ConfigError("IEF step needs the g variable in the state");
  const GridSpec& grid = state.phi.grid();
  const Field& r = state.r_field();
  const Field& g = *state.g;
  const Field P = p_of_phi_mono(state.phi, mono, config.params.a1);
  const Field gp = r.map([&](double v) { return mono.gprime(v); });
  const double eps2 = config.params.epsilon * config.params.epsilon;

  BlockBuilder b(grid, 4);
  b.diagonal(0, 0, 1.0 / config.dt);
  b.minus_flow(0, 1, config.params);
  b.laplacian(1, 0, eps2);
  b.diagonal(1, 1, 1.0);
  b.diagonal(1, 2, hadamard(gp, P), -1.0);
  b.diagonal(1, 3, P, -1.0);
  b.diagonal(2, 0, P, -1.0);
  b.diagonal(2, 2, 1.0);
  b.diagonal(3, 2, gp, -1.0);
  b.diagonal(3, 3, 1.0);

  const Field rhs0 = phi_rhs(state, config, next_time(state, config));
  const Field rhs1(grid);
  Field rhs2(grid);
  Field rhs3(grid);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    rhs2[k] = r[k] - P[k] * state.phi[k];
    rhs3[k] = g[k] - gp[k] * r[k];
  }
  return {b.build(), stack({&rhs0, &rhs1, &rhs2, &rhs3})};
}

namespace {

/// Reduced IEC/IEF step. With r, g and mu substituted, what remains is
///   phi/dt - G (-eps^2 lap + W) phi = rhs0 + G m,   mu = m + (-eps^2 lap + W) phi,
/// where W = diag(weight P^2). The constant-coefficient part (W replaced by its
/// mean) is inverted exactly by FFT and serves as the preconditioner.
StepResult step_reduced(const SchemeState& state, const SchemeConfig& config, const Field& P,
                        const Field& weight, const Field& m) {
  const GridSpec& grid = state.phi.grid();
  const ModelParams& params = config.params;
  const double eps2 = params.epsilon * params.epsilon;
  const Field W = hadamard(weight, hadamard(P, P));
  const double w_mean = compensated_sum(W.values()) / static_cast<double>(W.size());

  BlockBuilder sb(grid, 1);
  sb.laplacian(0, 0, -eps2);
  sb.diagonal(0, 0, W);
  const SparseMatrix S = sb.build();

  SparseMatrix A;
  Field rhs = phi_rhs(state, config, next_time(state, config));
  if (params.flow == Flow::AllenCahn) {
    BlockBuilder ab(grid, 1);
    ab.diagonal(0, 0, 1.0 / config.dt);
    ab.laplacian(0, 0, -params.mobility * eps2);
    ab.diagonal(0, 0, W, params.mobility);
    A = ab.build();
    rhs -= params.mobility * m;
  } else {
    BlockBuilder lb(grid, 1);
    lb.laplacian(0, 0, -params.mobility);
    const SparseMatrix coupling = multiply(lb.build(), S);
    std::vector<SparseMatrix::Entry> entries;
    const auto offsets = coupling.row_offsets();
    const auto cols = coupling.col_indices();
    const auto vals = coupling.values();
    for (int r = 0; r < coupling.rows(); ++r) {
      entries.push_back({r, r, 1.0 / config.dt});
      for (int k = offsets[r]; k < offsets[r + 1]; ++k) entries.push_back({r, cols[k], vals[k]});
    }
    A = SparseMatrix::from_triplets(coupling.rows(), coupling.cols(), std::move(entries));
    rhs += params.mobility * laplacian(m);
  }

  const double mob = params.mobility;
  const double inv_dt = 1.0 / config.dt;
  const bool ac = params.flow == Flow::AllenCahn;
  const detail::LaplacianSymbolInverse inverse(grid, [&](double lam) {
    const double s_sym = -eps2 * lam + w_mean;
    return ac ? inv_dt + mob * s_sym : inv_dt - mob * lam * s_sym;
  });
  const Preconditioner pre = [&](std::span<const double> r, std::span<double> z) { inverse.apply(r, z); };
  const SolveResult sol = solve_krylov(A, rhs.values(), pre, config.solver);

  StepResult out{state, {}, Field(grid)};
  out.state.phi = Field(grid, sol.x);
  out.mu = m + Field(grid, matvec(S, sol.x));
  out.report.residual = sol.residual;
  return out;
}

}  // namespace

StepResult step_iec(const SchemeState& state, const SchemeConfig& config) {
  const GridSpec& grid = state.phi.grid();
  StepResult out{state, {}, Field(grid)};
  if (config.reduced) {
    const ConvexAux& aux = config.convex();
    const Field& r = state.r_field();
    const Field P = p_of_phi(state.phi, aux, config.params.a1);
    const double aL = config.alpha * aux.L;
    Field mu_rhs(grid);
    for (std::size_t k = 0; k < grid.size(); ++k)
      mu_rhs[k] = aux.cprime(r[k]) * P[k] - aL * P[k] * P[k] * state.phi[k];
    out = step_reduced(state, config, P, Field(grid, aL), mu_rhs);
    Field r_next = r + hadamard(P, out.state.phi - state.phi);
    out.state.r = std::move(r_next);
  } else {
    const LinearSystem sys = assemble_iec(state, config);
    const SolveResult sol = solve(sys, config.solver);
    out.state.phi = slice(grid, sol.x, 0);
    out.mu = slice(grid, sol.x, 1);
    out.state.r = slice(grid, sol.x, 2);
    out.report.residual = sol.residual;
  }
  check_finite(out.state.phi, "phi");
  out.state.step = state.step + 1;
  out.state.time = next_time(state, config);
  fill_report(out, config);
  return out;
}

StepResult step_ief(const SchemeState& state, const SchemeConfig& config) {
  const GridSpec& grid = state.phi.grid();
  StepResult out{state, {}, Field(grid)};
  if (config.reduced) {
    const MonoAux& mono = config.mono();
    if (!state.g) throw ConfigError("IEF step needs the g variable in the state");
    const Field& r = state.r_field();
    const Field& g = *state.g;
    const Field P = p_of_phi_mono(state.phi, mono, config.params.a1);
    const Field gp = r.map([&](double v) { return mono.gprime(v); });
    const Field weight = 2.0 * gp;
    Field mu_rhs(grid);
    for (std::size_t k = 0; k < grid.size(); ++k)
      mu_rhs[k] = gp[k] * P[k] * r[k] + P[k] * g[k] - weight[k] * P[k] * P[k] * state.phi[k];
    out = step_reduced(state, config, P, weight, mu_rhs);
    const Field dr = hadamard(P, out.state.phi - state.phi);
    out.state.r = r + dr;
    out.state.g = g + hadamard(gp, dr);
  } else {
    const LinearSystem sys = assemble_ief(state, config);
    const SolveResult sol = solve(sys, config.solver);
    out.state.phi = slice(grid, sol.x, 0);
    out.mu = slice(grid, sol.x, 1);
    out.state.r = slice(grid, sol.x, 2);
    out.state.g = slice(grid, sol.x, 3);
    out.report.residual = sol.residual;
  }
  check_finite(out.state.phi, "phi");
  out.state.step = state.step + 1;
  out.state.time = next_time(state, config);
  fill_report(out, config);
  return out;
}

StepResult step_csav(const SchemeState& state, const SchemeConfig& config) {
  const ConvexAux& aux = config.convex();
  const GridSpec& grid = state.phi.grid();
  const double r_n = state.r_scalar();
  const double aL = config.alpha * aux.L;
  const double eps2 = config.params.epsilon * config.params.epsilon;

  const double y = integrate(potential(state.phi)) + config.params.a2;
  if (!aux.in_range(y)) throw DomainError(aux.name + ": E1 + a2 outside the range of c");
  const double slope = aux.cprime(aux.cinv(y));
  if (slope == 0.0 || !std::isfinite(slope)) throw DomainError(aux.name + ": c'(r(phi)) vanishes");
  // b = f(phi^n) / c'(r(phi^n)); the scalar update is r^{n+1} - r^n = (b, phi^{n+1} - phi^n).
  const Field b = (1.0 / slope) * dpotential(state.phi);

  // Base operator in (phi, mu); the scalar coupling is the rank-one term
  // -aL [0; b] (b, phi)^T, removed by Sherman-Morrison.
  BlockBuilder builder(grid, 2);
  builder.diagonal(0, 0, 1.0 / config.dt);
  builder.minus_flow(0, 1, config.params);
  builder.laplacian(1, 0, eps2);
  builder.diagonal(1, 1, 1.0);
  const SparseMatrix base = builder.build();
  const SparseLuSolver lu(base);

  const Field rhs0 = phi_rhs(state, config, next_time(state, config));
  const Field rhs1 = (aux.cprime(r_n) - aL * inner(b, state.phi)) * b;
  const std::vector<double> rhs = stack({&rhs0, &rhs1});
  const Field zero(grid);
  const std::vector<double> u = stack({&zero, &b});

  const SolveResult ys = lu.solve(rhs, config.solver);
  const SolveResult zs = lu.solve(u, config.solver);
  const Field y_phi = slice(grid, ys.x, 0);
  const Field z_phi = slice(grid, zs.x, 0);
  const double denom = 1.0 - aL * inner(b, z_phi);
  if (!(std::abs(denom) > 0.0)) throw SolverError("C-SAV rank-one update is singular", 0.0);
  const double s = inner(b, y_phi) / denom;

  std::vector<double> x(ys.x);
  for (std::size_t k = 0; k < x.size(); ++k) x[k] += aL * s * zs.x[k];

  // Residual of the full (rank-one updated) operator.
  std::vector<double> ax = matvec(base, x);
  const Field x_phi = slice(grid, x, 0);
  const double bx = inner(b, x_phi);
  for (std::size_t k = 0; k < grid.size(); ++k) ax[grid.size() + k] -= aL * b[k] * bx;
  for (std::size_t k = 0; k < ax.size(); ++k) ax[k] -= rhs[k];
  const double residual = norm2(ax);
  if (!(residual <= config.solver.tol * std::max(1.0, norm2(rhs)))) {
    throw SolverError("C-SAV solve missed the residual bound", residual);
  }

  StepResult out{state, {}, slice(grid, x, 1)};
  out.state.phi = x_phi;
  check_finite(out.state.phi, "phi");
  out.state.r = r_n + inner(b, x_phi - state.phi);
  out.state.step = state.step + 1;
  out.state.time = next_time(state, config);
  out.report.residual = residual;
  fill_report(out, config);
  return out;
}

StepResult step(const SchemeState& state, const SchemeConfig& config) {
  switch (config.scheme) {
    case SchemeKind::IEC: return step_iec(state, config);
    case SchemeKind::IEF: return step_ief(state, config);
    case SchemeKind::CSAV: return step_csav(state, config);
  }
  throw ConfigError("unknown scheme");
}

double modified_energy_iec(const SchemeState& state, const SchemeConfig& config) {
  const ConvexAux& aux = config.convex();
  const double eps2 = config.params.epsilon * config.params.epsilon;
  return 0.5 * eps2 * grad_sq_norm(state.phi) + integrate(state.r_field().map(aux.c));
}

double modified_energy_ief(const SchemeState& state, const SchemeConfig& config) {
  if (!state.g) throw ConfigError("IEF energy needs the g variable in the state");
  const double eps2 = config.params.epsilon * config.params.epsilon;
  return 0.5 * eps2 * grad_sq_norm(state.phi) + integrate(hadamard(*state.g, state.r_field()));
}

double modified_energy_csav(const SchemeState& state, const SchemeConfig& config) {
  const double eps2 = config.params.epsilon * config.params.epsilon;
  return 0.5 * eps2 * grad_sq_norm(state.phi) + config.convex().c(state.r_scalar());
}

double modified_energy(const SchemeState& state, const SchemeConfig& config) {
  switch (config.scheme) {
    case SchemeKind::IEC: return modified_energy_iec(state, config);
    case SchemeKind::IEF: return modified_energy_ief(state, config);
    case SchemeKind::CSAV: return modified_energy_csav(state, config);
  }
  return 0.0;
}

double dissipation_rate(const Field& mu, const ModelParams& params) {
  if (params.flow == Flow::AllenCahn) return params.mobility * inner(mu, mu);
  return params.mobility * grad_sq_norm(mu);
}

}  // namespace gradflow
