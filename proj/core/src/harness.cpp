#include "gradflow/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include "gradflow/errors.hpp"
#include "gradflow/model.hpp"

namespace gradflow {

namespace {

/// Runs fn(0..n-1) on up to `jobs` threads; rethrows the first failure.
template <class Fn>
void parallel_for(std::size_t n, int jobs, Fn&& fn) {
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(jobs, 1)));
  if (workers <= 1) {
    for (std::size_t k = 0; k < n; ++k) fn(k);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t k = next++; k < n; k = next++) {
        try {
          fn(k);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

void check_decreasing(std::span<const double> dts) {
  for (std::size_t k = 1; k < dts.size(); ++k)
    if (!(dts[k] < dts[k - 1])) throw ConfigError("time steps must be listed in strictly decreasing order");
}

std::vector<double> sorted_desc(std::span<const double> dts) {
  std::vector<double> out(dts.begin(), dts.end());
  std::sort(out.begin(), out.end(), std::greater<>());
  if (std::adjacent_find(out.begin(), out.end()) != out.end()) throw ConfigError("duplicate time step in sweep");
  return out;
}

std::ofstream open_csv(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << std::setprecision(17);
  return out;
}

}  // namespace

IcKind parse_ic(std::string_view name) {
  if (name == "sincos") return IcKind::SinCos;
  if (name == "manufactured") return IcKind::Manufactured;
  if (name == "two-circle" || name == "twocircle") return IcKind::TwoCircle;
  if (name == "random") return IcKind::Random;
  if (name == "constant") return IcKind::Constant;
  throw ConfigError("unknown initial condition '" + std::string(name) +
                    "' (expected sincos, manufactured, two-circle, random or constant)");
}

std::string_view to_string(IcKind kind) {
  switch (kind) {
    case IcKind::SinCos: return "sincos";
    case IcKind::Manufactured: return "manufactured";
    case IcKind::TwoCircle: return "two-circle";
    case IcKind::Random: return "random";
    case IcKind::Constant: return "constant";
  }
  return "sincos";
}

Field make_initial(const GridSpec& grid, const IcSpec& ic, const ModelParams& params, double t0) {
  switch (ic.kind) {
    case IcKind::SinCos:
      return Field::from_function(grid, [](double x, double y) { return std::sin(x) * std::cos(y); });
    case IcKind::Manufactured:
      return manufactured_state(t0, grid);
    case IcKind::TwoCircle: {
      if (!(ic.r1 > 0.0)) throw ConfigError("two-circle radius r1 must be positive");
      constexpr double pi = std::numbers::pi;
      const double disks[2][3] = {{pi - 0.7, pi - 0.6, ic.r1}, {pi + 1.65, pi + 1.6, 0.8}};
      const double width = 1.2 * params.epsilon;
      return Field::from_function(grid, [&](double x, double y) {
        double v = 1.0;
        for (const auto& d : disks) v -= std::tanh((std::hypot(x - d[0], y - d[1]) - d[2]) / width);
        return v;
      });
    }
    case IcKind::Random: {
      std::mt19937_64 rng(ic.seed);
      std::uniform_real_distribution<double> unit(-1.0, 1.0);
      Field out(grid);
      for (std::size_t k = 0; k < out.size(); ++k) out[k] = 0.25 + 0.4 * unit(rng);
      return out;
    }
    case IcKind::Constant:
      return Field(grid, ic.value);
  }
  throw ConfigError("unknown initial condition");
}

long step_count(double t0, double t_end, double dt) {
  if (!(dt > 0.0)) throw ConfigError("time step must be positive");
  if (!(t_end > t0)) throw ConfigError("end time must exceed the start time");
  const double ratio = (t_end - t0) / dt;
  const double n = std::round(ratio);
  if (std::abs(ratio - n) > 1e-9 * std::max(1.0, n)) {
    std::ostringstream msg;
    msg << "end time " << t_end << " is not a multiple of dt = " << dt << " from t0 = " << t0;
    throw ConfigError(msg.str());
  }
  return static_cast<long>(n);
}

std::vector<double> observed_order(std::span<const double> errors, std::span<const double> dts) {
  if (errors.size() != dts.size()) throw ShapeError("errors and dts differ in length");
  check_decreasing(dts);
  for (double e : errors)
    if (!(e > 0.0)) throw DomainError("observed order needs positive errors");
  std::vector<double> orders;
  for (std::size_t k = 0; k + 1 < errors.size(); ++k)
    orders.push_back(std::log(errors[k] / errors[k + 1]) / std::log(dts[k] / dts[k + 1]));
  return orders;
}

int count_components(const Field& phi, double threshold) {
  const GridSpec& grid = phi.grid();
  std::vector<int> label(grid.size(), -1);
  std::vector<std::pair<int, int>> stack;
  int count = 0;
  for (int j0 = 0; j0 < grid.ny(); ++j0) {
    for (int i0 = 0; i0 < grid.nx(); ++i0) {
      const std::size_t k0 = grid.index(i0, j0);
      if (label[k0] >= 0 || !(phi[k0] > threshold)) continue;
      label[k0] = count;
      stack.assign(1, {i0, j0});
      while (!stack.empty()) {
        const auto [i, j] = stack.back();
        stack.pop_back();
        const std::pair<int, int> nbrs[4] = {{i + 1, j}, {i - 1, j}, {i, j + 1}, {i, j - 1}};
        for (const auto& [ni, nj] : nbrs) {
          const std::size_t k = grid.index(ni, nj);
          if (label[k] >= 0 || !(phi[k] > threshold)) continue;
          label[k] = count;
          stack.emplace_back(static_cast<int>(k % grid.nx()), static_cast<int>(k / grid.nx()));
        }
      }
      ++count;
    }
  }
  return count;
}

std::vector<AccuracyRow> run_accuracy(const AccuracySweep& sweep, int jobs) {
  if (sweep.dts.empty()) throw ConfigError("accuracy sweep needs at least one time step");
  if (sweep.scheme.forcing == ForcingMode::Off) throw ConfigError("accuracy sweeps need forcing enabled");
  sweep.scheme.validate();
  const GridSpec grid(sweep.nx, sweep.ny);
  const std::vector<double> dts = sorted_desc(sweep.dts);
  const double t0 = sweep.scheme.t0;
  std::vector<long> steps;
  for (double dt : dts) steps.push_back(step_count(t0, sweep.t_end, dt));

  std::vector<AccuracyRow> rows(dts.size());
  const Field exact = manufactured_state(sweep.t_end, grid);
  parallel_for(dts.size(), jobs, [&](std::size_t k) {
    SchemeConfig config = sweep.scheme;
    config.dt = dts[k];
    SchemeState state = init_state(manufactured_state(t0, grid), config);
    for (long n = 0; n < steps[k]; ++n) state = step(state, config).state;
    rows[k] = {dts[k], l2_norm(state.phi - exact), std::nullopt};
  });
  for (std::size_t k = 1; k < rows.size(); ++k) {
    const double e[2] = {rows[k - 1].l2_error, rows[k].l2_error};
    const double d[2] = {rows[k - 1].dt, rows[k].dt};
    if (e[0] > 0.0 && e[1] > 0.0) rows[k].order = observed_order(e, d).front();
  }
  return rows;
}

RunReport run_energy_trace(const SchemeConfig& config, const Field& phi0, const TraceOptions& options) {
  if (config.forcing != ForcingMode::Off) throw ConfigError("energy traces run unforced");
  const long total = step_count(config.t0, options.t_end, config.dt);

  std::map<long, double> snapshot_at;
  for (double t : options.snapshot_times) {
    const long n = std::lround((t - config.t0) / config.dt);
    if (n < 0 || n > total) throw ConfigError("snapshot time outside the run");
    snapshot_at.emplace(n, t);
  }
  if (options.snapshot_dir) std::filesystem::create_directories(*options.snapshot_dir);

  RunReport report;
  SchemeState state = init_state(phi0, config);
  report.final_state = state;
  double dissipation = 0.0;
  double previous = modified_energy(state, config);

  auto record = [&](const SchemeState& s, double e_mod, double e_orig, double residual) {
    report.steps.push_back(s.step);
    report.times.push_back(s.time);
    report.energy_modified.push_back(e_mod);
    report.energy_original.push_back(e_orig);
    report.dissipation_sum.push_back(dissipation);
    report.mass.push_back(integrate(s.phi));
    report.residuals.push_back(residual);
  };
  auto sample = [&](const SchemeState& s) {
    const auto it = snapshot_at.find(s.step);
    if (it == snapshot_at.end()) return;
    report.snapshot_times.push_back(it->second);
    if (options.track_components) report.components.push_back(count_components(s.phi));
    if (options.snapshot_dir) {
      const auto path = *options.snapshot_dir / snapshot_name(options.run_id, it->second);
      write_snapshot(path, s.phi, s.time);
      report.snapshots.push_back(path);
    }
  };

  auto track_r = [&](const SchemeState& s, bool first) {
    double lo = 0.0;
    double hi = 0.0;
    if (const auto* r = std::get_if<Field>(&s.r)) {
      lo = r->min();
      hi = r->max();
    } else {
      lo = hi = std::get<double>(s.r);
    }
    report.r_min = first ? lo : std::min(report.r_min, lo);
    report.r_max = first ? hi : std::max(report.r_max, hi);
  };

  record(state, previous, free_energy(state.phi, config.params), 0.0);
  track_r(state, true);
  sample(state);
  for (long n = 0; n < total; ++n) {
    StepResult next = step(state, config);
    state = std::move(next.state);
    dissipation += next.report.dissipation;
    const double increase = next.report.energy_modified - previous;
    if (increase > report.max_energy_increase || n == 0) {
      report.max_energy_increase = increase;
      report.worst_step = state.step;
    }
    if (increase > options.slack) report.energy_monotone = false;
    previous = next.report.energy_modified;
    record(state, next.report.energy_modified, next.report.energy_original, next.report.residual);
    track_r(state, false);
    sample(state);
  }
  report.final_state = std::move(state);
  return report;
}

GapRow energy_gap(const SchemeState& state, const SchemeConfig& config) {
  GapRow row;
  row.dt = config.dt;
  const double a1 = config.params.a1;
  const double shifted = integrate(potential(state.phi)) + a1 * state.phi.grid().lx() * state.phi.grid().ly();
  switch (config.scheme) {
    case SchemeKind::IEC:
      row.gap = std::abs(integrate(state.r_field().map(config.convex().c)) - shifted);
      break;
    case SchemeKind::IEF: {
      const MonoAux& mono = config.mono();
      const Field& r = state.r_field();
      const Field& g = state.g.value();
      row.gap = std::abs(integrate(hadamard(g, r)) - shifted);
      const Field r_exact = r_of_phi_mono(state.phi, mono, a1);
      row.r_consistency = l2_norm(r - r_exact);
      row.g_consistency = l2_norm(g - r_exact.map([&](double v) { return mono.g(v); }));
      break;
    }
    case SchemeKind::CSAV:
      row.gap = std::abs(config.convex().c(state.r_scalar()) - integrate(potential(state.phi)) - config.params.a2);
      break;
  }
  return row;
}

std::vector<GapRow> run_energy_gap(const SchemeConfig& config, const Field& phi0, std::span<const double> dts,
                                   double t_end, int jobs) {
  if (config.forcing != ForcingMode::Off) throw ConfigError("energy-gap runs are unforced");
  if (dts.empty()) throw ConfigError("energy-gap sweep needs at least one time step");
  config.validate();
  const std::vector<double> sorted = sorted_desc(dts);
  std::vector<long> steps;
  for (double dt : sorted) steps.push_back(step_count(config.t0, t_end, dt));

  std::vector<GapRow> rows(sorted.size());
  parallel_for(sorted.size(), jobs, [&](std::size_t k) {
    SchemeConfig c = config;
    c.dt = sorted[k];
    SchemeState state = init_state(phi0, c);
    for (long n = 0; n < steps[k]; ++n) state = step(state, c).state;
    rows[k] = energy_gap(state, c);
  });
  auto order = [&](std::size_t k, double GapRow::*member) -> std::optional<double> {
    const double a = rows[k - 1].*member;
    const double b = rows[k].*member;
    if (!(a > 0.0 && b > 0.0)) return std::nullopt;
    return std::log(a / b) / std::log(rows[k - 1].dt / rows[k].dt);
  };
  for (std::size_t k = 1; k < rows.size(); ++k) {
    rows[k].order = order(k, &GapRow::gap);
    if (config.scheme == SchemeKind::IEF) {
      rows[k].r_order = order(k, &GapRow::r_consistency);
      rows[k].g_order = order(k, &GapRow::g_consistency);
    }
  }
  return rows;
}

RunReport run_coarsening(const SchemeConfig& config, const Field& phi0, const CoarseningOptions& options) {
  if (config.params.flow != Flow::CahnHilliard) throw ConfigError("coarsening runs use the Cahn-Hilliard flow");
  if (!(options.snapshot_every > 0.0)) throw ConfigError("snapshot interval must be positive");
  TraceOptions trace;
  trace.t_end = options.t_end;
  trace.snapshot_dir = options.snapshot_dir;
  trace.run_id = options.run_id;
  trace.track_components = true;
  const long frames = step_count(config.t0, options.t_end, options.snapshot_every);
  for (long k = 0; k <= frames; ++k) trace.snapshot_times.push_back(config.t0 + k * options.snapshot_every);
  return run_energy_trace(config, phi0, trace);
}

std::optional<double> absorption_time(const RunReport& report) {
  bool seen_many = false;
  for (std::size_t k = 0; k < report.components.size(); ++k) {
    if (report.components[k] >= 2) seen_many = true;
    if (seen_many && report.components[k] == 1) return report.snapshot_times[k];
  }
  return std::nullopt;
}

double relative_mass_drift(const RunReport& report, const Field& phi0) {
  if (report.mass.empty()) return 0.0;
  const double scale = std::max(std::abs(report.mass.front()), l2_norm(phi0));
  double drift = 0.0;
  for (double m : report.mass) drift = std::max(drift, std::abs(m - report.mass.front()));
  return scale > 0.0 ? drift / scale : drift;
}

CsvMeta csv_meta(const SchemeConfig& config) {
  CsvMeta meta;
  meta.scheme = std::string(to_string(config.scheme));
  meta.aux = aux_name(config.aux);
  meta.alpha = config.alpha;
  if (const auto* c = std::get_if<ConvexAux>(&config.aux)) meta.L = c->L;
  meta.flow = std::string(to_string(config.params.flow));
  return meta;
}

void write_accuracy_csv(const std::filesystem::path& path, const CsvMeta& meta, std::span<const AccuracyRow> rows) {
  std::ofstream out = open_csv(path);
  out << "scheme,aux,alpha,L,flow,dt,l2_error,order\n";
  for (const AccuracyRow& row : rows) {
    out << meta.scheme << ',' << meta.aux << ',' << meta.alpha << ',' << meta.L << ',' << meta.flow << ','
        << row.dt << ',' << row.l2_error << ',';
    if (row.order) out << *row.order;
    out << '\n';
  }
}

void write_energy_csv(const std::filesystem::path& path, const RunReport& report) {
  std::ofstream out = open_csv(path);
  out << "step,time,energy_modified,energy_original,dissipation_sum,mass,residual\n";
  for (std::size_t k = 0; k < report.times.size(); ++k) {
    out << report.steps[k] << ',' << report.times[k] << ',' << report.energy_modified[k] << ','
        << report.energy_original[k] << ',' << report.dissipation_sum[k] << ',' << report.mass[k] << ','
        << report.residuals[k] << '\n';
  }
}

void write_gap_csv(const std::filesystem::path& path, const CsvMeta& meta, std::span<const GapRow> rows) {
  std::ofstream out = open_csv(path);
  out << "scheme,aux,alpha,L,flow,dt,gap,order,r_consistency,g_consistency\n";
  for (const GapRow& row : rows) {
    out << meta.scheme << ',' << meta.aux << ',' << meta.alpha << ',' << meta.L << ',' << meta.flow << ','
        << row.dt << ',' << row.gap << ',';
    if (row.order) out << *row.order;
    out << ',' << row.r_consistency << ',' << row.g_consistency << '\n';
  }
}

std::vector<InvariantCheck> run_invariant_suite(int n) {
  std::vector<InvariantCheck> checks;
  const GridSpec grid(n, n);
  const Field wave = make_initial(grid, {}, ModelParams{});
  auto add = [&](std::string name, double value, double bound) {
    checks.push_back({std::move(name), value <= bound, value, bound});
  };
  auto configured = [](SchemeKind kind, std::string_view aux, Flow flow) {
    SchemeConfig c;
    c.scheme = kind;
    c.aux = parse_aux(aux);
    c.params.flow = flow;
    c.dt = 0.05;
    return c;
  };

  const std::pair<SchemeKind, std::string_view> schemes[] = {
      {SchemeKind::IEC, "softplus"}, {SchemeKind::IEC, "quadratic"}, {SchemeKind::IEF, "power:p=7"},
      {SchemeKind::CSAV, "softplus"}, {SchemeKind::CSAV, "quadratic"}};
  for (Flow flow : {Flow::AllenCahn, Flow::CahnHilliard}) {
    for (const auto& [kind, aux] : schemes) {
      const SchemeConfig c = configured(kind, aux, flow);
      for (double v : {0.0, 1.0, -1.0}) {
        const Field phi0(grid, v);
        const StepResult out = step(init_state(phi0, c), c);
        std::ostringstream name;
        name << "fixed point phi=" << v << ' ' << to_string(kind) << '/' << aux << '/' << to_string(flow);
        add(name.str(), (out.state.phi - phi0).max_abs(), 1e-9);
      }
    }
  }

  for (Flow flow : {Flow::AllenCahn, Flow::CahnHilliard}) {
    SchemeConfig iec = configured(SchemeKind::IEC, "quadratic", flow);
    iec.alpha = 1.0;
    iec.aux = std::get<ConvexAux>(iec.aux).with_L(2.0);
    const SchemeConfig ief = configured(SchemeKind::IEF, "power:p=1", flow);
    SchemeState a = init_state(wave, iec);
    SchemeState b = init_state(wave, ief);
    double diff = 0.0;
    for (int k = 0; k < 5; ++k) {
      a = step(a, iec).state;
      b = step(b, ief).state;
      diff = std::max({diff, (a.phi - b.phi).max_abs(), (a.r_field() - b.r_field()).max_abs(),
                       (b.g.value() - b.r_field()).max_abs()});
    }
    add(std::string("IEQ equivalence iec(quadratic, alpha=1) vs ief(g=r) ") + std::string(to_string(flow)), diff,
        1e-10);
  }

  for (const auto& [kind, aux] : schemes) {
    const SchemeConfig c = configured(kind, aux, Flow::CahnHilliard);
    SchemeState s = init_state(wave, c);
    double drift = 0.0;
    for (int k = 0; k < 5; ++k) {
      const SchemeState next = step(s, c).state;
      drift = std::max(drift, std::abs(integrate(next.phi) - integrate(s.phi)) / std::max(l2_norm(s.phi), 1e-300));
      s = next;
    }
    add(std::string("mass conservation ") + std::string(to_string(kind)) + '/' + std::string(aux), drift, 1e-9);
  }

  for (Flow flow : {Flow::AllenCahn, Flow::CahnHilliard}) {
    for (const auto& [kind, aux] : {schemes[0], schemes[2]}) {
      SchemeConfig c = configured(kind, aux, flow);
      const SchemeState s0 = init_state(wave, c);
      const StepResult block = step(s0, c);
      const Field P = kind == SchemeKind::IEC ? p_of_phi(wave, c.convex(), c.params.a1)
                                              : p_of_phi_mono(wave, c.mono(), c.params.a1);
      double constraint =
          (block.state.r_field() - s0.r_field() - hadamard(P, block.state.phi - s0.phi)).max_abs();
      if (kind == SchemeKind::IEF) {
        const Field gp = s0.r_field().map([&](double v) { return c.mono().gprime(v); });
        constraint = std::max(constraint, (block.state.g.value() - s0.g.value() -
                                           hadamard(gp, block.state.r_field() - s0.r_field()))
                                              .max_abs());
      }
      const std::string tag = std::string(to_string(kind)) + '/' + std::string(aux) + '/' +
                              std::string(to_string(flow));
      add("constraint rows " + tag, constraint, 1e-9);
      c.reduced = true;
      const StepResult reduced = step(s0, c);
      add("reduced vs block " + tag,
          std::max((reduced.state.phi - block.state.phi).max_abs(), (reduced.mu - block.mu).max_abs()), 1e-10);
    }
  }
  return checks;
}

std::string snapshot_name(std::string_view run_id, double time) {
  std::ostringstream name;
  name << run_id << "_t" << std::fixed << std::setprecision(4) << time << ".snap";
  return name.str();
}

}  // namespace gradflow
