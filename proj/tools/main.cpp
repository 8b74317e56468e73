// gradflow: command-line driver for the gradient-flow schemes and experiments.

#include <CLI11.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "gradflow/errors.hpp"
#include "gradflow/harness.hpp"
#include "run_config.hpp"

namespace fs = std::filesystem;
using namespace gradflow;

namespace {

enum ExitCode : int {
  kOk = 0,
  kConfig = 2,
  kSolver = 3,
  kInvariant = 4,
  kIo = 5,
  kUsage = 64,
};

struct Flag {
  const char* name;
  const char* key;
  const char* help;
};

// Flags that map one-to-one onto config keys; they override the file.
constexpr Flag kFlags[] = {
    {"--scheme", "scheme.kind", "iec | ief | csav"},
    {"--aux", "scheme.aux", "softplus | logsquare | quadratic | exponential | monomial:k=K | power:p=P"},
    {"--alpha", "scheme.alpha", "stabilization weight (>= 0.5)"},
    {"--L", "scheme.L", "smoothness constant of a convex aux"},
    {"--forcing", "scheme.forcing", "off | discrete | analytic"},
    {"--flow", "model.flow", "allen-cahn | cahn-hilliard"},
    {"--a1", "model.a1", "energy shift A1"},
    {"--grid", "grid.n", "nodes per direction"},
    {"--dt", "time.dt", "time step"},
    {"--dts", "time.dts", "time step list, comma separated"},
    {"--t-end", "time.t_end", "final time"},
    {"--ic", "ic.kind", "sincos | manufactured | two-circle | random | constant"},
    {"--r1", "ic.r1", "radius of the large disk (two-circle IC)"},
    {"--seed", "ic.seed", "seed of the random IC"},
    {"--label", "output.label", "run label used in the output directory name"},
    {"--snapshot-every", "output.snapshot_every", "snapshot interval (coarsen)"},
};

struct Common {
  std::string config;
  std::vector<std::string> sets;
  std::vector<std::string> values = std::vector<std::string>(std::size(kFlags));
  std::vector<CLI::Option*> options = std::vector<CLI::Option*>(std::size(kFlags));
  bool reduced = false;
  std::string out;
  int jobs = 1;
};

void add_common(CLI::App& sub, Common& c) {
  sub.add_option("--config", c.config, "config name (configs/NAME.cfg) or path");
  sub.add_option("--set", c.sets, "override: section.key=value (repeatable)");
  for (std::size_t k = 0; k < std::size(kFlags); ++k)
    c.options[k] = sub.add_option(kFlags[k].name, c.values[k], kFlags[k].help);
  sub.add_flag("--reduced", c.reduced, "solve the phi-only system instead of the block system (iec/ief)");
  sub.add_option("--out", c.out, "output root (default $GRADFLOW_OUTPUT_ROOT or ./results)");
  sub.add_option("--jobs", c.jobs, "worker threads for sweeps")->check(CLI::PositiveNumber);
}

/// Precedence: defaults, then the config file, then --set, then flags.
cli::RunConfig build_config(const Common& c, const std::vector<std::string>& defaults = {}) {
  boost::property_tree::ptree tree;
  for (const std::string& s : defaults) cli::set_key(tree, s);
  if (!c.config.empty()) {
    const auto file = cli::read_config_file(cli::resolve_config(c.config));
    for (const auto& [section, body] : file)
      for (const auto& [key, value] : body) cli::set_key(tree, section + "." + key + "=" + value.data());
  }
  for (const std::string& s : c.sets) cli::set_key(tree, s);
  for (std::size_t k = 0; k < std::size(kFlags); ++k)
    if (c.options[k]->count() > 0) cli::set_key(tree, std::string(kFlags[k].key) + "=" + c.values[k]);
  if (c.reduced) cli::set_key(tree, "scheme.reduced=true");
  cli::RunConfig rc = cli::from_tree(tree);
  rc.validate();
  return rc;
}

std::string sanitize(std::string s) {
  for (char& ch : s)
    if (!std::isalnum(static_cast<unsigned char>(ch)) && ch != '-' && ch != '_' && ch != '.') ch = '-';
  return s;
}

fs::path run_dir(const Common& c, const std::string& sub, const cli::RunConfig& rc) {
  fs::path root = c.out;
  if (root.empty()) {
    const char* env = std::getenv("GRADFLOW_OUTPUT_ROOT");
    root = env && *env ? env : "results";
  }
  const fs::path dir = root / sanitize(sub + "_" + std::string(to_string(rc.scheme.scheme)) + "_" +
                                       aux_name(rc.scheme.aux) + "_" + rc.label);
  fs::create_directories(dir);
  return dir;
}

GridSpec grid_of(const cli::RunConfig& rc) { return GridSpec(rc.nx, rc.ny); }

int cmd_accuracy(const Common& c) {
  const cli::RunConfig rc = build_config(c);
  AccuracySweep sweep{rc.scheme, rc.nx, rc.ny, rc.time_steps(), rc.t_end};
  const auto rows = run_accuracy(sweep, c.jobs);
  const fs::path dir = run_dir(c, "accuracy", rc);
  write_accuracy_csv(dir / "accuracy.csv", csv_meta(rc.scheme), rows);
  for (const AccuracyRow& row : rows) {
    std::cout << "dt=" << row.dt << " l2_error=" << std::setprecision(9) << row.l2_error;
    if (row.order) std::cout << " order=" << std::setprecision(4) << *row.order;
    std::cout << std::setprecision(6) << '\n';
  }
  std::cout << "wrote " << (dir / "accuracy.csv").string() << '\n';
  return kOk;
}

int cmd_energy(const Common& c) {
  cli::RunConfig rc = build_config(c);
  if (rc.scheme.forcing != ForcingMode::Off) throw ConfigError("energy runs need scheme.forcing = off");
  const fs::path dir = run_dir(c, "energy", rc);
  const Field phi0 = make_initial(grid_of(rc), rc.ic, rc.scheme.params, rc.scheme.t0);
  int status = kOk;
  for (double dt : rc.time_steps()) {
    SchemeConfig sc = rc.scheme;
    sc.dt = dt;
    TraceOptions opts;
    opts.t_end = rc.t_end;
    const RunReport rep = run_energy_trace(sc, phi0, opts);
    std::ostringstream name;
    name << "energy_dt" << dt << ".csv";
    write_energy_csv(dir / name.str(), rep);
    const double e0 = rep.energy_modified.front();
    const bool bounded = std::all_of(rep.dissipation_sum.begin(), rep.dissipation_sum.end(),
                                     [&](double d) { return d >= 0.0 && d <= e0 + 1e-8; });
    std::cout << "dt=" << dt << " steps=" << rep.steps.back() << " E0=" << std::setprecision(12) << e0
              << " E_end=" << rep.energy_modified.back() << " max_step_increase=" << std::setprecision(3)
              << rep.max_energy_increase << " dissipation_sum=" << std::setprecision(12)
              << rep.dissipation_sum.back() << std::setprecision(6)
              << (rep.energy_monotone && bounded ? " ok" : " VIOLATION") << '\n';
    if (!rep.energy_monotone) {
      std::cerr << "modified energy increased by " << rep.max_energy_increase << " at step " << rep.worst_step
                << " (dt=" << dt << ")\n";
      status = kInvariant;
    }
    if (!bounded) {
      std::cerr << "dissipation sum left [0, E0 + 1e-8] (dt=" << dt << ")\n";
      status = kInvariant;
    }
  }
  std::cout << "wrote " << dir.string() << '\n';
  return status;
}

int cmd_energy_gap(const Common& c) {
  const cli::RunConfig rc = build_config(c);
  if (rc.scheme.forcing != ForcingMode::Off) throw ConfigError("energy-gap runs need scheme.forcing = off");
  const Field phi0 = make_initial(grid_of(rc), rc.ic, rc.scheme.params, rc.scheme.t0);
  const std::vector<double> dts = rc.time_steps();
  const auto rows = run_energy_gap(rc.scheme, phi0, dts, rc.t_end, c.jobs);
  const fs::path dir = run_dir(c, "energy-gap", rc);
  write_gap_csv(dir / "gap.csv", csv_meta(rc.scheme), rows);
  for (const GapRow& row : rows) {
    std::cout << "dt=" << row.dt << " gap=" << std::setprecision(9) << row.gap;
    if (row.order) std::cout << " order=" << std::setprecision(4) << *row.order;
    if (rc.scheme.scheme == SchemeKind::IEF)
      std::cout << " |r-r(phi)|=" << std::setprecision(9) << row.r_consistency << " |g-g(r(phi))|=" << row.g_consistency;
    std::cout << std::setprecision(6) << '\n';
  }
  std::cout << "wrote " << (dir / "gap.csv").string() << '\n';
  return kOk;
}

int cmd_coarsen(const Common& c) {
  const cli::RunConfig rc = build_config(c);
  const fs::path dir = run_dir(c, "coarsen", rc);
  const Field phi0 = make_initial(grid_of(rc), rc.ic, rc.scheme.params, rc.scheme.t0);
  CoarseningOptions opts;
  opts.t_end = rc.t_end;
  opts.snapshot_every = rc.snapshot_every;
  opts.snapshot_dir = dir;
  opts.run_id = sanitize(rc.label);
  const RunReport rep = run_coarsening(rc.scheme, phi0, opts);
  write_energy_csv(dir / "energy.csv", rep);
  {
    std::ofstream out(dir / "components.csv");
    out << "time,components,snapshot\n";
    for (std::size_t k = 0; k < rep.snapshot_times.size(); ++k)
      out << rep.snapshot_times[k] << ',' << rep.components[k] << ',' << rep.snapshots[k].filename().string() << '\n';
  }
  for (std::size_t k = 0; k < rep.snapshot_times.size(); ++k)
    std::cout << "t=" << rep.snapshot_times[k] << " components=" << rep.components[k] << '\n';
  const auto absorbed = absorption_time(rep);
  const double drift = relative_mass_drift(rep, phi0);
  std::cout << "absorption_time=" << (absorbed ? std::to_string(*absorbed) : std::string("none"))
            << " mass_drift=" << drift << " energy_monotone=" << (rep.energy_monotone ? "yes" : "no") << '\n';
  std::cout << "wrote " << dir.string() << '\n';
  if (drift > 1e-8) {
    std::cerr << "mass drift " << drift << " exceeds 1e-8\n";
    return kInvariant;
  }
  return kOk;
}

void dump_vector(const fs::path& path, std::span<const double> v) {
  std::ofstream out(path);
  out << std::setprecision(17);
  for (double x : v) out << x << '\n';
}

int cmd_step_debug(const Common& c) {
  const cli::RunConfig rc = build_config(c, {"grid.n=4"});
  const GridSpec grid = grid_of(rc);
  const Field phi0 = make_initial(grid, rc.ic, rc.scheme.params, rc.scheme.t0);
  const SchemeState s0 = init_state(phi0, rc.scheme);
  LinearSystem sys;
  if (rc.scheme.scheme == SchemeKind::IEC)
    sys = assemble_iec(s0, rc.scheme);
  else if (rc.scheme.scheme == SchemeKind::IEF)
    sys = assemble_ief(s0, rc.scheme);
  else
    throw ConfigError("step-debug dumps the iec or ief block system");
  const SolveResult sol = solve(sys, rc.scheme.solver);

  const int n = sys.matrix.rows();
  const std::vector<double> dense = sys.matrix.to_dense();
  const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> a(dense.data(), n, n);
  const Eigen::Map<const Eigen::VectorXd> b(sys.rhs.data(), n);
  const Eigen::VectorXd x_dense = a.partialPivLu().solve(b);
  double diff = 0.0;
  for (int i = 0; i < n; ++i) diff = std::max(diff, std::abs(x_dense[i] - sol.x[i]));

  const fs::path dir = run_dir(c, "step-debug", rc);
  {
    std::ofstream out(dir / "matrix.txt");
    out << n << ' ' << n << ' ' << sys.matrix.nnz() << '\n' << std::setprecision(17);
    const auto off = sys.matrix.row_offsets();
    const auto cols = sys.matrix.col_indices();
    const auto vals = sys.matrix.values();
    for (int r = 0; r < n; ++r)
      for (int k = off[r]; k < off[r + 1]; ++k) out << r << ' ' << cols[k] << ' ' << vals[k] << '\n';
  }
  dump_vector(dir / "rhs.txt", sys.rhs);
  dump_vector(dir / "solution.txt", sol.x);
  dump_vector(dir / "solution_dense.txt", std::span<const double>(x_dense.data(), n));
  std::cout << "unknowns=" << n << " nnz=" << sys.matrix.nnz() << " residual=" << sol.residual
            << " max|x_sparse - x_dense|=" << diff << '\n';
  std::cout << "wrote " << dir.string() << '\n';
  if (!(diff <= 1e-10)) {
    std::cerr << "sparse solution differs from the dense oracle by " << diff << '\n';
    return kInvariant;
  }
  return kOk;
}

int cmd_validate(int n) {
  const auto checks = run_invariant_suite(n);
  int failed = 0;
  for (const InvariantCheck& check : checks) {
    std::cout << (check.passed ? "PASS " : "FAIL ") << check.name << "  value=" << std::setprecision(3)
              << check.value << " bound=" << check.bound << '\n';
    failed += check.passed ? 0 : 1;
  }
  std::cout << checks.size() - failed << '/' << checks.size() << " invariant checks passed\n";
  return failed ? kInvariant : kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gradflow: linear energy-stable schemes for Allen-Cahn and Cahn-Hilliard flows"};
  app.require_subcommand(1);

  Common accuracy, energy, gap, coarsen, debug;
  auto* acc_cmd = app.add_subcommand("accuracy", "L2 error sweep against the manufactured solution");
  add_common(*acc_cmd, accuracy);
  auto* energy_cmd = app.add_subcommand("energy", "unforced energy traces");
  add_common(*energy_cmd, energy);
  auto* gap_cmd = app.add_subcommand("energy-gap", "modified-versus-original energy gap at the final time");
  add_common(*gap_cmd, gap);
  auto* coarsen_cmd = app.add_subcommand("coarsen", "Cahn-Hilliard coarsening run with snapshots");
  add_common(*coarsen_cmd, coarsen);
  auto* debug_cmd = app.add_subcommand("step-debug", "one step on a tiny grid, dumping the block system");
  add_common(*debug_cmd, debug);
  int validate_n = 8;
  auto* validate_cmd = app.add_subcommand("validate", "invariant checks without experiments");
  validate_cmd->add_option("--grid", validate_n, "nodes per direction")->check(CLI::Range(4, 256));

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*acc_cmd) return cmd_accuracy(accuracy);
    if (*energy_cmd) return cmd_energy(energy);
    if (*gap_cmd) return cmd_energy_gap(gap);
    if (*coarsen_cmd) return cmd_coarsen(coarsen);
    if (*debug_cmd) return cmd_step_debug(debug);
    if (*validate_cmd) return cmd_validate(validate_n);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const SolverError& e) {
    std::cerr << "solver error: " << e.what() << " (residual " << e.residual() << ")\n";
    return kSolver;
  } catch (const DomainError& e) {
    std::cerr << "domain error: " << e.what() << '\n';
    return kSolver;
  } catch (const InvariantViolation& e) {
    std::cerr << "invariant violation: " << e.what() << '\n';
    return kInvariant;
  } catch (const ShapeError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIo;
  }
  return kUsage;
}
