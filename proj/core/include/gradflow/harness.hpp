#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gradflow/grid.hpp"
#include "gradflow/schemes.hpp"

namespace gradflow {

enum class IcKind {
  SinCos,        ///< sin(x) cos(y)
  Manufactured,  ///< manufactured solution at t0
  TwoCircle,     ///< two tanh-profile disks
  Random,        ///< 0.25 + 0.4 U[-1, 1] per node
  Constant,
};

IcKind parse_ic(std::string_view name);
std::string_view to_string(IcKind kind);

struct IcSpec {
  IcKind kind = IcKind::SinCos;
  /// Constant IC value.
  double value = 0.0;
  /// Radius of the first (large) disk of the two-circle IC.
  double r1 = 1.5;
  std::uint64_t seed = 42;
};

Field make_initial(const GridSpec& grid, const IcSpec& ic, const ModelParams& params, double t0 = 0.0);

/// Number of steps of size dt covering [t0, t_end]. Throws ConfigError unless the
/// span is an integer multiple of dt (to 1e-9 relative).
long step_count(double t0, double t_end, double dt);

/// order_i = log(e_i / e_{i+1}) / log(dt_i / dt_{i+1}).
std::vector<double> observed_order(std::span<const double> errors, std::span<const double> dts);

/// Connected components of {phi > threshold}, 4-neighbour, periodic.
int count_components(const Field& phi, double threshold = 0.0);

struct AccuracyRow {
  double dt = 0.0;
  double l2_error = 0.0;
  /// Order against the previous (larger) dt; empty on the first row.
  std::optional<double> order;
};

struct AccuracySweep {
  SchemeConfig scheme;
  int nx = 40;
  int ny = 40;
  std::vector<double> dts;
  double t_end = 1.0;
};

/// Runs every dt from the manufactured state to t_end and measures the L2 error.
/// Rows come back sorted by decreasing dt; `jobs` worker threads share the sweep.
std::vector<AccuracyRow> run_accuracy(const AccuracySweep& sweep, int jobs = 1);

struct TraceOptions {
  double t_end = 5.0;
  /// Tolerated increase of the modified energy per step.
  double slack = 1e-9;
  /// Snapshot times; the run is sampled at the nearest step.
  std::vector<double> snapshot_times;
  /// Snapshots are written only when this is set.
  std::optional<std::filesystem::path> snapshot_dir;
  std::string run_id = "run";
  /// Count {phi > 0} components at each snapshot time.
  bool track_components = false;
};

struct RunReport {
  std::vector<long> steps;
  std::vector<double> times;
  std::vector<double> energy_modified;
  std::vector<double> energy_original;
  std::vector<double> dissipation_sum;
  std::vector<double> mass;
  std::vector<double> residuals;
  double r_min = 0.0;
  double r_max = 0.0;

  std::vector<double> snapshot_times;
  std::vector<std::filesystem::path> snapshots;
  std::vector<int> components;

  /// Largest one-step increase of the modified energy, and where it happened.
  double max_energy_increase = 0.0;
  long worst_step = 0;
  bool energy_monotone = true;

  std::optional<SchemeState> final_state;
};

/// Unforced run from phi0 to t_end recording the per-step diagnostics.
RunReport run_energy_trace(const SchemeConfig& config, const Field& phi0, const TraceOptions& options);

struct GapRow {
  double dt = 0.0;
  /// |integral c(r) - integral (F(phi) + a1)| (IEC), the g r analogue (IEF), or
  /// |c(r) - E1 - a2| (C-SAV) at t_end.
  double gap = 0.0;
  std::optional<double> order;
  /// IEF only: ||r - r(phi)|| and ||g - g(r(phi))|| at t_end.
  double r_consistency = 0.0;
  double g_consistency = 0.0;
  std::optional<double> r_order;
  std::optional<double> g_order;
};

/// Gap between the auxiliary and original energies at the final state.
GapRow energy_gap(const SchemeState& state, const SchemeConfig& config);

std::vector<GapRow> run_energy_gap(const SchemeConfig& config, const Field& phi0,
                                   std::span<const double> dts, double t_end, int jobs = 1);

struct CoarseningOptions {
  double t_end = 3.0;
  double snapshot_every = 0.25;
  std::optional<std::filesystem::path> snapshot_dir;
  std::string run_id = "coarsen";
};

/// Cahn-Hilliard run with snapshots and component counts every snapshot_every.
RunReport run_coarsening(const SchemeConfig& config, const Field& phi0, const CoarseningOptions& options);

/// First snapshot time at which the component count is 1 after having been 2 or
/// more, if any.
std::optional<double> absorption_time(const RunReport& report);

/// max |mass_n - mass_0| / max(|mass_0|, ||phi0||_L2).
double relative_mass_drift(const RunReport& report, const Field& phi0);

struct CsvMeta {
  std::string scheme;
  std::string aux;
  double alpha = 0.5;
  double L = 0.0;
  std::string flow;
};

CsvMeta csv_meta(const SchemeConfig& config);

void write_accuracy_csv(const std::filesystem::path& path, const CsvMeta& meta,
                        std::span<const AccuracyRow> rows);
void write_energy_csv(const std::filesystem::path& path, const RunReport& report);
void write_gap_csv(const std::filesystem::path& path, const CsvMeta& meta, std::span<const GapRow> rows);

struct InvariantCheck {
  std::string name;
  bool passed = false;
  /// Measured quantity compared against the bound.
  double value = 0.0;
  double bound = 0.0;
};

/// Structural checks without experiments: fixed points of every scheme, IEQ
/// equivalence of IEC(quadratic, alpha = 1) and IEF(g = r), Cahn-Hilliard mass
/// conservation, constraint rows, and reduced-versus-block agreement.
std::vector<InvariantCheck> run_invariant_suite(int n = 8);

/// "<run-id>_t<time>.snap" with the time printed to four decimals.
std::string snapshot_name(std::string_view run_id, double time);

}  // namespace gradflow
