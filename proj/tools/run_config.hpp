#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <boost/property_tree/ptree.hpp>

#include "gradflow/harness.hpp"
#include "gradflow/schemes.hpp"

namespace gradflow::cli {

/// Everything one CLI invocation needs. Built from an INI file plus overrides.
///
/// Schema (all keys optional):
///   [scheme] kind, aux, alpha, L, forcing, reduced
///   [model]  flow, mobility, epsilon, a1, a2
///   [grid]   n, nx, ny
///   [time]   dt, dts (space or comma separated), t0, t_end
///   [ic]     kind, r1, seed, value
///   [solver] tol, max_iter
///   [output] label, snapshot_every
struct RunConfig {
  SchemeConfig scheme;
  int nx = 40;
  int ny = 40;
  IcSpec ic;
  std::vector<double> dts;
  double t_end = 1.0;
  double snapshot_every = 0.25;
  std::string label = "run";

  /// Throws ConfigError on anything that cannot run.
  void validate() const;
  /// dts when given, otherwise the single scheme dt.
  std::vector<double> time_steps() const;
};

/// Reads an INI file into a property tree.
boost::property_tree::ptree read_config_file(const std::filesystem::path& path);

/// Finds a config by path or by bare name: NAME, then NAME.cfg in
/// $GRADFLOW_CONFIG_DIR and the shipped configs directory.
std::filesystem::path resolve_config(const std::string& name);

/// Applies a "section.key=value" assignment.
void set_key(boost::property_tree::ptree& tree, const std::string& assignment);

/// Converts a tree to a RunConfig, rejecting unknown sections and keys.
RunConfig from_tree(const boost::property_tree::ptree& tree);

}  // namespace gradflow::cli
