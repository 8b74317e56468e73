#include "run_config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>

#include "gradflow/errors.hpp"

#ifndef GRADFLOW_CONFIG_DIR
#define GRADFLOW_CONFIG_DIR "configs"
#endif

namespace gradflow::cli {

namespace pt = boost::property_tree;

namespace {

const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"scheme", {"kind", "aux", "alpha", "L", "forcing", "reduced"}},
      {"model", {"flow", "mobility", "epsilon", "a1", "a2"}},
      {"grid", {"n", "nx", "ny"}},
      {"time", {"dt", "dts", "t0", "t_end"}},
      {"ic", {"kind", "r1", "seed", "value"}},
      {"solver", {"tol", "max_iter"}},
      {"output", {"label", "snapshot_every"}},
  };
  return keys;
}

std::string trim(std::string s) {
  const auto issp = [](unsigned char c) { return std::isspace(c) != 0; };
  s.erase(s.begin(), std::find_if_not(s.begin(), s.end(), issp));
  s.erase(std::find_if_not(s.rbegin(), s.rend(), issp).base(), s.end());
  return s;
}

double to_double(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  double value = 0.0;
  const auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (ec != std::errc() || end != t.data() + t.size() || t.empty())
    throw ConfigError("'" + key + "': expected a number, got '" + text + "'");
  return value;
}

long to_long(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  long value = 0;
  const auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (ec != std::errc() || end != t.data() + t.size() || t.empty())
    throw ConfigError("'" + key + "': expected an integer, got '" + text + "'");
  return value;
}

bool to_bool(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  throw ConfigError("'" + key + "': expected true or false, got '" + text + "'");
}

std::vector<double> to_list(const std::string& key, std::string text) {
  std::replace(text.begin(), text.end(), ',', ' ');
  std::istringstream in(text);
  std::vector<double> out;
  for (std::string item; in >> item;) out.push_back(to_double(key, item));
  if (out.empty()) throw ConfigError("'" + key + "': empty list");
  return out;
}

}  // namespace

void RunConfig::validate() const {
  scheme.validate();
  if (nx < 4 || ny < 4) throw ConfigError("grid needs at least 4 nodes per direction");
  for (double dt : time_steps()) step_count(scheme.t0, t_end, dt);
  if (!(snapshot_every > 0.0)) throw ConfigError("output.snapshot_every must be positive");
  if (label.empty() || label.find('/') != std::string::npos) throw ConfigError("output.label must be a plain name");
}

std::vector<double> RunConfig::time_steps() const { return dts.empty() ? std::vector<double>{scheme.dt} : dts; }

pt::ptree read_config_file(const std::filesystem::path& path) {
  pt::ptree tree;
  try {
    pt::read_ini(path.string(), tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("cannot parse config " + path.string() + ": " + e.message());
  }
  return tree;
}

std::filesystem::path resolve_config(const std::string& name) {
  namespace fs = std::filesystem;
  if (fs::is_regular_file(name)) return name;
  std::vector<fs::path> dirs;
  if (const char* env = std::getenv("GRADFLOW_CONFIG_DIR")) dirs.emplace_back(env);
  dirs.emplace_back(GRADFLOW_CONFIG_DIR);
  dirs.emplace_back("configs");
  for (const fs::path& dir : dirs) {
    const fs::path candidate = dir / (name + ".cfg");
    if (fs::is_regular_file(candidate)) return candidate;
  }
  throw ConfigError("config '" + name + "' not found (looked for a file and for " + name +
                    ".cfg under $GRADFLOW_CONFIG_DIR and " GRADFLOW_CONFIG_DIR ")");
}

void set_key(pt::ptree& tree, const std::string& assignment) {
  const auto eq = assignment.find('=');
  const auto dot = assignment.find('.');
  if (eq == std::string::npos || dot == std::string::npos || dot > eq)
    throw ConfigError("override '" + assignment + "' is not of the form section.key=value");
  tree.put(pt::ptree::path_type(trim(assignment.substr(0, eq)), '.'), trim(assignment.substr(eq + 1)));
}

RunConfig from_tree(const pt::ptree& tree) {
  for (const auto& [section, body] : tree) {
    const auto it = schema().find(section);
    if (it == schema().end()) throw ConfigError("unknown config section [" + section + "]");
    if (!body.data().empty()) throw ConfigError("section [" + section + "] cannot hold a value");
    for (const auto& [key, value] : body)
      if (!it->second.count(key)) throw ConfigError("unknown config key " + section + "." + key);
  }
  auto get = [&](const std::string& path) -> std::optional<std::string> {
    if (auto v = tree.get_optional<std::string>(pt::ptree::path_type(path, '.'))) return trim(*v);
    return std::nullopt;
  };

  RunConfig rc;
  SchemeConfig& sc = rc.scheme;
  if (auto v = get("scheme.kind")) sc.scheme = parse_scheme(*v);
  if (auto v = get("scheme.aux")) sc.aux = parse_aux(*v);
  if (auto v = get("scheme.alpha")) sc.alpha = to_double("scheme.alpha", *v);
  if (auto v = get("scheme.L")) {
    const double L = to_double("scheme.L", *v);
    auto* convex = std::get_if<ConvexAux>(&sc.aux);
    if (!convex) throw ConfigError("scheme.L applies to convex auxiliary functions only");
    *convex = convex->with_L(L);
  }
  if (auto v = get("scheme.forcing")) sc.forcing = parse_forcing(*v);
  if (auto v = get("scheme.reduced")) sc.reduced = to_bool("scheme.reduced", *v);

  if (auto v = get("model.flow")) sc.params.flow = parse_flow(*v);
  if (auto v = get("model.mobility")) sc.params.mobility = to_double("model.mobility", *v);
  if (auto v = get("model.epsilon")) sc.params.epsilon = to_double("model.epsilon", *v);
  if (auto v = get("model.a1")) sc.params.a1 = to_double("model.a1", *v);
  if (auto v = get("model.a2")) sc.params.a2 = to_double("model.a2", *v);

  if (auto v = get("grid.n")) rc.nx = rc.ny = static_cast<int>(to_long("grid.n", *v));
  if (auto v = get("grid.nx")) rc.nx = static_cast<int>(to_long("grid.nx", *v));
  if (auto v = get("grid.ny")) rc.ny = static_cast<int>(to_long("grid.ny", *v));

  if (auto v = get("time.dt")) sc.dt = to_double("time.dt", *v);
  if (auto v = get("time.dts")) rc.dts = to_list("time.dts", *v);
  if (auto v = get("time.t0")) sc.t0 = to_double("time.t0", *v);
  if (auto v = get("time.t_end")) rc.t_end = to_double("time.t_end", *v);

  if (auto v = get("ic.kind")) rc.ic.kind = parse_ic(*v);
  if (auto v = get("ic.r1")) rc.ic.r1 = to_double("ic.r1", *v);
  if (auto v = get("ic.seed")) {
    const long seed = to_long("ic.seed", *v);
    if (seed < 0) throw ConfigError("ic.seed must be nonnegative");
    rc.ic.seed = static_cast<std::uint64_t>(seed);
  }
  if (auto v = get("ic.value")) rc.ic.value = to_double("ic.value", *v);

  if (auto v = get("solver.tol")) sc.solver.tol = to_double("solver.tol", *v);
  if (auto v = get("solver.max_iter")) sc.solver.max_iter = static_cast<int>(to_long("solver.max_iter", *v));

  if (auto v = get("output.label")) rc.label = *v;
  if (auto v = get("output.snapshot_every")) rc.snapshot_every = to_double("output.snapshot_every", *v);
  return rc;
}

}  // namespace gradflow::cli
