#include <fstream>

#include <gtest/gtest.h>

#include "gradflow/errors.hpp"
#include "run_config.hpp"

using namespace gradflow;
using namespace gradflow::cli;
namespace pt = boost::property_tree;

namespace {

pt::ptree parse(const std::string& text) {
  const auto path = std::filesystem::temp_directory_path() / "gradflow_cfg_test.cfg";
  std::ofstream(path) << text;
  return read_config_file(path);
}

}  // namespace

TEST(RunConfig, Defaults) {
  const RunConfig rc = from_tree({});
  EXPECT_EQ(rc.nx, 40);
  EXPECT_EQ(rc.scheme.scheme, SchemeKind::IEC);
  EXPECT_EQ(aux_name(rc.scheme.aux), "softplus");
  EXPECT_EQ(rc.time_steps(), std::vector<double>{0.01});
  EXPECT_NO_THROW(rc.validate());
}

TEST(RunConfig, ParsesAllSections) {
  const RunConfig rc = from_tree(parse(R"(
[scheme]
kind = ief
aux = power:p=7
alpha = 1.5
forcing = analytic
reduced = true
[model]
flow = cahn-hilliard
mobility = 0.5
epsilon = 0.3
a1 = 3
a2 = 2
[grid]
nx = 16
ny = 20
[time]
dts = 0.1, 0.05 0.025
t_end = 0.5
[ic]
kind = random
seed = 9
[solver]
tol = 1e-12
max_iter = 50
[output]
label = x1
snapshot_every = 0.1
)"));
  EXPECT_EQ(rc.scheme.scheme, SchemeKind::IEF);
  EXPECT_EQ(rc.scheme.mono().exponent(), 7);
  EXPECT_EQ(rc.scheme.alpha, 1.5);
  EXPECT_EQ(rc.scheme.forcing, ForcingMode::Analytic);
  EXPECT_TRUE(rc.scheme.reduced);
  EXPECT_EQ(rc.scheme.params.flow, Flow::CahnHilliard);
  EXPECT_EQ(rc.scheme.params.a2, 2.0);
  EXPECT_EQ(rc.nx, 16);
  EXPECT_EQ(rc.ny, 20);
  EXPECT_EQ(rc.dts, (std::vector<double>{0.1, 0.05, 0.025}));
  EXPECT_EQ(rc.ic.kind, IcKind::Random);
  EXPECT_EQ(rc.ic.seed, 9u);
  EXPECT_EQ(rc.scheme.solver.max_iter, 50);
  EXPECT_EQ(rc.label, "x1");
  EXPECT_NO_THROW(rc.validate());
}

TEST(RunConfig, RejectsUnknownAndMalformed) {
  EXPECT_THROW(from_tree(parse("[scheme]\nflavor = x\n")), ConfigError);
  EXPECT_THROW(from_tree(parse("[mystery]\nkind = iec\n")), ConfigError);
  EXPECT_THROW(from_tree(parse("[scheme]\nalpha = half\n")), ConfigError);
  EXPECT_THROW(from_tree(parse("[grid]\nn = 4.5\n")), ConfigError);
  EXPECT_THROW(from_tree(parse("[scheme]\nreduced = maybe\n")), ConfigError);
  EXPECT_THROW(from_tree(parse("[ic]\nseed = -3\n")), ConfigError);
  EXPECT_THROW(from_tree(parse("[scheme]\naux = power:p=3\nL = 2\n")), ConfigError);
  EXPECT_THROW(read_config_file("/nonexistent/dir/x.cfg"), ConfigError);
}

TEST(RunConfig, ValidateCatchesBadRuns) {
  RunConfig rc = from_tree(parse("[scheme]\nalpha = 0.25\n"));
  EXPECT_THROW(rc.validate(), ConfigError);
  rc = from_tree(parse("[time]\ndt = 0.3\nt_end = 1\n"));
  EXPECT_THROW(rc.validate(), ConfigError);
  rc = from_tree(parse("[output]\nlabel = a/b\n"));
  EXPECT_THROW(rc.validate(), ConfigError);
}

TEST(RunConfig, SetKeyOverrides) {
  pt::ptree tree = parse("[grid]\nn = 40\n");
  set_key(tree, "grid.n=12");
  set_key(tree, "scheme.kind = csav");
  const RunConfig rc = from_tree(tree);
  EXPECT_EQ(rc.nx, 12);
  EXPECT_EQ(rc.scheme.scheme, SchemeKind::CSAV);
  EXPECT_THROW(set_key(tree, "gridn12"), ConfigError);
  EXPECT_THROW(set_key(tree, "grid=12"), ConfigError);
}

TEST(RunConfig, ShippedConfigsLoadAndValidate) {
  for (const auto& entry : std::filesystem::directory_iterator(GRADFLOW_SOURCE_CONFIGS)) {
    SCOPED_TRACE(entry.path().string());
    const RunConfig rc = from_tree(read_config_file(entry.path()));
    EXPECT_NO_THROW(rc.validate());
  }
  EXPECT_EQ(resolve_config("table1_softplus").filename(), "table1_softplus.cfg");
  EXPECT_THROW(resolve_config("no_such_config"), ConfigError);
}
