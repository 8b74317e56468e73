// Runs the gradflow executable and checks exit codes and outputs.

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "oracles.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path& out_root() {
  static const fs::path root = [] {
    const fs::path p = fs::temp_directory_path() / "gradflow_cli_tests";
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
  }();
  return root;
}

int run(const std::string& args) {
  const std::string cmd = std::string(GRADFLOW_EXE) + " " + args + " --out " + out_root().string() +
                          " > " + (out_root() / "last.log").string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

int run_bare(const std::string& args) {
  const std::string cmd = std::string(GRADFLOW_EXE) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<double> read_column(const fs::path& p) {
  std::ifstream in(p);
  std::vector<double> v;
  for (double x; in >> x;) v.push_back(x);
  return v;
}

}  // namespace

TEST(CliExitCodes, UsageErrors) {
  EXPECT_EQ(run_bare(""), 64);
  EXPECT_EQ(run_bare("frobnicate"), 64);
  EXPECT_EQ(run_bare("accuracy --no-such-flag"), 64);
  EXPECT_EQ(run_bare("--help"), 0);
}

TEST(CliExitCodes, AlphaBelowHalfIsRejected) {
  EXPECT_EQ(run("accuracy --config table1_softplus --alpha 0.4"), 2);
  EXPECT_NE(slurp(out_root() / "last.log").find("alpha"), std::string::npos);
}

TEST(CliExitCodes, ConfigErrors) {
  EXPECT_EQ(run("accuracy --config no_such_config"), 2);
  EXPECT_EQ(run("accuracy --set bogus.key=1"), 2);
  EXPECT_EQ(run("accuracy --forcing analytic --grid 3 --dts 0.1 --t-end 0.2"), 2);
  EXPECT_EQ(run("energy --dt 0.3 --t-end 1"), 2);
  EXPECT_EQ(run("coarsen --flow allen-cahn --grid 8 --dt 0.1 --t-end 0.2 --snapshot-every 0.1"), 2);
  EXPECT_EQ(run("energy --scheme ief --aux softplus"), 2);
}

TEST(CliExitCodes, ValidatePasses) { EXPECT_EQ(run_bare("validate"), 0); }

TEST(CliRuns, StepDebugMatchesDenseOracle) {
  for (const char* args : {"--scheme iec --aux softplus", "--scheme ief --aux power:p=3 --flow cahn-hilliard"}) {
    ASSERT_EQ(run(std::string("step-debug ") + args + " --label sd"), 0) << args;
    const std::string sub = std::string(args).find("ief") != std::string::npos ? "step-debug_ief_power-p-3_sd"
                                                                                : "step-debug_iec_softplus_sd";
    const fs::path dir = out_root() / sub;
    std::ifstream in(dir / "matrix.txt");
    int rows = 0, cols = 0;
    std::size_t nnz = 0;
    in >> rows >> cols >> nnz;
    oracle::Dense m(rows);
    for (std::size_t k = 0; k < nnz; ++k) {
      int r = 0, c = 0;
      double v = 0.0;
      in >> r >> c >> v;
      m(r, c) += v;
    }
    const auto x = oracle::gauss_solve(m, read_column(dir / "rhs.txt"));
    EXPECT_LT(oracle::max_diff(x, read_column(dir / "solution.txt")), 1e-10);
  }
}

TEST(CliRuns, AccuracyTableOneFirstRow) {
  ASSERT_EQ(run("accuracy --config table1_softplus --dts 0.1 --label first"), 0);
  const std::string csv = slurp(out_root() / "accuracy_iec_softplus_first" / "accuracy.csv");
  const auto line = csv.substr(csv.find('\n') + 1);
  std::stringstream row(line);
  std::string cell;
  std::vector<std::string> cells;
  while (std::getline(row, cell, ',')) cells.push_back(cell);
  ASSERT_GE(cells.size(), 7u);
  EXPECT_NEAR(std::stod(cells[6]), 0.094215, 0.15 * 0.094215);
}

TEST(CliRuns, IdenticalRunsGiveIdenticalCsv) {
  const std::string args = "energy --scheme ief --aux power:p=7 --ic random --seed 5 --grid 10 --dt 0.01 --t-end 0.2";
  ASSERT_EQ(run(args + " --label d1"), 0);
  ASSERT_EQ(run(args + " --label d2"), 0);
  const std::string a = slurp(out_root() / "energy_ief_power-p-7_d1" / "energy_dt0.01.csv");
  EXPECT_FALSE(a.empty());
  EXPECT_EQ(a, slurp(out_root() / "energy_ief_power-p-7_d2" / "energy_dt0.01.csv"));
}

TEST(CliRuns, FlagsOverrideSetOverridesFile) {
  ASSERT_EQ(run("accuracy --config table1_softplus --set grid.n=8 --set time.dts=0.5 --t-end 0.5 --label p"), 0);
  const std::string csv = slurp(out_root() / "accuracy_iec_softplus_p" / "accuracy.csv");
  EXPECT_NE(csv.find(",0.5,"), std::string::npos);
}
