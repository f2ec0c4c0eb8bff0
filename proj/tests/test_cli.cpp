#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <unistd.h>

#include <nlohmann/json.hpp>

#include "oracles.hpp"
#include "tgcmpc/cli.hpp"

namespace fs = std::filesystem;
using namespace tgcmpc::cli;

namespace {

struct Result {
  int code = -1;
  std::string out;
  std::string err;

  std::map<std::string, std::string> keys() const {
    std::map<std::string, std::string> m;
    std::istringstream in(out);
    std::string line;
    while (std::getline(in, line)) {
      const auto eq = line.find('=');
      if (eq != std::string::npos && line.find(' ') > eq) m[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return m;
  }
};

Result run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "tgcmpc");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Result r;
  r.code = run(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = fs::temp_directory_path() / ("tgcmpc_cli_" + std::to_string(::getpid()));
    fs::create_directories(dir_);
    offline_ = (dir_ / "offline").string();
    const Result r = run_cli({"synthesize", "--problem", problem(), "--out", offline_});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  static void TearDownTestSuite() { fs::remove_all(dir_); }

  static std::string problem() { return oracle::data_file("three_state_example.json"); }
  static std::string out(const char* name) { return (dir_ / name).string(); }

  static fs::path dir_;
  static std::string offline_;
};

fs::path Cli::dir_;
std::string Cli::offline_;

}  // namespace

TEST_F(Cli, SynthesizeWritesFilesAndIsDeterministic) {
  const Result r = run_cli({"synthesize", "--problem", problem(), "--out", out("syn")});
  ASSERT_EQ(r.code, 0) << r.err;
  auto k = r.keys();
  EXPECT_NEAR(std::stod(k.at("trace_P")), 32.6947, 1e-3);
  EXPECT_EQ(k.at("a_alpha"), "0.5");
  EXPECT_EQ(slurp(fs::path(out("syn")) / "gcc.json"), slurp(fs::path(offline_) / "gcc.json"));
  EXPECT_EQ(slurp(fs::path(out("syn")) / "rpi.json"), slurp(fs::path(offline_) / "rpi.json"));
  const auto j = nlohmann::json::parse(slurp(fs::path(offline_) / "rpi.json"));
  EXPECT_EQ(j.at("method"), "approx");
}

TEST_F(Cli, SynthesizeWithoutControlAuthorityIsInfeasible) {
  const std::string path = out("no_input.json");
  std::ofstream(path) << R"({"system": {"A": [[2]], "Bu": [[0]], "Bw": [[0]], "Cy": [[0]], "Dyu": [[0]],
                                         "blocks": [[1, 1]]},
                              "cost": {"Q": [[1]], "R": [[1]]}})";
  const Result r = run_cli({"synthesize", "--problem", path, "--out", out("noin")});
  EXPECT_EQ(r.code, 2) << r.err;
  EXPECT_NE(r.err.find("no guaranteed cost controller"), std::string::npos) << r.err;
}

TEST_F(Cli, TubeLongHorizonTubeRisesThenShrinks) {
  const Result r = run_cli({"tube", "--problem", problem(), "--out", out("tube20"), "--offline", offline_, "--lambda",
                            "0.6", "--horizon", "20"});
  ASSERT_EQ(r.code, 0) << r.err;
  auto k = r.keys();
  EXPECT_EQ(k.at("status"), "optimal");
  EXPECT_LT(std::stod(k.at("alpha_final")), std::stod(k.at("alpha_max")));
  EXPECT_TRUE(fs::exists(fs::path(out("tube20")) / "tube.svg"));
  std::istringstream csv(slurp(fs::path(out("tube20")) / "tube.csv"));
  std::string line;
  std::getline(csv, line);
  std::vector<double> alpha;
  while (std::getline(csv, line)) {
    std::stringstream row(line);
    std::string cell;
    for (int c = 0; c <= 6; ++c) std::getline(row, cell, ',');
    alpha.push_back(std::stod(cell));
  }
  ASSERT_EQ(alpha.size(), 21u);
  EXPECT_EQ(alpha.front(), 0.0);
  EXPECT_GT(alpha[1], 0.0);
}

TEST_F(Cli, TubeAtOriginIsZero) {
  const Result r =
      run_cli({"tube", "--problem", problem(), "--out", out("tube0"), "--offline", offline_, "--x0", "0,0,0"});
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream csv(slurp(fs::path(out("tube0")) / "tube.csv"));
  std::string line;
  std::getline(csv, line);
  while (std::getline(csv, line)) {
    std::stringstream row(line);
    std::string cell;
    std::getline(row, cell, ',');  // k
    while (std::getline(row, cell, ','))
      if (!cell.empty()) EXPECT_LE(std::abs(std::stod(cell)), 1e-12) << line;
  }
}

TEST_F(Cli, TubeOutsideFeasibleRegionExitsTwo) {
  const Result r =
      run_cli({"tube", "--problem", problem(), "--out", out("tube9"), "--offline", offline_, "--lambda", "0.9"});
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(r.keys().at("status"), "infeasible");
}

TEST_F(Cli, SimulateWritesTraceAndBound) {
  const Result r = run_cli({"simulate", "--problem", problem(), "--out", out("sim"), "--offline", offline_, "--lambda",
                            "0.5", "--disturbance", "boundary", "--seed", "3", "--steps", "30"});
  ASSERT_EQ(r.code, 0) << r.err;
  auto k = r.keys();
  EXPECT_EQ(k.at("status"), "complete");
  EXPECT_EQ(k.at("violations"), "0");
  EXPECT_LT(std::stod(k.at("final_inf_norm")), 0.05);
  EXPECT_TRUE(fs::exists(fs::path(out("sim")) / "trace.csv"));
  EXPECT_TRUE(fs::exists(fs::path(out("sim")) / "trace.svg"));
  const Result again = run_cli({"simulate", "--problem", problem(), "--out", out("sim2"), "--offline", offline_,
                                "--lambda", "0.5", "--disturbance", "boundary", "--seed", "3", "--steps", "30"});
  EXPECT_EQ(slurp(fs::path(out("sim")) / "trace.csv"), slurp(fs::path(out("sim2")) / "trace.csv"));
}

TEST_F(Cli, SimulateGccBaselineAtOrigin) {
  const Result r = run_cli({"simulate", "--problem", problem(), "--out", out("gcc0"), "--controller", "gcc", "--x0",
                            "0,0,0", "--disturbance", "zero", "--steps", "5"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(std::stod(r.keys().at("realized_cost")), 0.0);
}

TEST_F(Cli, SweepPrintsBoundary) {
  const Result r = run_cli({"sweep", "--problem", problem(), "--out", out("sweep"), "--offline", offline_});
  ASSERT_EQ(r.code, 0) << r.err;
  const double lam = std::stod(r.keys().at("lambda_star"));
  EXPECT_GT(lam, 0.0);
  EXPECT_LE(lam, 1.0);
  EXPECT_TRUE(fs::exists(fs::path(out("sweep")) / "sweep.csv"));
}

TEST_F(Cli, CheckDetectsPerturbedGain) {
  const Result r = run_cli({"check", "--perturb-k", "0.5"});
  EXPECT_EQ(r.code, 1);
  const auto first = r.out.substr(0, r.out.find('\n'));
  EXPECT_EQ(first.rfind("[FAIL] 1 gcc-certificate", 0), 0u) << first;
  EXPECT_NE(first.find("synthesized_vertex_residual"), std::string::npos);
  const auto pos = first.find("synthesized_vertex_residual");
  EXPECT_NE(first.find('!', pos), std::string::npos) << first;
}

TEST_F(Cli, ConfigErrorsExitThree) {
  EXPECT_EQ(run_cli({"check", "--problem", "/no/such/problem.json"}).code, 3);
  EXPECT_EQ(run_cli({"tube", "--problem", "/no/such/problem.json"}).code, 3);
  EXPECT_EQ(run_cli({"tube", "--problem", problem(), "--bogus"}).code, 3);
  EXPECT_EQ(run_cli({"simulate", "--problem", problem(), "--disturbance", "gust"}).code, 3);
  EXPECT_EQ(run_cli({}).code, 3);
  ::setenv("TGCMPC_SOLVER_TOL", "abc", 1);
  EXPECT_EQ(run_cli({"sweep", "--problem", problem(), "--offline", offline_, "--out", out("bad")}).code, 3);
  ::unsetenv("TGCMPC_SOLVER_TOL");
}

TEST_F(Cli, SolverToleranceFromEnvironment) {
  ::setenv("TGCMPC_SOLVER_TOL", "1e-6", 1);
  const Result r =
      run_cli({"tube", "--problem", problem(), "--out", out("loose"), "--offline", offline_, "--lambda", "0.3"});
  ::unsetenv("TGCMPC_SOLVER_TOL");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_LE(std::stod(r.keys().at("solver_tolerance")), 1e-6);
}
