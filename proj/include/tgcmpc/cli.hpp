#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace tgcmpc::cli {

/// Exit codes shared by every command.
enum ExitCode : int { kOk = 0, kCheckFailed = 1, kInfeasible = 2, kConfigError = 3 };

struct RunConfig {
  std::string command;
  std::string problem_path;
  std::string output_dir = ".";
  std::uint64_t seed = 1;
  std::optional<int> horizon;
  std::optional<double> a_alpha;
  std::string rpi_method = "approx";  // approx | mrpi
  bool terminal = false;
  std::string disturbance = "boundary";
  int steps = 30;
  int runs = 1;
  std::string controller = "tube";  // tube | gcc
  std::vector<double> x0;           // empty: problem x0
  std::optional<double> lambda;     // x0 = lambda * direction
  std::vector<double> direction;    // empty: problem x0 scaled to unit max-norm
  double lambda_max = 1.0;
  double tol = 5e-3;
  std::string offline_dir;          // read gcc.json / rpi.json from here
  std::string reference_path;       // check only
  double perturb_k = 0.0;           // check only
  std::optional<double> solver_tol; // from TGCMPC_SOLVER_TOL
};

int cmd_synthesize(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_tube(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_simulate(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_sweep(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_check(const RunConfig& cfg, std::ostream& out, std::ostream& err);

/// Parses argv, reads TGCMPC_SOLVER_TOL and dispatches. Errors map to the
/// exit codes above.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace tgcmpc::cli
