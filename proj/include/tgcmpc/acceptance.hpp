#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "tgcmpc/model.hpp"

namespace tgcmpc::acceptance {

/// Published reference results for the bundled three-state example.
struct Reference {
  Eigen::MatrixXd K;
  Eigen::MatrixXd P;
  Eigen::MatrixXd Rbar;
  Eigen::MatrixXd E_R_inv;
  double a_alpha = 0.0;
  Eigen::VectorXd a_sigma;
  double trace_P = 0.0;
  double lambda_star = 0.0;
  Eigen::VectorXd ray;
};

Reference load_reference(const std::string& path);

struct Check {
  std::string name;
  double value = 0.0;
  double limit = 0.0;
  bool passed = false;
  std::string note;
};

struct CriterionResult {
  int id = 0;
  std::string name;
  std::vector<Check> checks;
  std::string error;  // set when the criterion could not run

  bool passed() const;
};

struct Options {
  std::string problem_path;
  std::string reference_path;
  /// Added to entry (0, 0) of every gain whose certificate is checked in
  /// criterion 1; used to demonstrate that the check is live.
  double perturb_K = 0.0;
  int closed_loop_runs = 100;
  int rollout_runs = 200;
  double solver_tol = 1e-8;
  bool parallel = true;
};

Options default_options();

std::vector<CriterionResult> run_acceptance(const Options& options);

/// "[PASS] 3 name: check value (limit), ..." one line per criterion.
std::string format_line(const CriterionResult& r);

}  // namespace tgcmpc::acceptance
