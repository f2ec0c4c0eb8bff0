#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "tgcmpc/conic.hpp"
#include "tgcmpc/model.hpp"
#include "tgcmpc/synthesis.hpp"

namespace tgcmpc {

/// Quantities of the online program that depend only on the offline data.
struct TubeConstants {
  Eigen::MatrixXd Abar;            // A - Bu K
  Eigen::MatrixXd Cbar_y;          // Cy - Dyu K
  Eigen::VectorXd Cy_alpha_norms;  // ||(Cy - Dyu K_R)_i E_R^{-1/2}||, one per block
  SymMatrix Rbar_sqrt;
  double kappa = 0.0;              // ||Rbar^{1/2} (K_R - K) E_R^{-1/2}||
  Eigen::MatrixXd Hbar;            // Hx - Hu K
  Eigen::VectorXd HbarR_alpha_norms;
  std::optional<SymMatrix> E_N;
  SymMatrix E_N_sqrt;
  double terminal_alpha_norm = 0.0;  // ||E_N^{1/2} E_R^{-1/2}||
};

TubeConstants precompute_tube_constants(const UncertainSystem& sys, const PolytopeConstraints& constraints,
                                        const GccSolution& gcc, const RpiSolution& rpi,
                                        const std::optional<SymMatrix>& E_N = std::nullopt);

/// E_N = c E_R with the smallest c that keeps {x : x' E_N x <= 1} inside the
/// constraint set under u = -K_R x. Throws DomainError if some row does not
/// depend on x (the scaling is then undefined).
SymMatrix terminal_weight_from_rpi(const PolytopeConstraints& constraints, const RpiSolution& rpi);

struct TubeProblem {
  UncertainSystem sys;
  CostSpec cost;
  PolytopeConstraints constraints;
  GccSolution gcc;
  RpiSolution rpi;
  TubeConstants consts;
  int N = 5;
  Eigen::VectorXd x0;
  double alpha0 = 0.0;
  bool use_terminal = false;
};

TubeProblem make_tube_problem(const Problem& problem, const GccSolution& gcc, const RpiSolution& rpi, int N,
                              const Eigen::VectorXd& x0, double alpha0 = 0.0,
                              const std::optional<SymMatrix>& E_N = std::nullopt);

struct TubeSolution {
  conic::SolveStatus status = conic::SolveStatus::numerical_failure;
  std::string message;
  std::vector<Eigen::VectorXd> z;   // N + 1
  std::vector<Eigen::VectorXd> nu;  // N
  Eigen::VectorXd alpha;            // N + 1
  Eigen::MatrixXd sigma;            // N x s
  Eigen::VectorXd gamma;            // N
  double objective = 0.0;           // x0' P x0 + sum gamma^2
  double solver_tolerance = 0.0;
  int iterations = 0;

  bool optimal() const { return status == conic::SolveStatus::optimal; }
};

conic::SolverSettings tube_settings();

conic::ConeProgram build_tube_socp(const TubeProblem& p);

/// Infeasibility is reported through the status, never thrown. After the
/// solve alpha, sigma and gamma are replaced by the smallest values the cone
/// constraints allow for the computed z and nu.
TubeSolution solve_tube(const TubeProblem& p, const conic::SolverSettings& settings = tube_settings());

/// u = -K x + nu_0 - (K_R - K)(x - z_0).
Eigen::VectorXd control_input(const TubeSolution& sol, const GccSolution& gcc, const RpiSolution& rpi,
                              const Eigen::VectorXd& x_measured);

/// x0' P x0 + sum gamma_k^2. UsageError unless the solution is optimal.
double cost_bound(const TubeSolution& sol, const GccSolution& gcc);

/// Columns k, z*, nu*, alpha, sigma*, gamma; the last row has no nu/sigma/gamma.
std::string tube_csv(const TubeSolution& sol);

}  // namespace tgcmpc
