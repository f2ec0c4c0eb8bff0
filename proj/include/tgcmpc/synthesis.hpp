#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tgcmpc/conic.hpp"
#include "tgcmpc/linalg.hpp"
#include "tgcmpc/model.hpp"

namespace tgcmpc {

/// Guaranteed cost controller u = -K x with cost matrix P = X^{-1}.
struct GccSolution {
  Eigen::MatrixXd K;
  SymMatrix P;
  SymMatrix X;
  Eigen::MatrixXd Y;
  Eigen::VectorXd upsilon;  // one S-procedure multiplier per uncertainty block
  double trace_P = 0.0;
  SymMatrix Rbar;
  SymMatrix P_N;  // terminal weight, equal to P
  double solver_tolerance = 0.0;
};

/// Ellipsoidal level-set family R(sigma) = {x : x' E_R x <= sigma^2} with tube
/// gain K_R and scalar dynamics alpha+ = sqrt(a_alpha alpha^2 + sum a_sigma_i sigma_i^2).
struct RpiSolution {
  SymMatrix E_R;
  Eigen::MatrixXd K_R;
  double a_alpha = 0.0;
  Eigen::VectorXd a_sigma;
  SymMatrix E_R_inv_sqrt;
  std::string method;     // "mrpi" or "approx"
  double objective = 0.0; // solver objective at this a_alpha
  double solver_tolerance = 0.0;
};

enum class RpiMethod { mrpi, approx };
/// Ranking used by the a_alpha line search: logdet ranks by ellipsoid volume
/// (-log det E_R), trace by tr(E_R^{-1}).
enum class RpiRanking { logdet, trace };

struct RpiAttempt {
  double a_alpha = 0.0;
  conic::SolveStatus status = conic::SolveStatus::numerical_failure;
  std::optional<RpiSolution> solution;
  std::string message;
};

struct AlphaGrid {
  double lo = 0.05;
  double hi = 0.95;
  int steps = 17;

  std::vector<double> points() const;
};

/// Default settings for the offline programs.
conic::SolverSettings synthesis_settings();

/// Multiplier-based LMI for the GCC with Z >= X^{-1}; objective tr(Z).
/// Variables: X (symmetric), Y (nu x nx, row-major), upsilon (s), Z (symmetric).
conic::ConeProgram build_gcc_lmi(const UncertainSystem& sys, const CostSpec& cost);

/// Throws InfeasibleError when no GCC exists, SolverError on numerical failure.
GccSolution synthesize_gcc(const UncertainSystem& sys, const CostSpec& cost,
                           const conic::SolverSettings& settings = synthesis_settings());

/// R + Dyu' Ups_q^{-1} Dyu + Bu' (P^{-1} - Bw Ups_p Bw')^{-1} Bu, symmetrized.
/// Throws DomainError when the inner matrix is not positive definite.
SymMatrix compute_rbar(const UncertainSystem& sys, const CostSpec& cost, const SymMatrix& P,
                       const Eigen::VectorXd& upsilon);

/// Largest eigenvalue of A_cl' P A_cl - P + Q + K'RK - NK - K'N' at the given
/// Delta, with A_cl = A + Bw Delta Cy - (Bu + Bw Delta Dyu) K.
double gcc_certificate_residual(const UncertainSystem& sys, const CostSpec& cost, const Eigen::MatrixXd& K,
                                const Eigen::MatrixXd& P, const Eigen::MatrixXd& delta);

/// sqrt(a_alpha alpha^2 + sum a_sigma_i sigma_i^2). Negative input is a DomainError.
double rpi_step(const RpiSolution& rpi, double alpha, const Eigen::VectorXd& sigma);

/// Minimal RPI program at fixed a_alpha and K_R, maximizing log det E.
conic::ConeProgram build_mrpi_program(const UncertainSystem& sys, const Eigen::MatrixXd& K_R, double a_alpha);

/// Approximate minimal RPI program (min tr X). With K_R given, Y = K_R X.
conic::ConeProgram build_approx_mrpi_program(const UncertainSystem& sys, double a_alpha,
                                             const std::optional<Eigen::MatrixXd>& K_R = std::nullopt);

RpiAttempt synthesize_mrpi(const UncertainSystem& sys, const Eigen::MatrixXd& K_R, double a_alpha,
                           const conic::SolverSettings& settings = synthesis_settings());

RpiAttempt synthesize_approx_mrpi(const UncertainSystem& sys, double a_alpha,
                                  const std::optional<Eigen::MatrixXd>& K_R = std::nullopt,
                                  const conic::SolverSettings& settings = synthesis_settings());

double rpi_rank(const RpiSolution& rpi, RpiRanking ranking);

using RpiSynth = std::function<RpiAttempt(double a_alpha)>;

/// Every grid point, in grid order.
std::vector<RpiAttempt> scan_a_alpha(const RpiSynth& synth, const AlphaGrid& grid);
std::vector<RpiAttempt> scan_a_alpha_serial(const RpiSynth& synth, const AlphaGrid& grid);

/// Best feasible grid point by rank, ties to the smallest a_alpha. Throws
/// InfeasibleError listing the grid when no point is feasible.
RpiSolution select_best(const std::vector<RpiAttempt>& attempts, RpiRanking ranking);

RpiSolution line_search_a_alpha(const RpiSynth& synth, const AlphaGrid& grid, RpiRanking ranking);

/// Largest violation of the fixed-a_alpha RPI conditions evaluated directly
/// on (E_R, K_R, a_alpha, a_sigma): the 3-block invariance LMI, the block
/// output bounds and the scalar budget.
double rpi_certificate_residual(const UncertainSystem& sys, const RpiSolution& rpi);

nlohmann::json gcc_to_json(const GccSolution& g);
GccSolution gcc_from_json(const nlohmann::json& j);
nlohmann::json rpi_to_json(const RpiSolution& r);
RpiSolution rpi_from_json(const nlohmann::json& j);

/// Fills E_R_inv_sqrt from E_R.
void finalize_rpi(RpiSolution& r);

}  // namespace tgcmpc
