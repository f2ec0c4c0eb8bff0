#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tgcmpc/model.hpp"
#include "tgcmpc/synthesis.hpp"
#include "tgcmpc/tube.hpp"

namespace tgcmpc {

enum class DisturbanceKind { zero, random_ball, boundary, fixed_sequence };

struct DisturbanceModel {
  DisturbanceKind kind = DisturbanceKind::zero;
  std::uint64_t seed = 0;
  std::vector<Eigen::MatrixXd> sequence;  // fixed_sequence only
};

DisturbanceKind parse_disturbance_kind(const std::string& name);
const char* to_string(DisturbanceKind k);

/// Block-diagonal Delta for step k; a pure function of (model, k).
/// fixed_sequence past its end throws IndexError.
Eigen::MatrixXd sample_delta(const UncertaintyStructure& structure, const DisturbanceModel& model, int k);

struct SimTrace {
  std::vector<Eigen::VectorXd> x;       // steps + 1 when complete
  std::vector<Eigen::VectorXd> u;
  std::vector<Eigen::VectorXd> w;
  std::vector<Eigen::VectorXd> y;
  std::vector<Eigen::VectorXd> z_ref;   // nominal z_0 of each tube solve
  std::vector<double> stage_costs;
  std::vector<bool> violated;
  std::vector<double> bounds;           // tube cost bound of each solve
  bool complete = true;
  std::string status = "complete";

  int steps() const { return static_cast<int>(u.size()); }
};

enum class ControllerKind { gcc_only, tube };

struct Controller {
  ControllerKind kind = ControllerKind::tube;
  int N = 5;
  conic::SolverSettings settings = tube_settings();
};

constexpr double kViolationTol = 1e-6;

/// Receding-horizon (or pure GCC) closed loop. Tube mode re-solves with
/// z_0 = x_k, alpha_0 = 0 each step; an infeasible solve truncates the trace
/// with status "infeasible at step k".
SimTrace run_closed_loop(const Problem& problem, const GccSolution& gcc, const std::optional<RpiSolution>& rpi,
                         const Controller& controller, const Eigen::VectorXd& x0, int steps,
                         const DisturbanceModel& model);

/// sum_{k<M} stage_cost_k + x_M' P x_M.
double realized_cost(const SimTrace& trace, const GccSolution& gcc, int M);

/// Open-loop application of one tube plan: u_k = -K x_k + nu_k - (K_R - K)(x_k - z_k).
struct Rollout {
  SimTrace trace;
  double realized = 0.0;         // N-step cost + terminal P-cost
  double bound = 0.0;            // cost_bound of the plan
  double max_containment = 0.0;  // max_k e_k' E_R e_k - alpha_k^2
  double max_violation = 0.0;    // max_k max_i (Hx x + Hu u - g)_i
};

Rollout open_loop_rollout(const TubeProblem& p, const TubeSolution& plan, const DisturbanceModel& model);

/// OpenMP fan-out over models and the serial reference. Results are in model
/// order and bit-identical between the two.
std::vector<Rollout> rollout_batch(const TubeProblem& p, const TubeSolution& plan,
                                   const std::vector<DisturbanceModel>& models);
std::vector<Rollout> rollout_batch_serial(const TubeProblem& p, const TubeSolution& plan,
                                          const std::vector<DisturbanceModel>& models);

std::vector<SimTrace> closed_loop_batch(const Problem& problem, const GccSolution& gcc,
                                        const std::optional<RpiSolution>& rpi, const Controller& controller,
                                        const Eigen::VectorXd& x0, int steps,
                                        const std::vector<DisturbanceModel>& models);
std::vector<SimTrace> closed_loop_batch_serial(const Problem& problem, const GccSolution& gcc,
                                               const std::optional<RpiSolution>& rpi, const Controller& controller,
                                               const Eigen::VectorXd& x0, int steps,
                                               const std::vector<DisturbanceModel>& models);

struct SweepPoint {
  double lambda = 0.0;
  bool feasible = false;
  double objective = 0.0;
};

struct SweepResult {
  std::vector<SweepPoint> scan;  // coarse pre-scan, then bisection probes
  double lambda_star = 0.0;
};

struct SweepOptions {
  int N = 5;
  double lambda_max = 1.0;
  double tol = 5e-3;
  int scan_points = 16;
  conic::SolverSettings settings = tube_settings();
};

/// Largest feasible lambda (within tol) for x0 = lambda * direction, terminal
/// off, alpha_0 = 0. lambda = 0 infeasible is a ConfigError; a non-monotone
/// pre-scan is a DomainError.
SweepResult feasibility_sweep(const Problem& problem, const GccSolution& gcc, const RpiSolution& rpi,
                              const Eigen::VectorXd& direction, const SweepOptions& options);
SweepResult feasibility_sweep_serial(const Problem& problem, const GccSolution& gcc, const RpiSolution& rpi,
                                     const Eigen::VectorXd& direction, const SweepOptions& options);

std::string trace_csv(const SimTrace& trace);
std::string sweep_csv(const SweepResult& sweep);

}  // namespace tgcmpc
