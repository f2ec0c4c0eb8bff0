#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

#include "tgcmpc/errors.hpp"
#include "tgcmpc/sim.hpp"

namespace tgcmpc {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

DisturbanceKind parse_disturbance_kind(const std::string& name) {
  if (name == "zero") return DisturbanceKind::zero;
  if (name == "ball" || name == "random_ball") return DisturbanceKind::random_ball;
  if (name == "boundary") return DisturbanceKind::boundary;
  throw ConfigError("unknown disturbance kind '" + name + "' (expected zero, ball or boundary)");
}

const char* to_string(DisturbanceKind k) {
  switch (k) {
    case DisturbanceKind::zero:
      return "zero";
    case DisturbanceKind::random_ball:
      return "ball";
    case DisturbanceKind::boundary:
      return "boundary";
    case DisturbanceKind::fixed_sequence:
      return "fixed_sequence";
  }
  return "?";
}

Eigen::MatrixXd sample_delta(const UncertaintyStructure& structure, const DisturbanceModel& model, int k) {
  const int np = structure.total_np(), nq = structure.total_nq();
  if (model.kind == DisturbanceKind::zero) return Eigen::MatrixXd::Zero(np, nq);
  if (model.kind == DisturbanceKind::fixed_sequence) {
    if (k < 0 || k >= static_cast<int>(model.sequence.size()))
      throw IndexError("fixed disturbance sequence has no entry for step " + std::to_string(k));
    check_admissible(structure, model.sequence[k]);
    return model.sequence[k];
  }
  // One generator per (seed, step) so any step can be drawn independently.
  std::seed_seq seq{static_cast<std::uint32_t>(model.seed & 0xffffffffu), static_cast<std::uint32_t>(model.seed >> 32),
                    static_cast<std::uint32_t>(k)};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> uniform;

  Eigen::MatrixXd delta = Eigen::MatrixXd::Zero(np, nq);
  for (int i = 0; i < structure.s(); ++i) {
    const auto& b = structure.blocks[i];
    Eigen::MatrixXd G(b.np, b.nq);
    double norm = 0.0;
    do {
      for (int r = 0; r < b.np; ++r)
        for (int c = 0; c < b.nq; ++c) G(r, c) = normal(rng);
      norm = spectral_norm(G);
    } while (!(norm > 1e-12));
    G /= norm;
    if (model.kind == DisturbanceKind::random_ball) G *= std::pow(uniform(rng), 1.0 / (b.np * b.nq));
    delta.block(structure.p_offset(i), structure.q_offset(i), b.np, b.nq) = G;
  }
  return delta;
}

SimTrace run_closed_loop(const Problem& problem, const GccSolution& gcc, const std::optional<RpiSolution>& rpi,
                         const Controller& controller, const Eigen::VectorXd& x0, int steps,
                         const DisturbanceModel& model) {
  if (steps < 0) throw DomainError("steps must be nonnegative");
  if (x0.size() != problem.system.nx()) throw DimensionError("x0 must have nx entries");
  std::optional<TubeProblem> tp;
  if (controller.kind == ControllerKind::tube) {
    if (!rpi) throw UsageError("tube controller needs an RPI solution");
    tp = make_tube_problem(problem, gcc, *rpi, controller.N, x0);
  }

  SimTrace tr;
  Eigen::VectorXd x = x0;
  tr.x.push_back(x);
  for (int k = 0; k < steps; ++k) {
    Eigen::VectorXd u;
    if (tp) {
      tp->x0 = x;
      tp->alpha0 = 0.0;
      const TubeSolution sol = solve_tube(*tp, controller.settings);
      if (!sol.optimal()) {
        tr.complete = false;
        tr.status = "infeasible at step " + std::to_string(k);
        if (sol.status != conic::SolveStatus::infeasible) tr.status += " (" + std::string(to_string(sol.status)) + ")";
        break;
      }
      u = control_input(sol, gcc, *rpi, x);
      tr.z_ref.push_back(sol.z.front());
      tr.bounds.push_back(sol.objective);
    } else {
      u = -gcc.K * x;
    }
    const Eigen::MatrixXd delta = sample_delta(problem.system.structure, model, k);
    const UncertaintyEvaluation ev = evaluate_uncertainty(problem.system, delta, x, u);
    tr.u.push_back(u);
    tr.w.push_back(ev.w);
    tr.y.push_back(ev.y);
    tr.stage_costs.push_back(problem.cost.stage_cost(x, u));
    tr.violated.push_back(problem.constraints.ng() > 0 && problem.constraints.max_violation(x, u) > kViolationTol);
    x = ev.x_next;
    tr.x.push_back(x);
  }
  return tr;
}

double realized_cost(const SimTrace& trace, const GccSolution& gcc, int M) {
  if (M < 0 || static_cast<int>(trace.x.size()) < M + 1 || static_cast<int>(trace.stage_costs.size()) < M)
    throw DimensionError("realized_cost: trace shorter than M steps");
  double J = 0.0;
  for (int k = 0; k < M; ++k) J += trace.stage_costs[k];
  return J + trace.x[M].dot(gcc.P.matrix() * trace.x[M]);
}

Rollout open_loop_rollout(const TubeProblem& p, const TubeSolution& plan, const DisturbanceModel& model) {
  if (!plan.optimal()) throw UsageError("open_loop_rollout: plan is not optimal");
  const int N = static_cast<int>(plan.nu.size());
  const Eigen::MatrixXd dK = p.rpi.K_R - p.gcc.K;
  Rollout r;
  r.bound = cost_bound(plan, p.gcc);
  r.max_containment = -std::numeric_limits<double>::infinity();
  r.max_violation = -std::numeric_limits<double>::infinity();
  Eigen::VectorXd x = p.x0;
  r.trace.x.push_back(x);
  for (int k = 0; k <= N; ++k) {
    const Eigen::VectorXd e = x - plan.z[k];
    r.max_containment = std::max(r.max_containment, e.dot(p.rpi.E_R.matrix() * e) - plan.alpha(k) * plan.alpha(k));
    if (k == N) break;
    const Eigen::VectorXd u = -p.gcc.K * x + plan.nu[k] - dK * e;
    const Eigen::MatrixXd delta = sample_delta(p.sys.structure, model, k);
    const UncertaintyEvaluation ev = evaluate_uncertainty(p.sys, delta, x, u);
    r.trace.u.push_back(u);
    r.trace.w.push_back(ev.w);
    r.trace.y.push_back(ev.y);
    r.trace.z_ref.push_back(plan.z[k]);
    r.trace.stage_costs.push_back(p.cost.stage_cost(x, u));
    const double viol = p.constraints.ng() > 0 ? p.constraints.max_violation(x, u) : 0.0;
    r.max_violation = std::max(r.max_violation, viol);
    r.trace.violated.push_back(viol > kViolationTol);
    x = ev.x_next;
    r.trace.x.push_back(x);
  }
  r.realized = realized_cost(r.trace, p.gcc, N);
  return r;
}

std::vector<Rollout> rollout_batch_serial(const TubeProblem& p, const TubeSolution& plan,
                                          const std::vector<DisturbanceModel>& models) {
  std::vector<Rollout> out;
  out.reserve(models.size());
  for (const auto& m : models) out.push_back(open_loop_rollout(p, plan, m));
  return out;
}

std::vector<Rollout> rollout_batch(const TubeProblem& p, const TubeSolution& plan,
                                   const std::vector<DisturbanceModel>& models) {
  if (!plan.optimal()) throw UsageError("rollout_batch: plan is not optimal");
  std::vector<Rollout> out(models.size());
  const int n = static_cast<int>(models.size());
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) out[i] = open_loop_rollout(p, plan, models[i]);
  return out;
}

std::vector<SimTrace> closed_loop_batch_serial(const Problem& problem, const GccSolution& gcc,
                                               const std::optional<RpiSolution>& rpi, const Controller& controller,
                                               const Eigen::VectorXd& x0, int steps,
                                               const std::vector<DisturbanceModel>& models) {
  std::vector<SimTrace> out;
  out.reserve(models.size());
  for (const auto& m : models) out.push_back(run_closed_loop(problem, gcc, rpi, controller, x0, steps, m));
  return out;
}

std::vector<SimTrace> closed_loop_batch(const Problem& problem, const GccSolution& gcc,
                                        const std::optional<RpiSolution>& rpi, const Controller& controller,
                                        const Eigen::VectorXd& x0, int steps,
                                        const std::vector<DisturbanceModel>& models) {
  // Validate once up front: exceptions must not leave the parallel region.
  if (controller.kind == ControllerKind::tube && !rpi) throw UsageError("tube controller needs an RPI solution");
  if (x0.size() != problem.system.nx()) throw DimensionError("x0 must have nx entries");
  for (const auto& m : models)
    if (m.kind == DisturbanceKind::fixed_sequence && static_cast<int>(m.sequence.size()) < steps)
      throw IndexError("fixed disturbance sequence shorter than the run");
  std::vector<SimTrace> out(models.size());
  const int n = static_cast<int>(models.size());
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n; ++i) out[i] = run_closed_loop(problem, gcc, rpi, controller, x0, steps, models[i]);
  return out;
}

namespace {

SweepPoint probe(const TubeProblem& base, double lambda, const Eigen::VectorXd& direction,
                 const conic::SolverSettings& settings) {
  TubeProblem p = base;
  p.x0 = lambda * direction;
  const TubeSolution sol = solve_tube(p, settings);
  return {lambda, sol.optimal(), sol.optimal() ? sol.objective : 0.0};
}

SweepResult finish_sweep(const TubeProblem& base, const Eigen::VectorXd& direction, const SweepOptions& o,
                         std::vector<SweepPoint> scan) {
  if (!scan.front().feasible)
    throw ConfigError("feasibility sweep: the origin is infeasible; the tube program must admit x0 = 0");
  std::size_t first_bad = scan.size();
  for (std::size_t i = 0; i < scan.size(); ++i)
    if (!scan[i].feasible) {
      first_bad = i;
      break;
    }
  for (std::size_t i = first_bad; i < scan.size(); ++i)
    if (scan[i].feasible) {
      std::ostringstream os;
      os << "feasibility sweep: non-monotone pattern along the ray (infeasible at " << scan[first_bad].lambda
         << ", feasible again at " << scan[i].lambda << ")";
      throw DomainError(os.str());
    }
  SweepResult res;
  res.scan = scan;
  if (first_bad == scan.size()) {
    res.lambda_star = scan.back().lambda;
    return res;
  }
  double lo = scan[first_bad - 1].lambda, hi = scan[first_bad].lambda;
  while (hi - lo > o.tol) {
    const double mid = 0.5 * (lo + hi);
    const SweepPoint sp = probe(base, mid, direction, o.settings);
    res.scan.push_back(sp);
    (sp.feasible ? lo : hi) = mid;
  }
  res.lambda_star = lo;
  return res;
}

TubeProblem sweep_base(const Problem& problem, const GccSolution& gcc, const RpiSolution& rpi,
                       const Eigen::VectorXd& direction, const SweepOptions& o) {
  if (direction.size() != problem.system.nx()) throw DimensionError("sweep direction must have nx entries");
  if (!(direction.norm() > 0.0)) throw DomainError("sweep direction must be nonzero");
  if (!(o.tol > 0.0)) throw DomainError("sweep tolerance must be positive");
  if (!(o.lambda_max > 0.0)) throw DomainError("lambda_max must be positive");
  if (o.scan_points < 2) throw DomainError("sweep needs at least two scan points");
  return make_tube_problem(problem, gcc, rpi, o.N, Eigen::VectorXd::Zero(problem.system.nx()));
}

std::vector<double> scan_grid(const SweepOptions& o) {
  std::vector<double> g(o.scan_points);
  for (int i = 0; i < o.scan_points; ++i) g[i] = o.lambda_max * i / (o.scan_points - 1);
  return g;
}

}  // namespace

SweepResult feasibility_sweep_serial(const Problem& problem, const GccSolution& gcc, const RpiSolution& rpi,
                                     const Eigen::VectorXd& direction, const SweepOptions& options) {
  const TubeProblem base = sweep_base(problem, gcc, rpi, direction, options);
  std::vector<SweepPoint> scan;
  for (double l : scan_grid(options)) scan.push_back(probe(base, l, direction, options.settings));
  return finish_sweep(base, direction, options, scan);
}

SweepResult feasibility_sweep(const Problem& problem, const GccSolution& gcc, const RpiSolution& rpi,
                              const Eigen::VectorXd& direction, const SweepOptions& options) {
  const TubeProblem base = sweep_base(problem, gcc, rpi, direction, options);
  const std::vector<double> grid = scan_grid(options);
  std::vector<SweepPoint> scan(grid.size());
  const int n = static_cast<int>(grid.size());
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n; ++i) scan[i] = probe(base, grid[i], direction, options.settings);
  return finish_sweep(base, direction, options, scan);
}

std::string trace_csv(const SimTrace& trace) {
  const int M = trace.steps();
  const int nx = trace.x.empty() ? 0 : static_cast<int>(trace.x.front().size());
  const int nu = M ? static_cast<int>(trace.u.front().size()) : 0;
  const int np = M ? static_cast<int>(trace.w.front().size()) : 0;
  std::ostringstream os;
  os << "# nx=" << nx << " nu=" << nu << " np=" << np << " steps=" << M << " status=" << trace.status << '\n';
  os << "k";
  for (int i = 0; i < nx; ++i) os << ",x" << i;
  for (int i = 0; i < nu; ++i) os << ",u" << i;
  for (int i = 0; i < np; ++i) os << ",w" << i;
  os << ",stage_cost,violated\n";
  for (int k = 0; k < static_cast<int>(trace.x.size()); ++k) {
    os << k;
    for (int i = 0; i < nx; ++i) os << ',' << fmt(trace.x[k](i));
    const bool has = k < M;
    for (int i = 0; i < nu; ++i) os << ',' << (has ? fmt(trace.u[k](i)) : "");
    for (int i = 0; i < np; ++i) os << ',' << (has ? fmt(trace.w[k](i)) : "");
    os << ',' << (has ? fmt(trace.stage_costs[k]) : "") << ',' << (has ? (trace.violated[k] ? "1" : "0") : "") << '\n';
  }
  return os.str();
}

std::string sweep_csv(const SweepResult& sweep) {
  std::vector<SweepPoint> pts = sweep.scan;
  std::stable_sort(pts.begin(), pts.end(), [](const SweepPoint& a, const SweepPoint& b) { return a.lambda < b.lambda; });
  std::ostringstream os;
  os << "lambda,feasible,objective\n";
  for (const auto& p : pts) os << fmt(p.lambda) << ',' << (p.feasible ? 1 : 0) << ',' << (p.feasible ? fmt(p.objective) : "") << '\n';
  return os.str();
}

}  // namespace tgcmpc
