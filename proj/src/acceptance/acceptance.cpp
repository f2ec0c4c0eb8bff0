#include "tgcmpc/acceptance.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "tgcmpc/errors.hpp"
#include "tgcmpc/linalg.hpp"
#include "tgcmpc/problem_io.hpp"
#include "tgcmpc/sim.hpp"
#include "tgcmpc/synthesis.hpp"
#include "tgcmpc/tube.hpp"

namespace tgcmpc::acceptance {

namespace {

constexpr double kReferenceResidual = 1e-4;
constexpr double kTraceSlack = 1.01;
constexpr double kRbarRelTol = 0.02;
constexpr double kAlphaTol = 0.05;
constexpr double kErInvRelTol = 0.10;
constexpr double kResidualFactor = 10.0;
constexpr double kSettleNorm = 0.05;
constexpr int kSettleRuns = 95;
constexpr int kClosedLoopSteps = 30;
constexpr double kCostSlack = 1e-4;
constexpr double kContainTol = 1e-6;
constexpr double kDecayRatio = 0.1;

Check upper(std::string name, double value, double limit, std::string note = {}) {
  return {std::move(name), value, limit, value <= limit, std::move(note)};
}

Check lower(std::string name, double value, double limit, std::string note = {}) {
  return {std::move(name), value, limit, value >= limit, std::move(note)};
}

Check flag(std::string name, bool ok, std::string note = {}) {
  return {std::move(name), ok ? 1.0 : 0.0, 1.0, ok, std::move(note)};
}

double max_rel_error(const Eigen::MatrixXd& got, const Eigen::MatrixXd& ref) {
  if (got.rows() != ref.rows() || got.cols() != ref.cols()) return std::numeric_limits<double>::infinity();
  double worst = 0.0;
  for (Eigen::Index i = 0; i < ref.rows(); ++i)
    for (Eigen::Index j = 0; j < ref.cols(); ++j)
      worst = std::max(worst, std::abs(got(i, j) - ref(i, j)) / std::abs(ref(i, j)));
  return worst;
}

// Sign patterns on each block: Delta_i = +-[I 0].
std::vector<Eigen::MatrixXd> vertex_deltas(const UncertaintyStructure& st) {
  std::vector<Eigen::MatrixXd> out;
  const int s = st.s();
  for (int mask = 0; mask < (1 << s); ++mask) {
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(st.total_np(), st.total_nq());
    for (int i = 0; i < s; ++i) {
      const auto& b = st.blocks[i];
      const double sign = (mask >> i) & 1 ? -1.0 : 1.0;
      for (int k = 0; k < std::min(b.np, b.nq); ++k) d(st.p_offset(i) + k, st.q_offset(i) + k) = sign;
    }
    out.push_back(d);
  }
  return out;
}

double max_vertex_residual(const Problem& p, const Eigen::MatrixXd& K, const Eigen::MatrixXd& P) {
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& d : vertex_deltas(p.system.structure))
    worst = std::max(worst, gcc_certificate_residual(p.system, p.cost, K, P, d));
  return worst;
}

// Uniform sample from the unit ball of R^n.
Eigen::VectorXd ball_point(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = g(rng);
  return v.normalized() * std::pow(u(rng), 1.0 / n);
}

// Determinant by cofactor expansion along the first row.
double cofactor_det(const Eigen::MatrixXd& m) {
  const auto n = m.rows();
  if (n == 1) return m(0, 0);
  double det = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    Eigen::MatrixXd minor(n - 1, n - 1);
    for (Eigen::Index r = 1; r < n; ++r)
      for (Eigen::Index c = 0, cc = 0; c < n; ++c)
        if (c != j) minor(r - 1, cc++) = m(r, c);
    det += (j % 2 ? -1.0 : 1.0) * m(0, j) * cofactor_det(minor);
  }
  return det;
}

struct Context {
  Options options;
  Reference ref;
  Problem problem;
  conic::SolverSettings synth;
  conic::SolverSettings online;
  std::optional<GccSolution> gcc;
  std::optional<RpiSolution> rpi;
};

template <class F>
CriterionResult guarded(int id, std::string name, F&& body) {
  CriterionResult r;
  r.id = id;
  r.name = std::move(name);
  try {
    body(r);
  } catch (const std::exception& e) {
    r.error = e.what();
  }
  return r;
}

const GccSolution& need_gcc(const Context& c) {
  if (!c.gcc) throw UsageError("controller synthesis failed earlier");
  return *c.gcc;
}

const RpiSolution& need_rpi(const Context& c) {
  if (!c.rpi) throw UsageError("invariant set synthesis failed earlier");
  return *c.rpi;
}

CriterionResult gcc_certificate(Context& c) {
  return guarded(1, "gcc-certificate", [&](CriterionResult& r) {
    Eigen::MatrixXd K_ref = c.ref.K;
    K_ref(0, 0) += c.options.perturb_K;
    r.checks.push_back(upper("reference_vertex_residual", max_vertex_residual(c.problem, K_ref, c.ref.P),
                             kReferenceResidual));
    c.gcc = synthesize_gcc(c.problem.system, c.problem.cost, c.synth);
    r.checks.push_back(upper("trace_P", c.gcc->trace_P, c.ref.trace_P * kTraceSlack));
    Eigen::MatrixXd K = c.gcc->K;
    K(0, 0) += c.options.perturb_K;
    r.checks.push_back(upper("synthesized_vertex_residual", max_vertex_residual(c.problem, K, c.gcc->P.matrix()),
                             kResidualFactor * c.options.solver_tol * (1.0 + c.gcc->trace_P)));
  });
}

CriterionResult rbar(Context& c) {
  return guarded(2, "rbar", [&](CriterionResult& r) {
    const auto& g = need_gcc(c);
    SymMatrix Rb = compute_rbar(c.problem.system, c.problem.cost, g.P, g.upsilon);
    r.checks.push_back(upper("max_rel_error", max_rel_error(Rb.matrix(), c.ref.Rbar), kRbarRelTol));
  });
}

CriterionResult approx_mrpi(Context& c) {
  return guarded(3, "approx-mrpi", [&](CriterionResult& r) {
    const auto& g = need_gcc(c);
    const auto& sys = c.problem.system;
    const auto settings = c.synth;
    RpiSynth synth = [&](double a) { return synthesize_approx_mrpi(sys, a, g.K, settings); };
    auto attempts = c.options.parallel ? scan_a_alpha(synth, AlphaGrid{}) : scan_a_alpha_serial(synth, AlphaGrid{});
    c.rpi = select_best(attempts, RpiRanking::logdet);
    const auto& rpi = *c.rpi;

    r.checks.push_back(upper("a_alpha_error", std::abs(rpi.a_alpha - c.ref.a_alpha), kAlphaTol));
    double sig_err = 0.0;
    if (rpi.a_sigma.size() != c.ref.a_sigma.size()) {
      sig_err = std::numeric_limits<double>::infinity();
    } else {
      sig_err = (rpi.a_sigma - c.ref.a_sigma).cwiseAbs().maxCoeff();
    }
    r.checks.push_back(upper("a_sigma_error", sig_err, kAlphaTol));
    r.checks.push_back(
        upper("E_R_inv_rel_error", max_rel_error(sym_inverse(rpi.E_R).matrix(), c.ref.E_R_inv), kErInvRelTol));

    const double limit = kResidualFactor * c.options.solver_tol;
    r.checks.push_back(upper("approx_residual", rpi_certificate_residual(sys, rpi), limit));
    auto exact = synthesize_mrpi(sys, g.K, rpi.a_alpha, settings);
    if (!exact.solution) {
      r.checks.push_back(flag("mrpi_solved", false, exact.message));
    } else {
      r.checks.push_back(upper("mrpi_residual", rpi_certificate_residual(sys, *exact.solution), limit));
    }
  });
}

CriterionResult feasibility(Context& c) {
  return guarded(4, "feasibility-boundary", [&](CriterionResult& r) {
    const auto& g = need_gcc(c);
    const auto& rpi = need_rpi(c);
    SweepOptions so;
    so.N = 5;
    so.settings = c.online;
    auto sweep = c.options.parallel ? feasibility_sweep(c.problem, g, rpi, c.ref.ray, so)
                                    : feasibility_sweep_serial(c.problem, g, rpi, c.ref.ray, so);
    r.checks.push_back(lower("lambda_star_min", sweep.lambda_star, 0.75));
    r.checks.push_back(upper("lambda_star_max", sweep.lambda_star, 0.80));
    for (double lam : {0.46, 0.7, 0.9}) {
      auto tp = make_tube_problem(c.problem, g, rpi, 5, lam * c.ref.ray);
      auto sol = solve_tube(tp, c.online);
      const bool want = lam < 0.8;
      char name[48];
      std::snprintf(name, sizeof name, "%s_at_%.2f", want ? "feasible" : "infeasible", lam);
      r.checks.push_back(flag(name, sol.optimal() == want, to_string(sol.status)));
    }
  });
}

CriterionResult closed_loop(Context& c) {
  return guarded(5, "closed-loop", [&](CriterionResult& r) {
    const auto& g = need_gcc(c);
    const auto& rpi = need_rpi(c);
    Controller ctl;
    ctl.N = c.problem.horizon;
    ctl.settings = c.online;
    std::vector<DisturbanceModel> models;
    for (int i = 1; i <= c.options.closed_loop_runs; ++i)
      models.push_back({DisturbanceKind::boundary, static_cast<std::uint64_t>(i), {}});
    const Eigen::VectorXd x0 = 0.7 * c.ref.ray;
    auto traces = c.options.parallel ? closed_loop_batch(c.problem, g, rpi, ctl, x0, kClosedLoopSteps, models)
                                     : closed_loop_batch_serial(c.problem, g, rpi, ctl, x0, kClosedLoopSteps, models);
    int violations = 0, settled = 0, incomplete = 0;
    std::string first_status;
    for (const auto& t : traces) {
      violations += static_cast<int>(std::count(t.violated.begin(), t.violated.end(), true));
      if (!t.complete) {
        ++incomplete;
        if (first_status.empty()) first_status = t.status;
        continue;
      }
      if (t.x.back().lpNorm<Eigen::Infinity>() < kSettleNorm) ++settled;
    }
    r.checks.push_back(upper("violations", violations, 0));
    std::string note;
    if (incomplete > 0) note = std::to_string(incomplete) + " runs stopped, first: " + first_status;
    r.checks.push_back(lower("settled_runs", settled, kSettleRuns, note));
  });
}

// Criteria 6 and 7 share one batch of rollouts.
std::pair<CriterionResult, CriterionResult> rollouts(Context& c) {
  std::vector<Rollout> batch;
  double bound = 0.0;
  std::string failure;
  try {
    const auto& g = need_gcc(c);
    const auto& rpi = need_rpi(c);
    auto tp = make_tube_problem(c.problem, g, rpi, c.problem.horizon, 0.6 * c.ref.ray);
    auto plan = solve_tube(tp, c.online);
    if (!plan.optimal()) throw InfeasibleError("tube plan is " + std::string(to_string(plan.status)));
    bound = plan.objective;
    std::vector<DisturbanceModel> models;
    const int half = c.options.rollout_runs / 2;
    for (int i = 1; i <= half; ++i) models.push_back({DisturbanceKind::random_ball, static_cast<std::uint64_t>(i), {}});
    for (int i = 1; i <= c.options.rollout_runs - half; ++i)
      models.push_back({DisturbanceKind::boundary, static_cast<std::uint64_t>(i), {}});
    batch = c.options.parallel ? rollout_batch(tp, plan, models) : rollout_batch_serial(tp, plan, models);
  } catch (const std::exception& e) {
    failure = e.what();
  }

  auto cost = guarded(6, "cost-bound", [&](CriterionResult& r) {
    if (!failure.empty()) throw Error(failure);
    double worst = -std::numeric_limits<double>::infinity();
    for (const auto& ro : batch) worst = std::max(worst, ro.realized - ro.bound);
    r.checks.push_back(upper("max_excess", worst, kCostSlack * (1.0 + bound)));
  });
  auto contain = guarded(7, "tube-containment", [&](CriterionResult& r) {
    if (!failure.empty()) throw Error(failure);
    double worst = -std::numeric_limits<double>::infinity();
    for (const auto& ro : batch) worst = std::max(worst, ro.max_containment);
    r.checks.push_back(upper("max_containment", worst, kContainTol));
  });
  return {cost, contain};
}

CriterionResult scaling(Context& c) {
  return guarded(8, "socp-scaling", [&](CriterionResult& r) {
    const auto& g = need_gcc(c);
    const auto& rpi = need_rpi(c);
    const int s = c.problem.system.s();
    for (int N : {1, 5, 20}) {
      auto tp = make_tube_problem(c.problem, g, rpi, N, c.ref.ray);
      const int got = build_tube_socp(tp).count(conic::ConstraintKind::soc);
      const int want = N * (s + 2) + 1;
      r.checks.push_back({"soc_count_N" + std::to_string(N), static_cast<double>(got), static_cast<double>(want),
                          got == want, {}});
    }
  });
}

CriterionResult alpha_decay(Context& c) {
  return guarded(9, "alpha-decay", [&](CriterionResult& r) {
    const auto& g = need_gcc(c);
    const auto& rpi = need_rpi(c);
    auto tp = make_tube_problem(c.problem, g, rpi, 20, 0.6 * c.ref.ray);
    auto sol = solve_tube(tp, c.online);
    if (!sol.optimal()) throw InfeasibleError("N=20 plan is " + std::string(to_string(sol.status)));
    const double peak = sol.alpha.maxCoeff();
    r.checks.push_back(upper("final_over_peak", peak > 0 ? sol.alpha(20) / peak : 0.0, kDecayRatio));
  });
}

CriterionResult properties(Context& c) {
  return guarded(10, "property-suites", [&](CriterionResult& r) {
    const auto& rpi = need_rpi(c);
    const auto& sys = c.problem.system;
    std::mt19937_64 rng(20261016);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);

    // Unit ellipsoid maps into itself under every admissible Delta.
    const SymMatrix Einv_sqrt = sym_inv_sqrt(rpi.E_R);
    const Eigen::MatrixXd Acl = sys.A - sys.Bu * rpi.K_R;
    const Eigen::MatrixXd Ccl = sys.Cy - sys.Dyu * rpi.K_R;
    double worst = -1.0;
    for (int i = 0; i < 1000; ++i) {
      Eigen::VectorXd x = Einv_sqrt.matrix() * ball_point(rng, sys.nx());
      DisturbanceModel m{i % 2 ? DisturbanceKind::boundary : DisturbanceKind::random_ball,
                         static_cast<std::uint64_t>(i), {}};
      Eigen::MatrixXd d = sample_delta(sys.structure, m, 0);
      Eigen::VectorXd xn = Acl * x + sys.Bw * (d * (Ccl * x));
      worst = std::max(worst, xn.dot(rpi.E_R.matrix() * xn) - 1.0);
    }
    r.checks.push_back(upper("invariance_excess", worst, kContainTol));

    // alpha iteration at constant sigma converges below sigma.
    const double sbar = 0.8;
    Eigen::VectorXd sig = Eigen::VectorXd::Constant(sys.s(), sbar);
    double a = 0.0;
    for (int k = 0; k < 2000; ++k) a = rpi_step(rpi, a, sig);
    const double closed = sbar * std::sqrt(rpi.a_sigma.sum() / (1.0 - rpi.a_alpha));
    r.checks.push_back(upper("fixed_point_over_sigma", a / sbar, 1.0 + 1e-9));
    r.checks.push_back(upper("fixed_point_error", std::abs(a - closed), 1e-9));

    // sigma_i = eps * alpha with eps < 1 shrinks alpha by sqrt(a_alpha + eps^2 sum a_sigma).
    double contraction = 0.0;
    for (double eps : {0.25, 0.5, 0.9, 0.99}) {
      const double alpha = 1.7;
      const double next = rpi_step(rpi, alpha, Eigen::VectorXd::Constant(sys.s(), eps * alpha));
      const double rate = std::sqrt(rpi.a_alpha + eps * eps * rpi.a_sigma.sum());
      contraction = std::max(contraction, next / alpha);
      if (next > alpha * rate * (1 + 1e-12)) contraction = std::numeric_limits<double>::infinity();
    }
    Check ch = upper("contraction_rate", contraction, 1.0);
    ch.passed = contraction < 1.0;
    r.checks.push_back(ch);

    // Feedback form versus perturbed-matrix form.
    double gap = 0.0;
    for (int i = 0; i < 200; ++i) {
      DisturbanceModel m{DisturbanceKind::random_ball, static_cast<std::uint64_t>(1000 + i), {}};
      Eigen::MatrixXd d = sample_delta(sys.structure, m, i);
      Eigen::VectorXd x(sys.nx()), u(sys.nu());
      for (auto& v : x) v = unit(rng);
      for (auto& v : u) v = unit(rng);
      auto ev = evaluate_uncertainty(sys, d, x, u);
      auto [Ad, Bd] = perturbed_matrices(sys, d);
      gap = std::max(gap, (ev.x_next - (Ad * x + Bd * u)).lpNorm<Eigen::Infinity>());
    }
    r.checks.push_back(upper("model_forms_gap", gap, 1e-12));

    // Square root and log-determinant against direct oracles.
    double sqrt_err = 0.0, logdet_err = 0.0;
    for (int i = 0; i < 50; ++i) {
      Eigen::MatrixXd B(4, 4);
      for (auto& v : B.reshaped()) v = unit(rng);
      SymMatrix M(B * B.transpose() + 0.1 * Eigen::MatrixXd::Identity(4, 4));
      SymMatrix S = sym_sqrt(M);
      sqrt_err = std::max(sqrt_err, (S.matrix() * S.matrix() - M.matrix()).norm() / M.matrix().norm());
      logdet_err = std::max(logdet_err, std::abs(logdet(M) - std::log(cofactor_det(M.matrix()))));
    }
    r.checks.push_back(upper("sqrt_rel_error", sqrt_err, 1e-12));
    r.checks.push_back(upper("logdet_error", logdet_err, 1e-10));
  });
}

}  // namespace

bool CriterionResult::passed() const {
  if (!error.empty() || checks.empty()) return false;
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

Reference load_reference(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open reference file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  Reference r;
  try {
    r.K = matrix_from_json(j.at("K"), "K");
    r.P = matrix_from_json(j.at("P"), "P");
    r.Rbar = matrix_from_json(j.at("Rbar"), "Rbar");
    r.E_R_inv = matrix_from_json(j.at("E_R_inv"), "E_R_inv");
    r.a_alpha = j.at("a_alpha").get<double>();
    r.a_sigma = vector_from_json(j.at("a_sigma"), "a_sigma");
    r.trace_P = j.at("trace_P").get<double>();
    r.lambda_star = j.at("lambda_star").get<double>();
    r.ray = vector_from_json(j.at("ray"), "ray");
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return r;
}

Options default_options() {
  Options o;
  o.problem_path = std::string(TGCMPC_DATA_DIR) + "/three_state_example.json";
  o.reference_path = std::string(TGCMPC_DATA_DIR) + "/three_state_reference.json";
  return o;
}

std::vector<CriterionResult> run_acceptance(const Options& options) {
  Context c;
  c.options = options;
  c.problem = load_problem(options.problem_path);
  c.ref = load_reference(options.reference_path);
  if (c.ref.ray.size() != c.problem.system.nx()) throw ConfigError("reference ray does not match the state dimension");
  c.synth = synthesis_settings();
  c.synth.feas_tol = options.solver_tol;
  c.online = tube_settings();
  c.online.feas_tol = options.solver_tol;

  std::vector<CriterionResult> out;
  out.push_back(gcc_certificate(c));
  out.push_back(rbar(c));
  out.push_back(approx_mrpi(c));
  out.push_back(feasibility(c));
  out.push_back(closed_loop(c));
  auto [cost, contain] = rollouts(c);
  out.push_back(cost);
  out.push_back(contain);
  out.push_back(scaling(c));
  out.push_back(alpha_decay(c));
  out.push_back(properties(c));
  return out;
}

std::string format_line(const CriterionResult& r) {
  std::ostringstream os;
  os << (r.passed() ? "[PASS] " : "[FAIL] ") << r.id << ' ' << r.name << ':';
  if (!r.error.empty()) os << " error: " << r.error;
  char buf[160];
  bool first = true;
  for (const auto& ch : r.checks) {
    std::snprintf(buf, sizeof buf, "%s %s=%.6g (limit %.6g)%s", first ? "" : ",", ch.name.c_str(), ch.value,
                  ch.limit, ch.passed ? "" : " !");
    os << buf;
    if (!ch.note.empty()) os << " [" << ch.note << ']';
    first = false;
  }
  return os.str();
}

}  // namespace tgcmpc::acceptance
