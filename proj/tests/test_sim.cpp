#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "three_state.hpp"
#include "tgcmpc/errors.hpp"
#include "tgcmpc/sim.hpp"

using namespace tgcmpc;

namespace {

DisturbanceModel model(DisturbanceKind k, std::uint64_t seed) { return {k, seed, {}}; }

bool same_trace(const SimTrace& a, const SimTrace& b) {
  return a.x == b.x && a.u == b.u && a.w == b.w && a.stage_costs == b.stage_costs && a.status == b.status;
}

}  // namespace

TEST(SampleDelta, ZeroAndBoundary) {
  const auto st = UncertaintyStructure::scalar_blocks(2);
  EXPECT_EQ(sample_delta(st, model(DisturbanceKind::zero, 3), 4).norm(), 0.0);
  int pattern[4] = {0, 0, 0, 0};
  for (int k = 0; k < 200; ++k) {
    const Eigen::MatrixXd d = sample_delta(st, model(DisturbanceKind::boundary, 9), k);
    EXPECT_EQ(std::abs(d(0, 0)), 1.0);
    EXPECT_EQ(std::abs(d(1, 1)), 1.0);
    EXPECT_EQ(d(0, 1), 0.0);
    ++pattern[(d(0, 0) > 0) + 2 * (d(1, 1) > 0)];
  }
  for (int c : pattern) EXPECT_GT(c, 20);
}

TEST(SampleDelta, BallCoversTheInterior) {
  UncertaintyStructure st;
  st.blocks = {{1, 1}, {2, 3}};
  double lo = 1.0, hi = 0.0;
  int below_half = 0;
  for (int k = 0; k < 10000; ++k) {
    const Eigen::MatrixXd d = sample_delta(st, model(DisturbanceKind::random_ball, 5), k);
    check_admissible(st, d);
    const double n = spectral_norm(d.block(1, 1, 2, 3));
    lo = std::min(lo, n);
    hi = std::max(hi, n);
    if (n < 0.5) ++below_half;
  }
  EXPECT_LE(hi, 1.0 + 1e-12);
  EXPECT_GE(lo, 0.0);
  EXPECT_GT(hi, 0.99);
  EXPECT_LT(lo, 0.6);
  EXPECT_GT(below_half, 0);
}

TEST(SampleDelta, DeterministicAndSequence) {
  const auto st = UncertaintyStructure::scalar_blocks(2);
  EXPECT_EQ(sample_delta(st, model(DisturbanceKind::random_ball, 42), 7),
            sample_delta(st, model(DisturbanceKind::random_ball, 42), 7));
  EXPECT_NE(sample_delta(st, model(DisturbanceKind::random_ball, 42), 7),
            sample_delta(st, model(DisturbanceKind::random_ball, 43), 7));
  DisturbanceModel seq{DisturbanceKind::fixed_sequence, 0, {Eigen::MatrixXd::Identity(2, 2)}};
  EXPECT_EQ(sample_delta(st, seq, 0), Eigen::MatrixXd::Identity(2, 2));
  EXPECT_THROW(sample_delta(st, seq, 1), IndexError);
  EXPECT_EQ(parse_disturbance_kind("ball"), DisturbanceKind::random_ball);
  EXPECT_THROW(parse_disturbance_kind("gust"), ConfigError);
}

TEST(ClosedLoop, GccAtOriginStaysThere) {
  const auto& ex = ThreeState::get();
  Controller c;
  c.kind = ControllerKind::gcc_only;
  const auto t = run_closed_loop(ex.problem, ex.gcc, std::nullopt, c, Eigen::Vector3d::Zero(), 10,
                                 model(DisturbanceKind::zero, 0));
  ASSERT_TRUE(t.complete);
  for (const auto& x : t.x) EXPECT_EQ(x.norm(), 0.0);
  for (const auto& u : t.u) EXPECT_EQ(u.norm(), 0.0);
  EXPECT_EQ(realized_cost(t, ex.gcc, 10), 0.0);
}

TEST(ClosedLoop, TubeStabilizesWithoutDisturbance) {
  const auto& ex = ThreeState::get();
  const auto t = run_closed_loop(ex.problem, ex.gcc, ex.rpi, Controller{}, 0.5 * ex.ray, 30,
                                 model(DisturbanceKind::zero, 0));
  ASSERT_TRUE(t.complete) << t.status;
  EXPECT_EQ(std::count(t.violated.begin(), t.violated.end(), true), 0);
  EXPECT_LT(t.x.back().lpNorm<Eigen::Infinity>(), 0.05);
  EXPECT_EQ(t.z_ref.size(), 30u);
  // Stage costs follow the cost definition.
  for (int k = 0; k < t.steps(); ++k)
    EXPECT_NEAR(t.stage_costs[k], ex.problem.cost.stage_cost(t.x[k], t.u[k]), 1e-14);
}

TEST(ClosedLoop, InfeasibleStartTruncatesTrace) {
  const auto& ex = ThreeState::get();
  const auto t = run_closed_loop(ex.problem, ex.gcc, ex.rpi, Controller{}, 0.95 * ex.ray, 30,
                                 model(DisturbanceKind::boundary, 1));
  EXPECT_FALSE(t.complete);
  EXPECT_EQ(t.status, "infeasible at step 0");
  EXPECT_EQ(t.steps(), 0);
}

TEST(ClosedLoop, BoundaryRunsAreSafeAndDeterministic) {
  const auto& ex = ThreeState::get();
  std::vector<DisturbanceModel> models;
  for (int s = 1; s <= 100; ++s) models.push_back(model(DisturbanceKind::boundary, s));
  const auto par = closed_loop_batch(ex.problem, ex.gcc, ex.rpi, Controller{}, 0.5 * ex.ray, 30, models);
  for (const auto& t : par) {
    ASSERT_TRUE(t.complete) << t.status;
    EXPECT_EQ(std::count(t.violated.begin(), t.violated.end(), true), 0);
  }
  const std::vector<DisturbanceModel> few(models.begin(), models.begin() + 6);
  const auto ser = closed_loop_batch_serial(ex.problem, ex.gcc, ex.rpi, Controller{}, 0.5 * ex.ray, 30, few);
  for (std::size_t i = 0; i < few.size(); ++i) EXPECT_TRUE(same_trace(par[i], ser[i])) << i;
}

TEST(RealizedCost, SingleStepHandExpansion) {
  const auto& ex = ThreeState::get();
  Controller c;
  c.kind = ControllerKind::gcc_only;
  const Eigen::Vector3d x0(0.2, -0.1, 0.3);
  const auto t = run_closed_loop(ex.problem, ex.gcc, std::nullopt, c, x0, 1, model(DisturbanceKind::zero, 0));
  const Eigen::MatrixXd& K = ex.gcc.K;
  const auto& cost = ex.problem.cost;
  const Eigen::MatrixXd W = cost.Q.matrix() + K.transpose() * cost.R.matrix() * K - cost.N * K - K.transpose() * cost.N.transpose();
  const Eigen::VectorXd x1 = (ex.problem.system.A - ex.problem.system.Bu * K) * x0;
  const double want = x0.dot(W * x0) + x1.dot(ex.gcc.P.matrix() * x1);
  EXPECT_NEAR(realized_cost(t, ex.gcc, 1), want, 1e-12);
}

TEST(Rollout, ZeroDisturbanceTracksNominal) {
  const auto& ex = ThreeState::get();
  const auto tp = make_tube_problem(ex.problem, ex.gcc, ex.rpi, 5, 0.6 * ex.ray);
  const auto plan = solve_tube(tp);
  ASSERT_TRUE(plan.optimal());
  const auto r = open_loop_rollout(tp, plan, model(DisturbanceKind::zero, 0));
  for (int k = 0; k <= 5; ++k) EXPECT_LT((r.trace.x[k] - plan.z[k]).norm(), 1e-8) << k;
}

TEST(Rollout, BoundContainmentAndConstraintsHold) {
  const auto& ex = ThreeState::get();
  const auto tp = make_tube_problem(ex.problem, ex.gcc, ex.rpi, 5, 0.6 * ex.ray);
  const auto plan = solve_tube(tp);
  ASSERT_TRUE(plan.optimal());
  std::vector<DisturbanceModel> models;
  for (int s = 1; s <= 100; ++s) {
    models.push_back(model(DisturbanceKind::random_ball, s));
    models.push_back(model(DisturbanceKind::boundary, s));
  }
  const auto par = rollout_batch(tp, plan, models);
  const auto ser = rollout_batch_serial(tp, plan, models);
  ASSERT_EQ(par.size(), 200u);
  for (std::size_t i = 0; i < par.size(); ++i) {
    const auto& r = par[i];
    EXPECT_LE(r.realized, r.bound + 1e-4 * (1 + r.bound));
    EXPECT_LE(r.max_containment, 1e-6);
    EXPECT_LE(r.max_violation, 1e-6);
    EXPECT_TRUE(same_trace(r.trace, ser[i].trace));
    EXPECT_EQ(r.realized, ser[i].realized);
  }
}

TEST(Sweep, BoundaryIsConsistentAndParallelMatchesSerial) {
  const auto& ex = ThreeState::get();
  const SweepOptions opt;
  const auto par = feasibility_sweep(ex.problem, ex.gcc, ex.rpi, ex.ray, opt);
  const auto ser = feasibility_sweep_serial(ex.problem, ex.gcc, ex.rpi, ex.ray, opt);
  EXPECT_EQ(par.lambda_star, ser.lambda_star);
  EXPECT_LE(par.lambda_star, 1.0);
  EXPECT_TRUE(solve_tube(make_tube_problem(ex.problem, ex.gcc, ex.rpi, 5, par.lambda_star * ex.ray)).optimal());
  EXPECT_FALSE(
      solve_tube(make_tube_problem(ex.problem, ex.gcc, ex.rpi, 5, (par.lambda_star + opt.tol) * ex.ray)).optimal());
  // Halving the direction doubles the parameter.
  SweepOptions wide = opt;
  wide.lambda_max = 2.0;
  wide.tol = 2 * opt.tol;
  const auto half = feasibility_sweep(ex.problem, ex.gcc, ex.rpi, 0.5 * ex.ray, wide);
  EXPECT_NEAR(half.lambda_star, 2 * par.lambda_star, 2 * wide.tol);
  std::istringstream csv(sweep_csv(par));
  std::string header;
  std::getline(csv, header);
  EXPECT_EQ(header, "lambda,feasible,objective");
}

TEST(Sweep, InfeasibleOriginIsConfigError) {
  const auto& ex = ThreeState::get();
  Problem p = ex.problem;
  p.constraints.g(0) = -0.1;  // x_0 >= 0.1: the origin is excluded
  EXPECT_THROW(feasibility_sweep(p, ex.gcc, ex.rpi, ex.ray, SweepOptions{}), ConfigError);
}

TEST(TraceCsv, HeaderCarriesDimensions) {
  const auto& ex = ThreeState::get();
  const auto t = run_closed_loop(ex.problem, ex.gcc, ex.rpi, Controller{}, 0.3 * ex.ray, 3,
                                 model(DisturbanceKind::random_ball, 2));
  std::istringstream in(trace_csv(t));
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "# nx=3 nu=2 np=2 steps=3 status=complete");
  std::getline(in, line);
  EXPECT_EQ(line, "k,x0,x1,x2,u0,u1,w0,w1,stage_cost,violated");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 4);
}
