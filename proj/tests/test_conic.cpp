#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "tgcmpc/conic.hpp"
#include "tgcmpc/detail/cones.hpp"
#include "tgcmpc/errors.hpp"

using namespace tgcmpc;
using namespace tgcmpc::conic;

namespace {

// Closed-form eigenvalues of a symmetric 2x2 matrix.
std::pair<double, double> eig2(double a, double b, double d) {
  const double m = 0.5 * (a + d);
  const double r = std::sqrt(0.25 * (a - d) * (a - d) + b * b);
  return {m - r, m + r};
}

}  // namespace

TEST(LinExpr, ArithmeticMergesAndDropsZeroTerms) {
  LinExpr a = LinExpr::variable(0, 2.0) + LinExpr::variable(3, 1.0) + 1.5;
  LinExpr b = LinExpr::variable(3, 1.0);
  LinExpr d = a - b;
  EXPECT_EQ(d.terms().size(), 1u);
  EXPECT_DOUBLE_EQ(d.coefficient(0), 2.0);
  EXPECT_DOUBLE_EQ(d.constant(), 1.5);
  Eigen::VectorXd x(4);
  x << 1, 2, 3, 4;
  EXPECT_DOUBLE_EQ(a.evaluate(x), 2 + 4 + 1.5);
}

TEST(ExprMatrix, ConstantProductsMatchDenseAlgebra) {
  ConeProgram prog;
  ExprMatrix X = prog.add_symmetric("X", 2);
  Eigen::MatrixXd A(2, 2);
  A << 1, 2, -1, 0.5;
  ExprMatrix M = A * X * A.transpose();
  EXPECT_TRUE(M.is_symmetric());
  Eigen::VectorXd x(3);
  x << 2, 0.3, 1;  // X = [[2, .3], [.3, 1]]
  Eigen::MatrixXd Xv(2, 2);
  Xv << 2, 0.3, 0.3, 1;
  EXPECT_LT((M.evaluate(x) - A * Xv * A.transpose()).norm(), 1e-14);
}

TEST(ExprMatrix, BlocksRejectInconsistentShapes) {
  EXPECT_THROW(ExprMatrix::blocks({{ExprMatrix(2, 2), ExprMatrix(3, 1)}}), DimensionError);
}

TEST(ConeProgram, RejectsAsymmetricPsdAndDuplicateNames) {
  ConeProgram prog;
  ExprMatrix Y = prog.add_matrix("Y", 2, 2);
  EXPECT_THROW(prog.add_psd("bad", Y), UsageError);
  EXPECT_THROW(prog.add_scalar("Y"), UsageError);
  EXPECT_THROW(prog.add_linear_eq("has space", {Y(0, 0)}), UsageError);
}

TEST(Cones, SvecPreservesInnerProduct) {
  Eigen::MatrixXd A(3, 3), B(3, 3);
  A << 1, 2, 3, 2, 5, 6, 3, 6, 9;
  B << 4, -1, 0.5, -1, 2, 1, 0.5, 1, 3;
  EXPECT_NEAR(detail::svec(A).dot(detail::svec(B)), (A * B).trace(), 1e-12);
  EXPECT_LT((detail::smat(detail::svec(A), 3) - A).norm(), 1e-14);
}

TEST(Cones, NtScalingMapsBothPointsToLambda) {
  ConeDims dims{2, {3, 4}, {3}};
  std::mt19937 rng(7);
  std::normal_distribution<double> g;
  auto interior = [&] {
    Eigen::VectorXd v(dims.total());
    for (int i = 0; i < v.size(); ++i) v(i) = 0.3 * g(rng);
    return Eigen::VectorXd(v + 3.0 * detail::identity(dims));
  };
  const Eigen::VectorXd s = interior(), z = interior();
  ASSERT_GT(detail::min_cone_value(dims, s), 0.0);
  ASSERT_GT(detail::min_cone_value(dims, z), 0.0);
  detail::NtScaling w(dims, s, z);
  EXPECT_LT((w.apply(z) - w.lambda()).norm(), 1e-12);
  EXPECT_LT((w.apply_inverse_transpose(s) - w.lambda()).norm(), 1e-12);
  Eigen::VectorXd v = interior();
  EXPECT_LT((w.apply_inverse(w.apply(v)) - v).norm(), 1e-12);
  EXPECT_LT((w.apply_inverse_transpose(w.apply_transpose(v)) - v).norm(), 1e-12);
  // lambda o (lambda \ v) = v
  EXPECT_LT((detail::jordan_product(dims, w.lambda(), w.lambda_divide(v)) - v).norm(), 1e-11);
}

TEST(Cones, MaxStepStopsOnBoundary) {
  ConeDims dims{0, {3}, {}};
  Eigen::VectorXd x(3), d(3);
  x << 2, 0, 0;
  d << 0, 1, 0;
  EXPECT_NEAR(detail::max_step(dims, x, d, 1e9), 2.0, 1e-12);
  ConeDims sd{0, {}, {2}};
  const Eigen::VectorXd X = detail::svec(Eigen::MatrixXd::Identity(2, 2));
  const Eigen::VectorXd D = detail::svec(-Eigen::MatrixXd::Identity(2, 2) * 0.25);
  EXPECT_NEAR(detail::max_step(sd, X, D, 1e9), 4.0, 1e-12);
}

TEST(Solver, LinearProgram) {
  ConeProgram prog;
  LinExpr x = prog.add_scalar("x"), y = prog.add_scalar("y");
  prog.minimize(x + 2.0 * y);
  prog.add_linear_ineq("lower", {1.0 - x, 2.0 - y});
  prog.add_linear_ineq("sum", {x + y - 10.0});
  Solution sol = solve(prog);
  ASSERT_TRUE(sol.optimal()) << sol.message;
  EXPECT_NEAR(sol.objective, 5.0, 1e-7);
  EXPECT_NEAR(sol.scalar("x"), 1.0, 1e-6);
}

TEST(Solver, DistanceToLineViaSoc) {
  ConeProgram prog;
  ExprVector p = prog.add_vector("p", 2);
  LinExpr t = prog.add_scalar("t");
  prog.minimize(t);
  prog.add_soc("dist", t, {p[0] - 3.0, p[1] - 4.0});
  prog.add_linear_eq("line", {p[0] + p[1]});
  Solution sol = solve(prog);
  ASSERT_TRUE(sol.optimal()) << sol.message;
  EXPECT_NEAR(sol.objective, 7.0 / std::sqrt(2.0), 1e-7);
}

TEST(Solver, TraceAboveIndefiniteMatrixIsSumOfPositiveEigenvalues) {
  // min tr X s.t. X >= M, X >= 0
  const double a = 1.0, b = 2.0, d = -0.5;
  ConeProgram prog;
  ExprMatrix X = prog.add_symmetric("X", 2);
  Eigen::MatrixXd M(2, 2);
  M << a, b, b, d;
  prog.minimize(X(0, 0) + X(1, 1));
  prog.add_psd("above", X - ExprMatrix::constant(M));
  prog.add_psd("psd", X);
  Solution sol = solve(prog);
  ASSERT_TRUE(sol.optimal()) << sol.message;
  auto [l1, l2] = eig2(a, b, d);
  EXPECT_NEAR(sol.objective, std::max(l1, 0.0) + std::max(l2, 0.0), 1e-6);
  EXPECT_LT(check_residuals(prog, sol.x).max_violation, 1e-7);
}

TEST(Solver, GeometricMeanReachesDeterminantRoot) {
  Eigen::MatrixXd M(3, 3);
  M << 4, 1, 0, 1, 3, 0.5, 0, 0.5, 2;
  // Cofactor determinant as the oracle.
  const double det = M(0, 0) * (M(1, 1) * M(2, 2) - M(1, 2) * M(2, 1)) -
                     M(0, 1) * (M(1, 0) * M(2, 2) - M(1, 2) * M(2, 0)) +
                     M(0, 2) * (M(1, 0) * M(2, 1) - M(1, 1) * M(2, 0));
  ConeProgram prog;
  ExprMatrix X = prog.add_symmetric("X", 3);
  prog.add_psd("below", ExprMatrix::constant(M) - X);
  LinExpr t = add_geometric_mean(prog, X);
  prog.minimize(-t);
  Solution sol = solve(prog);
  ASSERT_TRUE(sol.optimal()) << sol.message;
  EXPECT_NEAR(-sol.objective, std::cbrt(det), 1e-6);
  EXPECT_LT((sol.symmetric("X") - M).norm(), 1e-4);
}

TEST(Solver, SumOfSquaresEpigraph) {
  ConeProgram prog;
  ExprVector p = prog.add_vector("p", 2);
  prog.add_linear_eq("line", {p[0] + p[1]});
  LinExpr t = add_epigraph_sum_of_squares(prog, {p[0] - 1.0, p[1] - 2.0});
  prog.minimize(t);
  Solution sol = solve(prog);
  ASSERT_TRUE(sol.optimal()) << sol.message;
  EXPECT_NEAR(sol.objective, 4.5, 1e-7);
  EXPECT_NEAR(sol.vector("p")(0), -0.5, 1e-6);
}

TEST(Solver, DetectsInfeasibility) {
  ConeProgram prog;
  LinExpr x = prog.add_scalar("x");
  prog.minimize(x);
  prog.add_linear_ineq("c", {1.0 - x, x});
  Solution sol = solve(prog);
  EXPECT_EQ(sol.status, SolveStatus::infeasible);
  EXPECT_TRUE(sol.values.empty());
}

TEST(Solver, DetectsUnboundedness) {
  ConeProgram prog;
  LinExpr x = prog.add_scalar("x");
  prog.minimize(x);
  prog.add_linear_ineq("c", {x});
  EXPECT_EQ(solve(prog).status, SolveStatus::unbounded);
}

TEST(Solver, InfeasibleSemidefiniteProgram) {
  ConeProgram prog;
  ExprMatrix X = prog.add_symmetric("X", 2);
  prog.minimize(X(0, 0));
  prog.add_psd("psd", X);
  prog.add_linear_eq("neg", {X(0, 0) + X(1, 1) + 1.0});
  EXPECT_EQ(solve(prog).status, SolveStatus::infeasible);
}

TEST(DebugText, RoundTripIsExact) {
  ConeProgram prog;
  ExprMatrix X = prog.add_symmetric("X", 2);
  ExprVector v = prog.add_vector("v", 2);
  LinExpr s = prog.add_scalar("s");
  prog.minimize(X(0, 0) + 0.1 * s);
  prog.add_psd("lmi", X - (1.0 / 3.0) * ExprMatrix::identity(2));
  prog.add_soc("cone", s, {v[0] - 0.7, v[1]});
  prog.add_linear_eq("fix", {v[0] + v[1] - 1.0});
  prog.add_linear_ineq("cap", {s - 10.0});
  const std::string text = to_debug_text(prog);
  const ConeProgram back = parse_debug_text(text);
  EXPECT_TRUE(back == prog);
  EXPECT_EQ(to_debug_text(back), text);
}

TEST(DebugText, GoldenDump) {
  ConeProgram prog;
  LinExpr x = prog.add_scalar("x");
  ExprVector v = prog.add_vector("v", 2);
  prog.minimize(x);
  prog.add_soc("c1", x, {v[0] - 0.5, 2.0 * v[1]});
  prog.add_linear_ineq("c2", {v[0] + v[1] - 1.0});
  const std::string expected =
      "tgcmpc-cone-program 1\n"
      "var x scalar\n"
      "var v vector 2\n"
      "minimize {0 0:1}\n"
      "soc c1 3 {0 0:1} {-0.5 1:1} {0 2:2}\n"
      "ineq c2 1 {-1 1:1 2:1}\n";
  EXPECT_EQ(to_debug_text(prog), expected);
}

TEST(DebugText, MalformedInputIsConfigError) {
  EXPECT_THROW(parse_debug_text("nope\n"), ConfigError);
  EXPECT_THROW(parse_debug_text("tgcmpc-cone-program 1\nvar x scalar\neq c 1 {0 0:abc}\n"), ConfigError);
}

TEST(Residuals, ReportPerConstraintViolation) {
  ConeProgram prog;
  LinExpr x = prog.add_scalar("x");
  prog.add_linear_ineq("le", {x - 1.0});
  prog.add_soc("cone", 1.0 + 0.0 * x, {x});
  Eigen::VectorXd v(1);
  v << 3.0;
  ResidualReport r = check_residuals(prog, v);
  ASSERT_EQ(r.per_constraint.size(), 2u);
  EXPECT_DOUBLE_EQ(r.per_constraint[0].second, 2.0);
  EXPECT_DOUBLE_EQ(r.per_constraint[1].second, 2.0);
}
