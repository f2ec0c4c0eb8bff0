#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include <nlohmann/json.hpp>

#include "oracles.hpp"
#include "tgcmpc/errors.hpp"
#include "tgcmpc/model.hpp"
#include "tgcmpc/problem_io.hpp"
#include "tgcmpc/sim.hpp"

using namespace tgcmpc;

namespace {

Problem example() { return load_problem(oracle::data_file("three_state_example.json")); }

Eigen::MatrixXd diag2(double a, double b) {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(2, 2);
  d(0, 0) = a;
  d(1, 1) = b;
  return d;
}

}  // namespace

TEST(ValidateSystem, ExampleIsClean) { EXPECT_TRUE(validate_system(example().system).empty()); }

TEST(ValidateSystem, ReportsStructureMismatch) {
  UncertainSystem sys = example().system;
  sys.Bw = Eigen::MatrixXd::Ones(3, 3);
  EXPECT_EQ(validate_system(sys).size(), 1u);
}

TEST(ValidateSystem, ReportsNonFinite) {
  UncertainSystem sys = example().system;
  sys.Cy(1, 2) = std::numeric_limits<double>::quiet_NaN();
  const auto issues = validate_system(sys);
  ASSERT_EQ(issues.size(), 1u);
  EXPECT_NE(issues[0].find("Cy"), std::string::npos);
}

TEST(FactorizeCost, IdentityWeights) {
  auto [Cc, Dcu] = factorize_cost(SymMatrix::identity(3), SymMatrix::identity(2), Eigen::MatrixXd::Zero(3, 2));
  Eigen::MatrixXd F(Cc.rows(), 5);
  F << Cc, Dcu;
  EXPECT_LT((F.transpose() * F - Eigen::MatrixXd::Identity(5, 5)).norm(), 1e-12);
}

TEST(FactorizeCost, ZeroStateWeight) {
  auto [Cc, Dcu] = factorize_cost(SymMatrix::zero(2), SymMatrix::identity(1), Eigen::MatrixXd::Zero(2, 1));
  EXPECT_LT(Cc.norm(), 1e-14);
  EXPECT_NEAR((Dcu.transpose() * Dcu)(0, 0), 1.0, 1e-14);
}

TEST(FactorizeCost, RandomStackReconstructs) {
  std::mt19937_64 rng(21);
  for (int t = 0; t < 20; ++t) {
    Eigen::MatrixXd G = oracle::random_matrix(rng, 2, 3);  // rank 2 stack
    Eigen::MatrixXd S = G.transpose() * G;
    S(2, 2) += 0.5;  // keep R positive definite
    auto [Cc, Dcu] = factorize_cost(SymMatrix::symmetrized(S.topLeftCorner(2, 2)),
                                    SymMatrix::symmetrized(S.bottomRightCorner(1, 1)), S.topRightCorner(2, 1));
    Eigen::MatrixXd F(Cc.rows(), 3);
    F << Cc, Dcu;
    EXPECT_LE((F.transpose() * F - S).norm(), 1e-8 * S.norm());
    EXPECT_LE(F.rows(), 3);
  }
}

TEST(FactorizeCost, IndefiniteNamesEigenvalue) {
  Eigen::MatrixXd N(1, 1);
  N << 2.0;  // [[1, 2], [2, 1]] has eigenvalue -1
  try {
    factorize_cost(SymMatrix::identity(1), SymMatrix::identity(1), N);
    FAIL() << "expected DomainError";
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("-1"), std::string::npos) << e.what();
  }
}

TEST(EvaluateUncertainty, ZeroDeltaIsNominal) {
  const auto sys = example().system;
  Eigen::Vector3d x(0.3, -1, 2);
  Eigen::Vector2d u(0.5, -0.25);
  auto ev = evaluate_uncertainty(sys, Eigen::MatrixXd::Zero(2, 2), x, u);
  EXPECT_EQ(ev.w.norm(), 0.0);
  EXPECT_LT((ev.x_next - (sys.A * x + sys.Bu * u)).norm(), 1e-15);
}

TEST(EvaluateUncertainty, HandArithmetic) {
  const auto sys = example().system;
  auto ev = evaluate_uncertainty(sys, diag2(1, 1), Eigen::Vector3d(1, 0, 0), Eigen::Vector2d::Zero());
  EXPECT_NEAR(ev.y(0), 0.41, 1e-15);
  EXPECT_NEAR(ev.y(1), 0.0, 1e-15);
  EXPECT_LT((ev.w - ev.y).norm(), 1e-15);
  // 1.1 + 0.17*0.41 = 1.1697, 0.12*0.41 = 0.0492, -1 - 0.17*0.41 = -1.0697.
  EXPECT_NEAR(ev.x_next(0), 1.1697, 1e-12);
  EXPECT_NEAR(ev.x_next(1), 0.0492, 1e-12);
  EXPECT_NEAR(ev.x_next(2), -1.0697, 1e-12);
}

TEST(EvaluateUncertainty, MatchesPerturbedMatrices) {
  const auto sys = example().system;
  std::mt19937_64 rng(31);
  for (int t = 0; t < 100; ++t) {
    Eigen::MatrixXd d = sample_delta(sys.structure, {DisturbanceKind::random_ball, static_cast<std::uint64_t>(t), {}}, 0);
    Eigen::VectorXd x = oracle::random_matrix(rng, 3, 1), u = oracle::random_matrix(rng, 2, 1);
    auto ev = evaluate_uncertainty(sys, d, x, u);
    auto [Ad, Bd] = perturbed_matrices(sys, d);
    EXPECT_LT((ev.x_next - (Ad * x + Bd * u)).lpNorm<Eigen::Infinity>(), 1e-12);
    // Each block of w is no longer than the matching block of y.
    for (int i = 0; i < sys.s(); ++i)
      EXPECT_LE(std::abs(ev.w(i)), std::abs(ev.y(i)) + 1e-15);
  }
}

TEST(EvaluateUncertainty, RejectsInadmissibleDelta) {
  const auto sys = example().system;
  EXPECT_THROW(evaluate_uncertainty(sys, diag2(1.01, 0), Eigen::Vector3d::Zero(), Eigen::Vector2d::Zero()),
               AdmissibilityError);
  Eigen::MatrixXd off = diag2(0.5, 0.5);
  off(0, 1) = 0.1;
  EXPECT_THROW(evaluate_uncertainty(sys, off, Eigen::Vector3d::Zero(), Eigen::Vector2d::Zero()), DimensionError);
  EXPECT_THROW(evaluate_uncertainty(sys, Eigen::MatrixXd::Zero(3, 3), Eigen::Vector3d::Zero(), Eigen::Vector2d::Zero()),
               DimensionError);
}

TEST(ProblemIo, RoundTrip) {
  const Problem p = example();
  const Problem q = parse_problem(problem_to_json(p));
  EXPECT_EQ(q.system.A, p.system.A);
  EXPECT_EQ(q.constraints.g, p.constraints.g);
  EXPECT_EQ(q.horizon, p.horizon);
  EXPECT_EQ(q.x0, p.x0);
}

TEST(ProblemIo, UnknownKeyListsAcceptedKeys) {
  nlohmann::json j = problem_to_json(example());
  j["horizn"] = 5;
  try {
    parse_problem(j);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("horizn"), std::string::npos);
    EXPECT_NE(msg.find("constraints"), std::string::npos);
  }
}

TEST(ProblemIo, MissingFileIsConfigError) { EXPECT_THROW(load_problem("/no/such/file.json"), ConfigError); }

TEST(Constraints, MaxViolation) {
  const auto c = example().constraints;
  EXPECT_NEAR(c.max_violation(Eigen::Vector3d(0.5, 0, 0), Eigen::Vector2d(0, -1.25)), 0.25, 1e-15);
  EXPECT_EQ(PolytopeConstraints::none(3, 2).max_violation(Eigen::Vector3d::Zero(), Eigen::Vector2d::Zero()),
            -std::numeric_limits<double>::infinity());
}
