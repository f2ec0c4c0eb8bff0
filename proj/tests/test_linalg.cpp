#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "oracles.hpp"
#include "tgcmpc/errors.hpp"
#include "tgcmpc/linalg.hpp"

using namespace tgcmpc;

TEST(SymMatrix, StorageIsExactlySymmetric) {
  Eigen::MatrixXd m(2, 2);
  m << 1.0, 0.3, 0.3 + 1e-15, 2.0;
  SymMatrix s(m);
  EXPECT_EQ(s(0, 1), s(1, 0));
}

TEST(SymMatrix, RejectsBadInput) {
  EXPECT_THROW(SymMatrix(Eigen::MatrixXd(2, 3)), DimensionError);
  EXPECT_THROW(SymMatrix(Eigen::MatrixXd(0, 0)), DimensionError);
  Eigen::MatrixXd asym(2, 2);
  asym << 1, 2, 0, 1;
  EXPECT_THROW(SymMatrix{asym}, DomainError);
  Eigen::MatrixXd nan = Eigen::MatrixXd::Identity(2, 2);
  nan(1, 1) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(SymMatrix{nan}, NumericInputError);
}

TEST(IsPsd, SmallCases) {
  EXPECT_TRUE(is_psd(SymMatrix::identity(3), 0.0));
  Eigen::VectorXd d(2);
  d << 1.0, -0.01;
  EXPECT_FALSE(is_psd(SymMatrix::diagonal(d), 1e-9));
}

TEST(IsPsd, GramMatricesAgainstCharacteristicPolynomial) {
  std::mt19937_64 rng(7);
  for (int t = 0; t < 20; ++t) {
    Eigen::MatrixXd G = oracle::random_matrix(rng, 4, 4);
    EXPECT_TRUE(is_psd(SymMatrix::symmetrized(G.transpose() * G), 1e-9));

    // Shifted 3x3: the oracle decides the sign of the smallest eigenvalue.
    Eigen::MatrixXd H = oracle::random_matrix(rng, 3, 3);
    Eigen::Matrix3d M = H.transpose() * H - 0.3 * Eigen::Matrix3d::Identity();
    const auto ev = oracle::sym3_eigenvalues(M);
    EXPECT_NEAR(min_eigenvalue(SymMatrix::symmetrized(M)), ev[0], 1e-12);
    if (std::abs(ev[0]) > 1e-6) EXPECT_EQ(is_psd(SymMatrix::symmetrized(M), 1e-9), ev[0] > 0);
  }
}

TEST(SymSqrt, DiagonalAndIdentity) {
  EXPECT_LT((sym_sqrt(SymMatrix::identity(2)).matrix() - Eigen::MatrixXd::Identity(2, 2)).norm(), 1e-15);
  Eigen::VectorXd d(2);
  d << 4, 9;
  Eigen::VectorXd r(2);
  r << 2, 3;
  EXPECT_LT((sym_sqrt(SymMatrix::diagonal(d)).matrix() - Eigen::MatrixXd(r.asDiagonal())).norm(), 1e-14);
}

TEST(SymSqrt, ReconstructsRandomPsd) {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 20; ++t) {
    // Rank-deficient on purpose: 5x3 factor.
    Eigen::MatrixXd G = oracle::random_matrix(rng, 5, 3);
    SymMatrix M = SymMatrix::symmetrized(G * G.transpose());
    SymMatrix S = sym_sqrt(M);
    EXPECT_LE((S.matrix() * S.matrix() - M.matrix()).norm(), 1e-8 * M.matrix().norm());
    EXPECT_TRUE(is_psd(S, psd_tolerance(S.matrix())));
  }
}

TEST(SymSqrt, IndefiniteIsDomainError) {
  Eigen::VectorXd d(2);
  d << 1, -0.5;
  EXPECT_THROW(sym_sqrt(SymMatrix::diagonal(d)), DomainError);
}

TEST(SymInvSqrt, InvertsTheSquareRoot) {
  std::mt19937_64 rng(5);
  Eigen::MatrixXd G = oracle::random_matrix(rng, 3, 3);
  SymMatrix M = SymMatrix::symmetrized(G * G.transpose() + Eigen::MatrixXd::Identity(3, 3));
  Eigen::MatrixXd T = sym_inv_sqrt(M).matrix();
  EXPECT_LT((T * M.matrix() * T - Eigen::MatrixXd::Identity(3, 3)).norm(), 1e-12);
}

TEST(Logdet, KnownValues) {
  EXPECT_NEAR(logdet(SymMatrix::identity(4)), 0.0, 1e-15);
  Eigen::VectorXd d = Eigen::VectorXd::Constant(2, std::exp(1.0));
  EXPECT_NEAR(logdet(SymMatrix::diagonal(d)), 2.0, 1e-14);
  EXPECT_THROW(logdet(SymMatrix::zero(2)), DomainError);
}

TEST(Logdet, MatchesCofactorDeterminant) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 50; ++t) {
    Eigen::MatrixXd G = oracle::random_matrix(rng, 3, 3);
    SymMatrix M = SymMatrix::symmetrized(G * G.transpose() + 0.05 * Eigen::MatrixXd::Identity(3, 3));
    EXPECT_NEAR(logdet(M), std::log(oracle::cofactor_det(M.matrix())), 1e-9);
  }
}

TEST(Logdet, IncreasesWithShift) {
  std::mt19937_64 rng(9);
  Eigen::MatrixXd A = oracle::random_matrix(rng, 4, 2);  // A A' is singular
  double prev = -std::numeric_limits<double>::infinity();
  for (double eps : {1e-6, 1e-4, 1e-2, 1.0, 10.0}) {
    const double v = logdet(SymMatrix::symmetrized(A * A.transpose() + eps * Eigen::MatrixXd::Identity(4, 4)));
    EXPECT_TRUE(std::isfinite(v));
    EXPECT_GT(v, prev);
    prev = v;
  }
}

TEST(SpectralNorm, KnownValues) {
  EXPECT_EQ(spectral_norm(Eigen::MatrixXd::Zero(2, 3)), 0.0);
  Eigen::MatrixXd row(1, 2);
  row << 3, 4;
  EXPECT_NEAR(spectral_norm(row), 5.0, 1e-14);
}

TEST(SpectralNorm, MatchesGramEigenvalueAndTranspose) {
  std::mt19937_64 rng(13);
  for (int t = 0; t < 20; ++t) {
    Eigen::MatrixXd M = oracle::random_matrix(rng, 3, 2);
    // Pad M'M to 3x3 so the characteristic-polynomial oracle applies.
    Eigen::Matrix3d G = Eigen::Matrix3d::Zero();
    G.topLeftCorner(2, 2) = M.transpose() * M;
    EXPECT_NEAR(spectral_norm(M), std::sqrt(oracle::sym3_eigenvalues(G)[2]), 1e-10);
    EXPECT_NEAR(spectral_norm(M), spectral_norm(M.transpose()), 1e-12);
  }
}
