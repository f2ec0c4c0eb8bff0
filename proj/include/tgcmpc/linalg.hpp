#pragma once

#include <Eigen/Dense>

namespace tgcmpc {

/// Dense real symmetric matrix. Storage is exactly symmetric: the constructor
/// averages the input with its transpose after checking that the asymmetry is
/// at rounding level.
class SymMatrix {
 public:
  SymMatrix() = default;

  /// Throws DimensionError for non-square or empty input, NumericInputError
  /// for non-finite entries and DomainError if `m` is visibly asymmetric.
  explicit SymMatrix(const Eigen::MatrixXd& m);

  static SymMatrix identity(int n);
  static SymMatrix zero(int n);
  static SymMatrix diagonal(const Eigen::VectorXd& d);
  /// Symmetrizes (m + m^T)/2 without the asymmetry check.
  static SymMatrix symmetrized(const Eigen::MatrixXd& m);

  int n() const { return static_cast<int>(m_.rows()); }
  const Eigen::MatrixXd& matrix() const { return m_; }
  double operator()(int i, int j) const { return m_(i, j); }

  operator const Eigen::MatrixXd&() const { return m_; }

 private:
  Eigen::MatrixXd m_;
};

/// Eigenvalue threshold used by every definiteness test: -1e-9 * (1 + max|m_ij|).
double psd_tolerance(const Eigen::MatrixXd& m);

double min_eigenvalue(const SymMatrix& m);

/// True iff the smallest eigenvalue of `m` is >= -tol.
bool is_psd(const SymMatrix& m, double tol);

/// Principal square root via symmetric eigendecomposition. Eigenvalues in
/// [-psd_tolerance, 0) are clamped to zero; anything more negative is a
/// DomainError.
SymMatrix sym_sqrt(const SymMatrix& m);

/// Inverse principal square root of a positive definite matrix.
SymMatrix sym_inv_sqrt(const SymMatrix& m);

/// Inverse of a positive definite matrix, symmetrized.
SymMatrix sym_inverse(const SymMatrix& m);

/// log det via Cholesky. Throws DomainError unless `m` is positive definite.
double logdet(const SymMatrix& m);

/// Largest singular value of a rectangular matrix (0 for empty input).
double spectral_norm(const Eigen::MatrixXd& m);

void require_finite(const Eigen::MatrixXd& m, const char* what);

}  // namespace tgcmpc
