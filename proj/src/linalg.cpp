#include "tgcmpc/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cmath>
#include <sstream>
#include <string>

#include "tgcmpc/errors.hpp"

namespace tgcmpc {

void require_finite(const Eigen::MatrixXd& m, const char* what) {
  if (!m.allFinite()) {
    throw NumericInputError(std::string(what) + ": non-finite entry");
  }
}

SymMatrix::SymMatrix(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols() || m.rows() < 1) {
    std::ostringstream os;
    os << "SymMatrix: expected non-empty square matrix, got " << m.rows() << "x" << m.cols();
    throw DimensionError(os.str());
  }
  require_finite(m, "SymMatrix");
  const double scale = 1.0 + m.cwiseAbs().maxCoeff();
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale) {
    throw DomainError("SymMatrix: input is not symmetric");
  }
  m_ = 0.5 * (m + m.transpose());
}

SymMatrix SymMatrix::identity(int n) { return SymMatrix(Eigen::MatrixXd::Identity(n, n)); }

SymMatrix SymMatrix::zero(int n) { return SymMatrix(Eigen::MatrixXd::Zero(n, n)); }

SymMatrix SymMatrix::diagonal(const Eigen::VectorXd& d) {
  return SymMatrix(Eigen::MatrixXd(d.asDiagonal()));
}

SymMatrix SymMatrix::symmetrized(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols() || m.rows() < 1) {
    throw DimensionError("SymMatrix::symmetrized: expected non-empty square matrix");
  }
  require_finite(m, "SymMatrix");
  SymMatrix out;
  out.m_ = 0.5 * (m + m.transpose());
  return out;
}

double psd_tolerance(const Eigen::MatrixXd& m) {
  return 1e-9 * (1.0 + (m.size() ? m.cwiseAbs().maxCoeff() : 0.0));
}

double min_eigenvalue(const SymMatrix& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m.matrix(), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

bool is_psd(const SymMatrix& m, double tol) {
  if (tol < 0.0 || !std::isfinite(tol)) throw DomainError("is_psd: tolerance must be >= 0");
  require_finite(m.matrix(), "is_psd");
  return min_eigenvalue(m) >= -tol;
}

SymMatrix sym_sqrt(const SymMatrix& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m.matrix());
  Eigen::VectorXd ev = es.eigenvalues();
  const double tol = psd_tolerance(m.matrix());
  if (ev(0) < -tol) {
    std::ostringstream os;
    os << "sym_sqrt: matrix is indefinite (eigenvalue " << ev(0) << ")";
    throw DomainError(os.str());
  }
  ev = ev.cwiseMax(0.0).cwiseSqrt();
  const Eigen::MatrixXd& v = es.eigenvectors();
  return SymMatrix::symmetrized(v * ev.asDiagonal() * v.transpose());
}

SymMatrix sym_inv_sqrt(const SymMatrix& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m.matrix());
  const Eigen::VectorXd& ev = es.eigenvalues();
  if (!(ev(0) > 0.0)) {
    std::ostringstream os;
    os << "sym_inv_sqrt: matrix is not positive definite (eigenvalue " << ev(0) << ")";
    throw DomainError(os.str());
  }
  const Eigen::MatrixXd& v = es.eigenvectors();
  return SymMatrix::symmetrized(v * ev.cwiseSqrt().cwiseInverse().asDiagonal() * v.transpose());
}

SymMatrix sym_inverse(const SymMatrix& m) {
  Eigen::LLT<Eigen::MatrixXd> llt(m.matrix());
  if (llt.info() != Eigen::Success) {
    throw DomainError("sym_inverse: matrix is not positive definite");
  }
  const int n = m.n();
  return SymMatrix::symmetrized(llt.solve(Eigen::MatrixXd::Identity(n, n)));
}

double logdet(const SymMatrix& m) {
  require_finite(m.matrix(), "logdet");
  Eigen::LLT<Eigen::MatrixXd> llt(m.matrix());
  if (llt.info() != Eigen::Success) {
    throw DomainError("logdet: matrix is not positive definite");
  }
  const Eigen::VectorXd d = llt.matrixL().toDenseMatrix().diagonal();
  if ((d.array() <= 0.0).any()) throw DomainError("logdet: matrix is singular");
  return 2.0 * d.array().log().sum();
}

double spectral_norm(const Eigen::MatrixXd& m) {
  require_finite(m, "spectral_norm");
  if (m.size() == 0) return 0.0;
  if (m.rows() == 1) return m.row(0).norm();
  if (m.cols() == 1) return m.col(0).norm();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  return svd.singularValues()(0);
}

}  // namespace tgcmpc
