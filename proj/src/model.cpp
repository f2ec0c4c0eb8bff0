#include "tgcmpc/model.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "tgcmpc/errors.hpp"

namespace tgcmpc {

int UncertaintyStructure::total_np() const {
  int n = 0;
  for (const auto& b : blocks) n += b.np;
  return n;
}

int UncertaintyStructure::total_nq() const {
  int n = 0;
  for (const auto& b : blocks) n += b.nq;
  return n;
}

int UncertaintyStructure::p_offset(int i) const {
  int off = 0;
  for (int j = 0; j < i; ++j) off += blocks[j].np;
  return off;
}

int UncertaintyStructure::q_offset(int i) const {
  int off = 0;
  for (int j = 0; j < i; ++j) off += blocks[j].nq;
  return off;
}

UncertaintyStructure UncertaintyStructure::scalar_blocks(int s) {
  UncertaintyStructure st;
  st.blocks.assign(s, UncertaintyBlock{1, 1});
  return st;
}

Eigen::MatrixXd UncertainSystem::Cy_block(int i) const {
  return Cy.middleRows(structure.q_offset(i), structure.blocks[i].nq);
}

Eigen::MatrixXd UncertainSystem::Dyu_block(int i) const {
  return Dyu.middleRows(structure.q_offset(i), structure.blocks[i].nq);
}

double CostSpec::stage_cost(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const {
  return x.dot(Q.matrix() * x) + u.dot(R.matrix() * u) + 2.0 * x.dot(N * u);
}

PolytopeConstraints PolytopeConstraints::none(int nx, int nu) {
  return {Eigen::MatrixXd::Zero(0, nx), Eigen::MatrixXd::Zero(0, nu), Eigen::VectorXd::Zero(0)};
}

double PolytopeConstraints::max_violation(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const {
  if (ng() == 0) return -std::numeric_limits<double>::infinity();
  return (Hx * x + Hu * u - g).maxCoeff();
}

namespace {

void check_shape(std::vector<std::string>& out, const char* name, const Eigen::MatrixXd& m,
                 Eigen::Index rows, Eigen::Index cols) {
  if (m.rows() != rows || m.cols() != cols) {
    std::ostringstream os;
    os << name << " is " << m.rows() << "x" << m.cols() << ", expected " << rows << "x" << cols;
    out.push_back(os.str());
  }
}

void check_finite(std::vector<std::string>& out, const char* name, const Eigen::MatrixXd& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (!std::isfinite(m(i, j))) {
        std::ostringstream os;
        os << name << "(" << i << "," << j << ") is not finite";
        out.push_back(os.str());
      }
    }
  }
}

}  // namespace

std::vector<std::string> validate_system(const UncertainSystem& sys) {
  std::vector<std::string> out;
  const Eigen::Index nx = sys.A.rows();
  if (nx < 1) out.push_back("A must have at least one row");
  check_shape(out, "A", sys.A, nx, nx);
  if (sys.Bu.rows() != nx) check_shape(out, "Bu", sys.Bu, nx, sys.Bu.cols());
  if (sys.Bu.cols() < 1) out.push_back("Bu must have at least one column");
  if (sys.Bw.rows() != nx) check_shape(out, "Bw", sys.Bw, nx, sys.Bw.cols());
  if (sys.Cy.cols() != nx) check_shape(out, "Cy", sys.Cy, sys.Cy.rows(), nx);
  check_shape(out, "Dyu", sys.Dyu, sys.Cy.rows(), sys.Bu.cols());
  if (sys.structure.blocks.empty()) out.push_back("uncertainty structure has no blocks");
  for (std::size_t i = 0; i < sys.structure.blocks.size(); ++i) {
    const auto& b = sys.structure.blocks[i];
    if (b.np < 1 || b.nq < 1) {
      std::ostringstream os;
      os << "block " << i << " has size (" << b.np << "," << b.nq << "); both must be >= 1";
      out.push_back(os.str());
    }
  }
  if (sys.structure.total_np() != sys.Bw.cols()) {
    std::ostringstream os;
    os << "block np sum " << sys.structure.total_np() << " != Bw columns " << sys.Bw.cols();
    out.push_back(os.str());
  }
  if (sys.structure.total_nq() != sys.Cy.rows()) {
    std::ostringstream os;
    os << "block nq sum " << sys.structure.total_nq() << " != Cy rows " << sys.Cy.rows();
    out.push_back(os.str());
  }
  check_finite(out, "A", sys.A);
  check_finite(out, "Bu", sys.Bu);
  check_finite(out, "Bw", sys.Bw);
  check_finite(out, "Cy", sys.Cy);
  check_finite(out, "Dyu", sys.Dyu);
  return out;
}

std::vector<std::string> validate_constraints(const PolytopeConstraints& c, int nx, int nu) {
  std::vector<std::string> out;
  const Eigen::Index ng = c.g.size();
  check_shape(out, "Hx", c.Hx, ng, nx);
  check_shape(out, "Hu", c.Hu, ng, nu);
  check_finite(out, "Hx", c.Hx);
  check_finite(out, "Hu", c.Hu);
  check_finite(out, "g", c.g);
  for (Eigen::Index i = 0; i < ng; ++i) {
    if (!(c.g(i) > 0.0)) {
      std::ostringstream os;
      os << "g(" << i << ") = " << c.g(i) << " must be > 0 (origin strictly feasible)";
      out.push_back(os.str());
    }
  }
  return out;
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> factorize_cost(const SymMatrix& Q, const SymMatrix& R,
                                                           const Eigen::MatrixXd& N) {
  const int nx = Q.n();
  const int nu = R.n();
  if (N.rows() != nx || N.cols() != nu) {
    throw DimensionError("factorize_cost: N must be nx x nu");
  }
  require_finite(N, "factorize_cost N");
  Eigen::MatrixXd M(nx + nu, nx + nu);
  M << Q.matrix(), N, N.transpose(), R.matrix();
  const double tol = psd_tolerance(M);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
  const Eigen::VectorXd& ev = es.eigenvalues();
  if (ev(0) < -tol) {
    std::ostringstream os;
    os << "factorize_cost: [[Q, N], [N', R]] is indefinite (eigenvalue " << ev(0) << ")";
    throw DomainError(os.str());
  }
  // Descending eigenvalue order; each eigenvector's largest entry made positive.
  std::vector<int> keep;
  for (int i = static_cast<int>(ev.size()) - 1; i >= 0; --i) {
    if (ev(i) > tol) keep.push_back(i);
  }
  Eigen::MatrixXd F(keep.size(), nx + nu);
  for (std::size_t r = 0; r < keep.size(); ++r) {
    Eigen::VectorXd v = es.eigenvectors().col(keep[r]);
    Eigen::Index imax = 0;
    v.cwiseAbs().maxCoeff(&imax);
    if (v(imax) < 0) v = -v;
    F.row(static_cast<Eigen::Index>(r)) = std::sqrt(ev(keep[r])) * v.transpose();
  }
  return {F.leftCols(nx), F.rightCols(nu)};
}

CostSpec make_cost(const SymMatrix& Q, const SymMatrix& R, const Eigen::MatrixXd& N) {
  if (!(min_eigenvalue(R) > 0.0)) {
    throw DomainError("make_cost: R must be positive definite");
  }
  CostSpec cost{Q, R, N, {}, {}, false};
  auto [Cc, Dcu] = factorize_cost(Q, R, N);
  cost.Cc = std::move(Cc);
  cost.Dcu = std::move(Dcu);
  cost.factorized = true;
  return cost;
}

void check_admissible(const UncertaintyStructure& structure, const Eigen::MatrixXd& delta) {
  if (delta.rows() != structure.total_np() || delta.cols() != structure.total_nq()) {
    std::ostringstream os;
    os << "Delta is " << delta.rows() << "x" << delta.cols() << ", expected "
       << structure.total_np() << "x" << structure.total_nq();
    throw DimensionError(os.str());
  }
  require_finite(delta, "Delta");
  Eigen::MatrixXd rest = delta;
  for (int i = 0; i < structure.s(); ++i) {
    const auto& b = structure.blocks[i];
    const auto blk = delta.block(structure.p_offset(i), structure.q_offset(i), b.np, b.nq);
    const double nrm = spectral_norm(blk);
    if (nrm > 1.0 + 1e-9) {
      std::ostringstream os;
      os << "Delta block " << i << " has spectral norm " << nrm << " > 1";
      throw AdmissibilityError(os.str());
    }
    rest.block(structure.p_offset(i), structure.q_offset(i), b.np, b.nq).setZero();
  }
  if (rest.size() && rest.cwiseAbs().maxCoeff() != 0.0) {
    throw DimensionError("Delta has nonzero entries outside its diagonal blocks");
  }
}

UncertaintyEvaluation evaluate_uncertainty(const UncertainSystem& sys, const Eigen::MatrixXd& delta,
                                           const Eigen::VectorXd& x, const Eigen::VectorXd& u) {
  if (x.size() != sys.nx() || u.size() != sys.nu()) {
    throw DimensionError("evaluate_uncertainty: state or input has the wrong length");
  }
  check_admissible(sys.structure, delta);
  UncertaintyEvaluation ev;
  ev.y = sys.Cy * x + sys.Dyu * u;
  ev.w = delta * ev.y;
  ev.x_next = sys.A * x + sys.Bu * u + sys.Bw * ev.w;
  return ev;
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> perturbed_matrices(const UncertainSystem& sys,
                                                               const Eigen::MatrixXd& delta) {
  check_admissible(sys.structure, delta);
  return {sys.A + sys.Bw * delta * sys.Cy, sys.Bu + sys.Bw * delta * sys.Dyu};
}

}  // namespace tgcmpc
