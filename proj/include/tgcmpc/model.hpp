#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

#include "tgcmpc/linalg.hpp"

namespace tgcmpc {

/// One diagonal block of the uncertainty: Delta_i is np x nq.
struct UncertaintyBlock {
  int np = 1;
  int nq = 1;
};

/// Block structure of the admissible set: Delta = diag(Delta_1, ..., Delta_s),
/// each block with spectral norm at most one.
struct UncertaintyStructure {
  std::vector<UncertaintyBlock> blocks;

  int s() const { return static_cast<int>(blocks.size()); }
  int total_np() const;
  int total_nq() const;
  /// Row offset of block i inside w (np direction).
  int p_offset(int i) const;
  /// Row offset of block i inside y (nq direction).
  int q_offset(int i) const;

  /// s scalar blocks of size 1x1.
  static UncertaintyStructure scalar_blocks(int s);
};

/// x+ = A x + Bu u + Bw w,  y = Cy x + Dyu u,  w = Delta y.
struct UncertainSystem {
  Eigen::MatrixXd A;
  Eigen::MatrixXd Bu;
  Eigen::MatrixXd Bw;
  Eigen::MatrixXd Cy;
  Eigen::MatrixXd Dyu;
  UncertaintyStructure structure;

  int nx() const { return static_cast<int>(A.rows()); }
  int nu() const { return static_cast<int>(Bu.cols()); }
  int np() const { return static_cast<int>(Bw.cols()); }
  int nq() const { return static_cast<int>(Cy.rows()); }
  int s() const { return structure.s(); }

  /// Rows of Cy belonging to block i.
  Eigen::MatrixXd Cy_block(int i) const;
  Eigen::MatrixXd Dyu_block(int i) const;
};

/// Stage cost x'Qx + u'Ru + 2x'Nu together with the factor [Cc Dcu] whose
/// Gram matrix is [[Q, N], [N', R]].
struct CostSpec {
  SymMatrix Q;
  SymMatrix R;
  Eigen::MatrixXd N;
  Eigen::MatrixXd Cc;
  Eigen::MatrixXd Dcu;
  bool factorized = false;

  int nc() const { return static_cast<int>(Cc.rows()); }
  double stage_cost(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const;
};

/// Polytope {(x, u) : Hx x + Hu u <= g}. n_g = 0 means unconstrained.
struct PolytopeConstraints {
  Eigen::MatrixXd Hx;
  Eigen::MatrixXd Hu;
  Eigen::VectorXd g;

  int ng() const { return static_cast<int>(g.size()); }
  static PolytopeConstraints none(int nx, int nu);
  /// Largest violation max_i (Hx x + Hu u - g)_i; -inf when n_g = 0.
  double max_violation(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const;
};

/// Everything a problem file describes.
struct Problem {
  UncertainSystem system;
  CostSpec cost;
  PolytopeConstraints constraints;
  int horizon = 5;
  Eigen::VectorXd x0;
};

/// Every dimension mismatch and non-finite entry, one message each. Empty
/// means the system is well formed.
std::vector<std::string> validate_system(const UncertainSystem& sys);

/// Violations of the constraint-set invariants against the given system.
std::vector<std::string> validate_constraints(const PolytopeConstraints& c, int nx, int nu);

/// Factor [[Q, N], [N', R]] = [Cc Dcu]' [Cc Dcu] through a symmetric
/// eigendecomposition. The factor has one row per nonzero eigenvalue. Throws
/// DomainError (naming the eigenvalue) when the stacked matrix is indefinite.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> factorize_cost(const SymMatrix& Q, const SymMatrix& R,
                                                           const Eigen::MatrixXd& N);

/// Validates the weights (R positive definite, stacked matrix PSD) and
/// returns a factorized cost.
CostSpec make_cost(const SymMatrix& Q, const SymMatrix& R, const Eigen::MatrixXd& N);

struct UncertaintyEvaluation {
  Eigen::VectorXd y;
  Eigen::VectorXd w;
  Eigen::VectorXd x_next;
};

/// Check that `delta` is block diagonal with the system's structure and
/// every block has spectral norm <= 1 + 1e-9.
void check_admissible(const UncertaintyStructure& structure, const Eigen::MatrixXd& delta);

/// y = Cy x + Dyu u, w = Delta y, x+ = A x + Bu u + Bw w.
UncertaintyEvaluation evaluate_uncertainty(const UncertainSystem& sys, const Eigen::MatrixXd& delta,
                                           const Eigen::VectorXd& x, const Eigen::VectorXd& u);

/// Closed-loop matrices with the uncertainty folded in:
/// (A + Bw Delta Cy, Bu + Bw Delta Dyu).
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> perturbed_matrices(const UncertainSystem& sys,
                                                               const Eigen::MatrixXd& delta);

}  // namespace tgcmpc
