#pragma once

// Cone algebra for the interior-point solver. Exposed for unit tests only.

#include <Eigen/Dense>
#include <vector>

#include "tgcmpc/conic.hpp"

namespace tgcmpc::conic::detail {

int svec_size(int n);
Eigen::VectorXd svec(const Eigen::MatrixXd& m);
Eigen::MatrixXd smat(const Eigen::VectorXd& v, int n);

/// Identity element e of the cone.
Eigen::VectorXd identity(const ConeDims& dims);

/// Jordan product u o v.
Eigen::VectorXd jordan_product(const ConeDims& dims, const Eigen::VectorXd& u, const Eigen::VectorXd& v);

/// Largest step t >= 0 (capped at `cap`) with x + t*dx in the cone; x must be
/// interior.
double max_step(const ConeDims& dims, const Eigen::VectorXd& x, const Eigen::VectorXd& dx, double cap);

/// Smallest "eigenvalue" of x over all blocks (LP entries, x0 - ||x1|| for
/// SOC, lambda_min for PSD). Positive iff x is interior.
double min_cone_value(const ConeDims& dims, const Eigen::VectorXd& x);

/// Nesterov-Todd scaling W at an interior pair (s, z): W' W z... with
/// lambda = W^{-T} s = W z.
class NtScaling {
 public:
  NtScaling(const ConeDims& dims, const Eigen::VectorXd& s, const Eigen::VectorXd& z);

  const Eigen::VectorXd& lambda() const { return lambda_; }

  Eigen::VectorXd apply(const Eigen::VectorXd& v) const;              // W v
  Eigen::VectorXd apply_transpose(const Eigen::VectorXd& v) const;    // W' v
  Eigen::VectorXd apply_inverse(const Eigen::VectorXd& v) const;      // W^{-1} v
  Eigen::VectorXd apply_inverse_transpose(const Eigen::VectorXd& v) const;  // W^{-T} v

  /// Solves lambda o x = v.
  Eigen::VectorXd lambda_divide(const Eigen::VectorXd& v) const;

 private:
  enum class Op { w, wt, winv, winvt };
  Eigen::VectorXd apply_op(const Eigen::VectorXd& v, Op op) const;

  ConeDims dims_;
  Eigen::VectorXd lp_d_;
  struct Soc {
    double eta;
    Eigen::VectorXd wbar;
  };
  std::vector<Soc> soc_;
  std::vector<Eigen::MatrixXd> r_, rinv_;
  std::vector<Eigen::VectorXd> psd_lambda_;
  Eigen::VectorXd lambda_;
};

}  // namespace tgcmpc::conic::detail
