#include <algorithm>
#include <cmath>

#include "tgcmpc/conic.hpp"
#include "tgcmpc/errors.hpp"

namespace tgcmpc::conic {

ResidualReport check_residuals(const ConeProgram& prog, const Eigen::VectorXd& x) {
  if (x.size() != prog.num_scalars()) throw DimensionError("check_residuals: x has the wrong length");
  ResidualReport rep;
  for (const auto& c : prog.constraints()) {
    double v = 0.0;
    switch (c.kind) {
      case ConstraintKind::linear_eq:
        for (const auto& e : c.exprs) v = std::max(v, std::abs(e.evaluate(x)));
        break;
      case ConstraintKind::linear_ineq:
        for (const auto& e : c.exprs) v = std::max(v, e.evaluate(x));
        break;
      case ConstraintKind::soc: {
        double sq = 0.0;
        for (std::size_t i = 1; i < c.exprs.size(); ++i) {
          const double a = c.exprs[i].evaluate(x);
          sq += a * a;
        }
        v = std::max(0.0, std::sqrt(sq) - c.exprs[0].evaluate(x));
        break;
      }
      case ConstraintKind::psd: {
        const Eigen::MatrixXd M = c.matrix.evaluate(x);
        const double lmin =
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(0.5 * (M + M.transpose()), Eigen::EigenvaluesOnly)
                .eigenvalues()(0);
        v = std::max(0.0, -lmin);
        break;
      }
    }
    rep.per_constraint.emplace_back(c.label, v);
    rep.max_violation = std::max(rep.max_violation, v);
  }
  return rep;
}

}  // namespace tgcmpc::conic
