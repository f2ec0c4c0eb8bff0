#include <cmath>

#include "tgcmpc/errors.hpp"
#include "tgcmpc/synthesis.hpp"

namespace tgcmpc {

using conic::ExprMatrix;
using conic::ExprVector;
using conic::LinExpr;

namespace {

constexpr double kXFloor = 1e-8;
constexpr double kUpsilonFloor = 1e-9;

// diag(v_i I_{n_i}) for the given block sizes.
ExprMatrix block_scaling(const ExprVector& v, const std::vector<int>& sizes) {
  ExprVector d;
  for (std::size_t i = 0; i < sizes.size(); ++i)
    for (int k = 0; k < sizes[i]; ++k) d.push_back(v[i]);
  return ExprMatrix::diagonal(d);
}

std::vector<int> np_sizes(const UncertaintyStructure& st) {
  std::vector<int> out;
  for (const auto& b : st.blocks) out.push_back(b.np);
  return out;
}

std::vector<int> nq_sizes(const UncertaintyStructure& st) {
  std::vector<int> out;
  for (const auto& b : st.blocks) out.push_back(b.nq);
  return out;
}

Eigen::VectorXd expand(const Eigen::VectorXd& v, const std::vector<int>& sizes) {
  int n = 0;
  for (int k : sizes) n += k;
  Eigen::VectorXd out(n);
  int off = 0;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    out.segment(off, sizes[i]).setConstant(v(static_cast<Eigen::Index>(i)));
    off += sizes[i];
  }
  return out;
}

}  // namespace

conic::SolverSettings synthesis_settings() {
  conic::SolverSettings s;
  s.feas_tol = 1e-8;
  s.rel_gap = 1e-8;
  return s;
}

conic::ConeProgram build_gcc_lmi(const UncertainSystem& sys, const CostSpec& cost) {
  if (!cost.factorized) throw UsageError("build_gcc_lmi: cost is not factorized");
  const int nx = sys.nx(), nu = sys.nu(), nq = sys.nq(), nc = cost.nc();
  if (cost.Cc.cols() != nx || cost.Dcu.cols() != nu)
    throw DimensionError("build_gcc_lmi: cost factor does not match the system");

  conic::ConeProgram prog;
  const ExprMatrix X = prog.add_symmetric("X", nx);
  const ExprMatrix Y = prog.add_matrix("Y", nu, nx);
  const ExprVector ups = prog.add_vector("upsilon", sys.s());
  const ExprMatrix Z = prog.add_symmetric("Z", nx);

  const ExprMatrix Ups_p = block_scaling(ups, np_sizes(sys.structure));
  const ExprMatrix Ups_q = block_scaling(ups, nq_sizes(sys.structure));

  const ExprMatrix CyX = sys.Cy * X - sys.Dyu * Y;
  const ExprMatrix CcX = cost.Cc * X - cost.Dcu * Y;
  const ExprMatrix AX = sys.A * X - sys.Bu * Y;
  const ExprMatrix BUB = sys.Bw * Ups_p * Eigen::MatrixXd(sys.Bw.transpose());

  const ExprMatrix lmi = ExprMatrix::blocks({
      {-Ups_q, ExprMatrix::zero(nq, nc), ExprMatrix::zero(nq, nx), CyX},
      {ExprMatrix::zero(nc, nq), -ExprMatrix::identity(nc), ExprMatrix::zero(nc, nx), CcX},
      {ExprMatrix::zero(nx, nq), ExprMatrix::zero(nx, nc), BUB - X, AX},
      {CyX.transpose(), CcX.transpose(), AX.transpose(), -X},
  });
  prog.add_nsd("gcc_lmi", lmi);
  prog.add_nsd("cost_coupling", ExprMatrix::blocks({{-Z, ExprMatrix::identity(nx)}, {ExprMatrix::identity(nx), -X}}));
  prog.add_psd("X_floor", X - kXFloor * ExprMatrix::identity(nx));
  ExprVector floor;
  for (const auto& u : ups) floor.push_back(kUpsilonFloor - u);
  prog.add_linear_ineq("upsilon_floor", floor);

  LinExpr tr;
  for (int i = 0; i < nx; ++i) tr += Z(i, i);
  prog.minimize(tr);
  return prog;
}

SymMatrix compute_rbar(const UncertainSystem& sys, const CostSpec& cost, const SymMatrix& P,
                       const Eigen::VectorXd& upsilon) {
  if (upsilon.size() != sys.s()) throw DimensionError("compute_rbar: upsilon needs one entry per block");
  if ((upsilon.array() <= 0.0).any()) throw DomainError("compute_rbar: upsilon must be positive");
  const Eigen::VectorXd ups_p = expand(upsilon, np_sizes(sys.structure));
  const Eigen::VectorXd ups_q = expand(upsilon, nq_sizes(sys.structure));
  const Eigen::MatrixXd Pinv = sym_inverse(P).matrix();
  const Eigen::MatrixXd inner = Pinv - sys.Bw * ups_p.asDiagonal() * sys.Bw.transpose();
  Eigen::LLT<Eigen::MatrixXd> llt(0.5 * (inner + inner.transpose()));
  if (llt.info() != Eigen::Success)
    throw DomainError("compute_rbar: P^-1 - Bw Ups_p Bw' is not positive definite (inconsistent GCC)");
  const Eigen::MatrixXd rb = cost.R.matrix() +
                             sys.Dyu.transpose() * ups_q.cwiseInverse().asDiagonal() * sys.Dyu +
                             sys.Bu.transpose() * llt.solve(sys.Bu);
  SymMatrix out = SymMatrix::symmetrized(rb);
  if (!(min_eigenvalue(out) > 0.0)) throw DomainError("compute_rbar: result is not positive definite");
  return out;
}

GccSolution synthesize_gcc(const UncertainSystem& sys, const CostSpec& cost, const conic::SolverSettings& settings) {
  const conic::ConeProgram prog = build_gcc_lmi(sys, cost);
  const conic::Solution sol = conic::solve(prog, settings);
  if (sol.status == conic::SolveStatus::infeasible)
    throw InfeasibleError("no guaranteed cost controller exists at this uncertainty level");
  if (!sol.optimal()) throw SolverError("GCC synthesis: " + std::string(to_string(sol.status)) + ": " + sol.message);

  GccSolution g;
  g.X = SymMatrix::symmetrized(sol.symmetric("X"));
  g.Y = sol.matrix("Y", sys.nu(), sys.nx());
  g.upsilon = sol.vector("upsilon");
  g.P = sym_inverse(g.X);
  g.K = g.Y * g.P.matrix();
  g.trace_P = g.P.matrix().trace();
  g.Rbar = compute_rbar(sys, cost, g.P, g.upsilon);
  g.P_N = g.P;
  g.solver_tolerance = sol.solver_tolerance;
  return g;
}

double gcc_certificate_residual(const UncertainSystem& sys, const CostSpec& cost, const Eigen::MatrixXd& K,
                                const Eigen::MatrixXd& P, const Eigen::MatrixXd& delta) {
  check_admissible(sys.structure, delta);
  const auto [Ad, Bd] = perturbed_matrices(sys, delta);
  const Eigen::MatrixXd Acl = Ad - Bd * K;
  Eigen::MatrixXd M = Acl.transpose() * P * Acl - P + cost.Q.matrix() + K.transpose() * cost.R.matrix() * K -
                      cost.N * K - K.transpose() * cost.N.transpose();
  M = 0.5 * (M + M.transpose());
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(M, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
}

}  // namespace tgcmpc
