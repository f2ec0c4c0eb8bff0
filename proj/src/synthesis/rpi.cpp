#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "tgcmpc/errors.hpp"
#include "tgcmpc/synthesis.hpp"

namespace tgcmpc {

using conic::ExprMatrix;
using conic::ExprVector;
using conic::LinExpr;

namespace {

ExprMatrix sigma_scaling(const ExprVector& a_sigma, const UncertaintyStructure& st) {
  ExprVector d;
  for (int i = 0; i < st.s(); ++i)
    for (int k = 0; k < st.blocks[i].np; ++k) d.push_back(a_sigma[i]);
  return ExprMatrix::diagonal(d);
}

void check_a_alpha(double a_alpha) {
  if (!(a_alpha > 0.0 && a_alpha < 1.0)) throw DomainError("a_alpha must lie in (0, 1)");
}

void check_gain(const UncertainSystem& sys, const Eigen::MatrixXd& K) {
  if (K.rows() != sys.nu() || K.cols() != sys.nx()) throw DimensionError("tube gain must be nu x nx");
  require_finite(K, "tube gain");
}

void add_budget(conic::ConeProgram& prog, double a_alpha, const ExprVector& a_sigma) {
  LinExpr sum(a_alpha - 1.0);
  for (const auto& a : a_sigma) sum += a;
  prog.add_linear_ineq("budget", {sum});
  ExprVector nonneg;
  for (const auto& a : a_sigma) nonneg.push_back(-a);
  prog.add_linear_ineq("a_sigma_nonneg", nonneg);
}

std::string grid_text(const std::vector<RpiAttempt>& attempts) {
  std::ostringstream os;
  for (std::size_t i = 0; i < attempts.size(); ++i) {
    if (i) os << ", ";
    os << attempts[i].a_alpha << ":" << to_string(attempts[i].status);
  }
  return os.str();
}

}  // namespace

std::vector<double> AlphaGrid::points() const {
  if (steps < 1) throw DomainError("a_alpha grid needs at least one point");
  if (steps == 1) return {lo};
  if (!(lo > 0.0 && lo < hi && hi < 1.0)) throw DomainError("a_alpha grid needs 0 < lo < hi < 1");
  std::vector<double> p(steps);
  for (int i = 0; i < steps; ++i) p[i] = lo + (hi - lo) * i / (steps - 1);
  return p;
}

void finalize_rpi(RpiSolution& r) { r.E_R_inv_sqrt = sym_inv_sqrt(r.E_R); }

double rpi_step(const RpiSolution& rpi, double alpha, const Eigen::VectorXd& sigma) {
  if (sigma.size() != rpi.a_sigma.size()) throw DimensionError("rpi_step: sigma needs one entry per block");
  if (alpha < 0.0 || (sigma.array() < 0.0).any()) throw DomainError("rpi_step: alpha and sigma must be nonnegative");
  return std::sqrt(rpi.a_alpha * alpha * alpha + rpi.a_sigma.dot(sigma.cwiseAbs2()));
}

conic::ConeProgram build_mrpi_program(const UncertainSystem& sys, const Eigen::MatrixXd& K_R, double a_alpha) {
  check_a_alpha(a_alpha);
  check_gain(sys, K_R);
  const int nx = sys.nx();
  const Eigen::MatrixXd Abar = sys.A - sys.Bu * K_R;
  const Eigen::MatrixXd Cbar = sys.Cy - sys.Dyu * K_R;

  conic::ConeProgram prog;
  const ExprMatrix E = prog.add_symmetric("E", nx);
  const ExprVector a_sigma = prog.add_vector("a_sigma", sys.s());
  const ExprMatrix As = sigma_scaling(a_sigma, sys.structure);
  const int np = sys.np();

  const ExprMatrix EA = E * Abar;
  const ExprMatrix EB = E * sys.Bw;
  prog.add_nsd("invariance", ExprMatrix::blocks({
                                 {-E, EA, EB},
                                 {EA.transpose(), -a_alpha * E, ExprMatrix::zero(nx, np)},
                                 {EB.transpose(), ExprMatrix::zero(np, nx), -As},
                             }));
  add_budget(prog, a_alpha, a_sigma);
  for (int i = 0; i < sys.s(); ++i) {
    const Eigen::MatrixXd Ci = Cbar.middleRows(sys.structure.q_offset(i), sys.structure.blocks[i].nq);
    prog.add_psd("output_bound_" + std::to_string(i), E - ExprMatrix::constant(Ci.transpose() * Ci));
  }
  const LinExpr t = conic::add_geometric_mean(prog, E, "logdet");
  prog.minimize(-t);
  return prog;
}

conic::ConeProgram build_approx_mrpi_program(const UncertainSystem& sys, double a_alpha,
                                             const std::optional<Eigen::MatrixXd>& K_R) {
  check_a_alpha(a_alpha);
  if (K_R) check_gain(sys, *K_R);
  const int nx = sys.nx(), nu = sys.nu(), np = sys.np();

  conic::ConeProgram prog;
  const ExprMatrix X = prog.add_symmetric("X", nx);
  const ExprMatrix Y = K_R ? (*K_R) * X : prog.add_matrix("Y", nu, nx);
  const ExprVector a_sigma = prog.add_vector("a_sigma", sys.s());
  const ExprMatrix As = sigma_scaling(a_sigma, sys.structure);

  const ExprMatrix AX = sys.A * X - sys.Bu * Y;
  const ExprMatrix Bw = ExprMatrix::constant(sys.Bw);
  prog.add_nsd("invariance", ExprMatrix::blocks({
                                 {-X, AX, Bw},
                                 {AX.transpose(), -a_alpha * X, ExprMatrix::zero(nx, np)},
                                 {Bw.transpose(), ExprMatrix::zero(np, nx), -As},
                             }));
  for (int i = 0; i < sys.s(); ++i) {
    const int nqi = sys.structure.blocks[i].nq;
    const ExprMatrix CX = sys.Cy_block(i) * X - sys.Dyu_block(i) * Y;
    prog.add_nsd("output_bound_" + std::to_string(i),
                 ExprMatrix::blocks({{-ExprMatrix::identity(nqi), CX}, {CX.transpose(), -X}}));
  }
  add_budget(prog, a_alpha, a_sigma);
  LinExpr tr;
  for (int i = 0; i < nx; ++i) tr += X(i, i);
  prog.minimize(tr);
  return prog;
}

namespace {

RpiAttempt failed(double a_alpha, const conic::Solution& sol) {
  RpiAttempt a;
  a.a_alpha = a_alpha;
  a.status = sol.status;
  a.message = sol.message;
  return a;
}

}  // namespace

RpiAttempt synthesize_mrpi(const UncertainSystem& sys, const Eigen::MatrixXd& K_R, double a_alpha,
                           const conic::SolverSettings& settings) {
  const conic::ConeProgram prog = build_mrpi_program(sys, K_R, a_alpha);
  const conic::Solution sol = conic::solve(prog, settings);
  if (!sol.optimal()) return failed(a_alpha, sol);
  RpiSolution r;
  r.E_R = SymMatrix::symmetrized(sol.symmetric("E"));
  if (!(min_eigenvalue(r.E_R) > 0.0)) {
    RpiAttempt a;
    a.a_alpha = a_alpha;
    a.message = "E_R is not positive definite";
    return a;
  }
  r.K_R = K_R;
  r.a_alpha = a_alpha;
  r.a_sigma = sol.vector("a_sigma").cwiseMax(0.0);
  r.method = "mrpi";
  r.objective = sol.objective;
  r.solver_tolerance = sol.solver_tolerance;
  finalize_rpi(r);
  return {a_alpha, sol.status, r, sol.message};
}

RpiAttempt synthesize_approx_mrpi(const UncertainSystem& sys, double a_alpha,
                                  const std::optional<Eigen::MatrixXd>& K_R,
                                  const conic::SolverSettings& settings) {
  const conic::ConeProgram prog = build_approx_mrpi_program(sys, a_alpha, K_R);
  const conic::Solution sol = conic::solve(prog, settings);
  if (!sol.optimal()) return failed(a_alpha, sol);
  const SymMatrix X = SymMatrix::symmetrized(sol.symmetric("X"));
  if (!(min_eigenvalue(X) > 0.0)) {
    RpiAttempt a;
    a.a_alpha = a_alpha;
    a.message = "X is not positive definite";
    return a;
  }
  RpiSolution r;
  r.E_R = sym_inverse(X);
  r.K_R = K_R ? *K_R : Eigen::MatrixXd(sol.matrix("Y", sys.nu(), sys.nx()) * r.E_R.matrix());
  r.a_alpha = a_alpha;
  r.a_sigma = sol.vector("a_sigma").cwiseMax(0.0);
  r.method = "approx";
  r.objective = sol.objective;
  r.solver_tolerance = sol.solver_tolerance;
  finalize_rpi(r);
  return {a_alpha, sol.status, r, sol.message};
}

double rpi_rank(const RpiSolution& rpi, RpiRanking ranking) {
  switch (ranking) {
    case RpiRanking::logdet:
      return -logdet(rpi.E_R);
    case RpiRanking::trace:
      return sym_inverse(rpi.E_R).matrix().trace();
  }
  return 0.0;
}

std::vector<RpiAttempt> scan_a_alpha_serial(const RpiSynth& synth, const AlphaGrid& grid) {
  const std::vector<double> pts = grid.points();
  std::vector<RpiAttempt> out;
  out.reserve(pts.size());
  for (double a : pts) out.push_back(synth(a));
  return out;
}

std::vector<RpiAttempt> scan_a_alpha(const RpiSynth& synth, const AlphaGrid& grid) {
  const std::vector<double> pts = grid.points();
  std::vector<RpiAttempt> out(pts.size());
  const int n = static_cast<int>(pts.size());
  // Each grid point is an independent solve; exceptions are caught per point
  // so none escapes the parallel region.
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n; ++i) {
    try {
      out[i] = synth(pts[i]);
    } catch (const std::exception& e) {
      out[i].a_alpha = pts[i];
      out[i].message = e.what();
    }
  }
  return out;
}

RpiSolution select_best(const std::vector<RpiAttempt>& attempts, RpiRanking ranking) {
  const RpiSolution* best = nullptr;
  double best_rank = std::numeric_limits<double>::infinity();
  for (const auto& a : attempts) {
    if (!a.solution) continue;
    const double r = rpi_rank(*a.solution, ranking);
    // Ranks within 1e-9 (relative) count as a tie, broken by smaller a_alpha.
    const double slack = 1e-9 * (1.0 + std::abs(best_rank));
    const bool better = !best || r < best_rank - slack || (r <= best_rank + slack && a.a_alpha < best->a_alpha);
    if (better) {
      best = &*a.solution;
      best_rank = r;
    }
  }
  if (!best) throw InfeasibleError("no RPI level set on the a_alpha grid [" + grid_text(attempts) + "]");
  return *best;
}

RpiSolution line_search_a_alpha(const RpiSynth& synth, const AlphaGrid& grid, RpiRanking ranking) {
  return select_best(scan_a_alpha(synth, grid), ranking);
}

double rpi_certificate_residual(const UncertainSystem& sys, const RpiSolution& rpi) {
  const int nx = sys.nx(), np = sys.np();
  const Eigen::MatrixXd& E = rpi.E_R.matrix();
  const Eigen::MatrixXd Abar = sys.A - sys.Bu * rpi.K_R;
  Eigen::MatrixXd AB(nx, nx + np);
  AB << Abar, sys.Bw;
  Eigen::VectorXd as(np);
  for (int i = 0, off = 0; i < sys.s(); ++i) {
    as.segment(off, sys.structure.blocks[i].np).setConstant(rpi.a_sigma(i));
    off += sys.structure.blocks[i].np;
  }
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(nx + np, nx + np);
  D.topLeftCorner(nx, nx) = rpi.a_alpha * E;
  D.bottomRightCorner(np, np) = as.asDiagonal();
  // [Abar Bw]' E [Abar Bw] <= diag(a_alpha E, A_sigma), measured relative to E's scale.
  Eigen::MatrixXd M = AB.transpose() * E * AB - D;
  M = 0.5 * (M + M.transpose());
  double worst = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(M, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
  const Eigen::MatrixXd Cbar = sys.Cy - sys.Dyu * rpi.K_R;
  for (int i = 0; i < sys.s(); ++i) {
    const Eigen::MatrixXd Ci = Cbar.middleRows(sys.structure.q_offset(i), sys.structure.blocks[i].nq);
    Eigen::MatrixXd G = Ci.transpose() * Ci - E;
    G = 0.5 * (G + G.transpose());
    worst = std::max(worst,
                     Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(G, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff());
  }
  worst = std::max(worst, rpi.a_alpha + rpi.a_sigma.sum() - 1.0);
  return std::max(worst, 0.0);
}

}  // namespace tgcmpc
