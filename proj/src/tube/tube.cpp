#include <cmath>
#include <cstdio>
#include <sstream>

#include "tgcmpc/errors.hpp"
#include "tgcmpc/tube.hpp"

namespace tgcmpc {

using conic::ExprVector;
using conic::LinExpr;

namespace {

double row_norm(const Eigen::MatrixXd& M, int i) { return spectral_norm(M.row(i)); }

ExprVector slice(const ExprVector& v, int start, int len) {
  return ExprVector(v.begin() + start, v.begin() + start + len);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

TubeConstants precompute_tube_constants(const UncertainSystem& sys, const PolytopeConstraints& constraints,
                                        const GccSolution& gcc, const RpiSolution& rpi,
                                        const std::optional<SymMatrix>& E_N) {
  const int nx = sys.nx(), nu = sys.nu();
  if (gcc.K.rows() != nu || gcc.K.cols() != nx) throw UsageError("tube constants: GCC gain does not match the system");
  if (rpi.K_R.rows() != nu || rpi.K_R.cols() != nx || rpi.E_R.n() != nx)
    throw UsageError("tube constants: RPI data does not match the system");
  if (rpi.a_sigma.size() != sys.s()) throw UsageError("tube constants: a_sigma needs one entry per block");
  if (constraints.Hx.cols() != nx || constraints.Hu.cols() != nu)
    throw UsageError("tube constants: constraint matrices do not match the system");
  if (E_N && E_N->n() != nx) throw UsageError("tube constants: E_N must be nx x nx");

  TubeConstants c;
  const Eigen::MatrixXd& Einv_sqrt = rpi.E_R_inv_sqrt.n() == nx ? rpi.E_R_inv_sqrt.matrix()
                                                                  : sym_inv_sqrt(rpi.E_R).matrix();
  c.Abar = sys.A - sys.Bu * gcc.K;
  c.Cbar_y = sys.Cy - sys.Dyu * gcc.K;
  const Eigen::MatrixXd CyR = (sys.Cy - sys.Dyu * rpi.K_R) * Einv_sqrt;
  c.Cy_alpha_norms.resize(sys.s());
  for (int i = 0; i < sys.s(); ++i)
    c.Cy_alpha_norms(i) = spectral_norm(CyR.middleRows(sys.structure.q_offset(i), sys.structure.blocks[i].nq));
  c.Rbar_sqrt = sym_sqrt(gcc.Rbar);
  c.kappa = spectral_norm(c.Rbar_sqrt.matrix() * (rpi.K_R - gcc.K) * Einv_sqrt);
  c.Hbar = constraints.Hx - constraints.Hu * gcc.K;
  const Eigen::MatrixXd HR = (constraints.Hx - constraints.Hu * rpi.K_R) * Einv_sqrt;
  c.HbarR_alpha_norms.resize(constraints.ng());
  for (int i = 0; i < constraints.ng(); ++i) c.HbarR_alpha_norms(i) = row_norm(HR, i);
  if (E_N) {
    c.E_N = *E_N;
    c.E_N_sqrt = sym_sqrt(*E_N);
    c.terminal_alpha_norm = spectral_norm(c.E_N_sqrt.matrix() * Einv_sqrt);
  }
  return c;
}

SymMatrix terminal_weight_from_rpi(const PolytopeConstraints& constraints, const RpiSolution& rpi) {
  const Eigen::MatrixXd HR = (constraints.Hx - constraints.Hu * rpi.K_R) * sym_inv_sqrt(rpi.E_R).matrix();
  double c = 0.0;
  for (int i = 0; i < constraints.ng(); ++i) {
    const double r = row_norm(HR, i) / constraints.g(i);
    c = std::max(c, r * r);
  }
  if (!(c > 0.0)) throw DomainError("terminal weight: constraints do not bound the state under K_R");
  return SymMatrix::symmetrized(c * rpi.E_R.matrix());
}

TubeProblem make_tube_problem(const Problem& problem, const GccSolution& gcc, const RpiSolution& rpi, int N,
                              const Eigen::VectorXd& x0, double alpha0, const std::optional<SymMatrix>& E_N) {
  TubeProblem p;
  p.sys = problem.system;
  p.cost = problem.cost;
  p.constraints = problem.constraints;
  p.gcc = gcc;
  p.rpi = rpi;
  p.consts = precompute_tube_constants(p.sys, p.constraints, gcc, rpi, E_N);
  p.N = N;
  p.x0 = x0;
  p.alpha0 = alpha0;
  p.use_terminal = E_N.has_value();
  return p;
}

conic::SolverSettings tube_settings() { return {}; }

conic::ConeProgram build_tube_socp(const TubeProblem& p) {
  const int nx = p.sys.nx(), nu = p.sys.nu(), s = p.sys.s(), N = p.N;
  if (N < 1) throw DomainError("tube horizon must be at least 1");
  if (p.alpha0 < 0.0) throw DomainError("alpha0 must be nonnegative");
  if (p.x0.size() != nx) throw DimensionError("x0 must have nx entries");
  require_finite(p.x0, "x0");
  if (p.use_terminal && !p.consts.E_N) throw UsageError("terminal constraint requested without E_N");
  const TubeConstants& c = p.consts;

  conic::ConeProgram prog;
  const ExprVector z = prog.add_vector("z", (N + 1) * nx);
  const ExprVector nu_v = prog.add_vector("nu", N * nu);
  const ExprVector alpha = prog.add_vector("alpha", N + 1);
  const ExprVector sigma = prog.add_vector("sigma", N * s);
  const ExprVector gamma = prog.add_vector("gamma", N);

  auto zk = [&](int k) { return slice(z, k * nx, nx); };
  auto nk = [&](int k) { return slice(nu_v, k * nu, nu); };

  prog.add_linear_eq("initial_state", zk(0) - conic::constant_vector(p.x0));
  prog.add_linear_eq("initial_alpha", {alpha[0] - p.alpha0});

  const std::string ks = "_k";
  for (int k = 0; k < N; ++k) {
    const std::string tag = ks + std::to_string(k);
    prog.add_linear_eq("dynamics" + tag, zk(k + 1) - (c.Abar * zk(k) + p.sys.Bu * nk(k)));

    ExprVector scal{std::sqrt(p.rpi.a_alpha) * alpha[k]};
    for (int i = 0; i < s; ++i) scal.push_back(std::sqrt(p.rpi.a_sigma(i)) * sigma[k * s + i]);
    prog.add_soc("alpha_step" + tag, alpha[k + 1], scal);

    for (int i = 0; i < s; ++i) {
      const int off = p.sys.structure.q_offset(i), nqi = p.sys.structure.blocks[i].nq;
      const ExprVector yi = c.Cbar_y.middleRows(off, nqi) * zk(k) + p.sys.Dyu.middleRows(off, nqi) * nk(k);
      prog.add_soc("block_" + std::to_string(i) + tag, sigma[k * s + i] - c.Cy_alpha_norms(i) * alpha[k], yi);
    }

    prog.add_soc("cost" + tag, gamma[k] - c.kappa * alpha[k], c.Rbar_sqrt.matrix() * nk(k));

    if (p.constraints.ng() > 0) {
      ExprVector rows = c.Hbar * zk(k) + p.constraints.Hu * nk(k);
      for (int i = 0; i < p.constraints.ng(); ++i)
        rows[i] += c.HbarR_alpha_norms(i) * alpha[k] - p.constraints.g(i);
      prog.add_linear_ineq("constraints" + tag, rows);
    }
  }
  if (p.use_terminal) {
    prog.add_soc("terminal", 1.0 - c.terminal_alpha_norm * alpha[N], c.E_N_sqrt.matrix() * zk(N));
  }

  const LinExpr t = conic::add_epigraph_sum_of_squares(prog, gamma);
  const double x0Px0 = p.x0.dot(p.gcc.P.matrix() * p.x0);
  prog.minimize(t + x0Px0);
  return prog;
}

TubeSolution solve_tube(const TubeProblem& p, const conic::SolverSettings& settings) {
  const conic::ConeProgram prog = build_tube_socp(p);
  const conic::Solution sol = conic::solve(prog, settings);
  TubeSolution out;
  out.status = sol.status;
  out.message = sol.message;
  out.solver_tolerance = sol.solver_tolerance;
  out.iterations = sol.iterations;
  if (!sol.optimal()) return out;

  const int nx = p.sys.nx(), nu = p.sys.nu(), s = p.sys.s(), N = p.N;
  const TubeConstants& c = p.consts;
  const Eigen::VectorXd z = sol.vector("z"), nu_v = sol.vector("nu");
  for (int k = 0; k <= N; ++k) out.z.push_back(z.segment(k * nx, nx));
  for (int k = 0; k < N; ++k) out.nu.push_back(nu_v.segment(k * nu, nu));

  // Smallest admissible tube scalars for this (z, nu).
  out.alpha.resize(N + 1);
  out.sigma.resize(N, s);
  out.gamma.resize(N);
  out.alpha(0) = p.alpha0;
  for (int k = 0; k < N; ++k) {
    for (int i = 0; i < s; ++i) {
      const int off = p.sys.structure.q_offset(i), nqi = p.sys.structure.blocks[i].nq;
      const Eigen::VectorXd yi = c.Cbar_y.middleRows(off, nqi) * out.z[k] + p.sys.Dyu.middleRows(off, nqi) * out.nu[k];
      out.sigma(k, i) = yi.norm() + c.Cy_alpha_norms(i) * out.alpha(k);
    }
    out.alpha(k + 1) = std::sqrt(p.rpi.a_alpha * out.alpha(k) * out.alpha(k) +
                                 p.rpi.a_sigma.dot(out.sigma.row(k).transpose().cwiseAbs2()));
    out.gamma(k) = (c.Rbar_sqrt.matrix() * out.nu[k]).norm() + c.kappa * out.alpha(k);
  }
  out.objective = p.x0.dot(p.gcc.P.matrix() * p.x0) + out.gamma.squaredNorm();
  return out;
}

Eigen::VectorXd control_input(const TubeSolution& sol, const GccSolution& gcc, const RpiSolution& rpi,
                              const Eigen::VectorXd& x_measured) {
  if (!sol.optimal() || sol.nu.empty()) throw UsageError("control_input: tube solution is not optimal");
  require_finite(x_measured, "measured state");
  const Eigen::VectorXd e = x_measured - sol.z.front();
  return -gcc.K * x_measured + sol.nu.front() - (rpi.K_R - gcc.K) * e;
}

double cost_bound(const TubeSolution& sol, const GccSolution& gcc) {
  if (!sol.optimal()) throw UsageError("cost_bound: tube solution is not optimal");
  const Eigen::VectorXd& x0 = sol.z.front();
  return x0.dot(gcc.P.matrix() * x0) + sol.gamma.squaredNorm();
}

std::string tube_csv(const TubeSolution& sol) {
  if (!sol.optimal()) throw UsageError("tube_csv: tube solution is not optimal");
  const int N = static_cast<int>(sol.nu.size());
  const int nx = static_cast<int>(sol.z.front().size());
  const int nu = N ? static_cast<int>(sol.nu.front().size()) : 0;
  const int s = static_cast<int>(sol.sigma.cols());
  std::ostringstream os;
  os << "k";
  for (int i = 0; i < nx; ++i) os << ",z" << i;
  for (int i = 0; i < nu; ++i) os << ",nu" << i;
  os << ",alpha";
  for (int i = 0; i < s; ++i) os << ",sigma" << i;
  os << ",gamma\n";
  for (int k = 0; k <= N; ++k) {
    os << k;
    for (int i = 0; i < nx; ++i) os << ',' << fmt(sol.z[k](i));
    for (int i = 0; i < nu; ++i) os << ',' << (k < N ? fmt(sol.nu[k](i)) : "");
    os << ',' << fmt(sol.alpha(k));
    for (int i = 0; i < s; ++i) os << ',' << (k < N ? fmt(sol.sigma(k, i)) : "");
    os << ',' << (k < N ? fmt(sol.gamma(k)) : "") << '\n';
  }
  return os.str();
}

}  // namespace tgcmpc
