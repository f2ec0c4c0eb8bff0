#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>

#include "tgcmpc/conic.hpp"
#include "tgcmpc/detail/cones.hpp"
#include "tgcmpc/errors.hpp"

namespace tgcmpc::conic {

namespace {

constexpr double kSqrt2 = 1.4142135623730951;

void put_row(Eigen::MatrixXd& M, Eigen::VectorXd& rhs, int row, const LinExpr& e, double sign) {
  for (const auto& [i, c] : e.terms()) M(row, i) += sign * c;
  rhs(row) = -sign * e.constant();
}

}  // namespace

StandardForm compile(const ConeProgram& prog) {
  const int n = prog.num_scalars();
  int neq = 0, nl = 0;
  std::vector<const Constraint*> socs, psds;
  for (const auto& c : prog.constraints()) {
    switch (c.kind) {
      case ConstraintKind::linear_eq:
        neq += static_cast<int>(c.exprs.size());
        break;
      case ConstraintKind::linear_ineq:
        nl += static_cast<int>(c.exprs.size());
        break;
      case ConstraintKind::soc:
        socs.push_back(&c);
        break;
      case ConstraintKind::psd:
        psds.push_back(&c);
        break;
    }
  }
  StandardForm sf;
  sf.dims.l = nl;
  for (const auto* c : socs) sf.dims.q.push_back(static_cast<int>(c->exprs.size()));
  for (const auto* c : psds) sf.dims.s.push_back(c->matrix.rows());
  const int m = sf.dims.total();

  sf.c = Eigen::VectorXd::Zero(n);
  for (const auto& [i, v] : prog.objective().terms()) sf.c(i) = v;
  sf.objective_offset = prog.objective().constant();
  sf.A = Eigen::MatrixXd::Zero(neq, n);
  sf.b = Eigen::VectorXd::Zero(neq);
  sf.G = Eigen::MatrixXd::Zero(m, n);
  sf.h = Eigen::VectorXd::Zero(m);

  int ra = 0, rg = 0;
  for (const auto& c : prog.constraints()) {
    if (c.kind == ConstraintKind::linear_eq)
      for (const auto& e : c.exprs) put_row(sf.A, sf.b, ra++, e, 1.0);
    if (c.kind == ConstraintKind::linear_ineq)
      for (const auto& e : c.exprs) put_row(sf.G, sf.h, rg++, e, 1.0);
  }
  // Cone rows: s = expr = h - G x, so G = -coef and h = constant.
  for (const auto* c : socs)
    for (const auto& e : c->exprs) put_row(sf.G, sf.h, rg++, e, -1.0);
  for (const auto* c : psds) {
    const int k = c->matrix.rows();
    for (int j = 0; j < k; ++j)
      for (int i = j; i < k; ++i) {
        const double scale = (i == j) ? 1.0 : kSqrt2;
        put_row(sf.G, sf.h, rg++, scale * c->matrix(i, j), -1.0);
      }
  }
  return sf;
}

namespace {

struct Kkt {
  const StandardForm& sf;
  const detail::NtScaling& w;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu;
  int n, p;

  Kkt(const StandardForm& f, const detail::NtScaling& scaling) : sf(f), w(scaling) {
    n = static_cast<int>(sf.c.size());
    p = static_cast<int>(sf.b.size());
    const int m = static_cast<int>(sf.h.size());
    Eigen::MatrixXd Gs(m, n);
    for (int j = 0; j < n; ++j) Gs.col(j) = w.apply_inverse_transpose(sf.G.col(j));
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n + p, n + p);
    K.topLeftCorner(n, n) = Gs.transpose() * Gs;
    // Small static regularization; refinement against the exact system below
    // removes its effect.
    const double delta = 1e-11;
    K.topLeftCorner(n, n).diagonal().array() += delta;
    K.topRightCorner(n, p) = sf.A.transpose();
    K.bottomLeftCorner(p, n) = sf.A;
    K.bottomRightCorner(p, p).diagonal().array() -= delta;
    lu.compute(K);
  }

  // W^{-1} W^{-T} v
  Eigen::VectorXd winv2(const Eigen::VectorXd& v) const { return w.apply_inverse(w.apply_inverse_transpose(v)); }
  // W' W v
  Eigen::VectorXd w2(const Eigen::VectorXd& v) const { return w.apply_transpose(w.apply(v)); }

  void reduced(const Eigen::VectorXd& r1, const Eigen::VectorXd& r2, const Eigen::VectorXd& r3, Eigen::VectorXd& dx,
               Eigen::VectorXd& dy, Eigen::VectorXd& dz) const {
    Eigen::VectorXd rhs(n + p);
    rhs.head(n) = r1 + sf.G.transpose() * winv2(r3);
    rhs.tail(p) = r2;
    const Eigen::VectorXd sol = lu.solve(rhs);
    dx = sol.head(n);
    dy = sol.tail(p);
    dz = winv2(sf.G * dx - r3);
  }

  // Solves A'dy + G'dz = r1, A dx = r2, G dx - W'W dz = r3 with refinement.
  void solve(const Eigen::VectorXd& r1, const Eigen::VectorXd& r2, const Eigen::VectorXd& r3, Eigen::VectorXd& dx,
             Eigen::VectorXd& dy, Eigen::VectorXd& dz) const {
    reduced(r1, r2, r3, dx, dy, dz);
    double last = std::numeric_limits<double>::infinity();
    for (int it = 0; it < 10; ++it) {
      const Eigen::VectorXd e1 = r1 - sf.A.transpose() * dy - sf.G.transpose() * dz;
      const Eigen::VectorXd e2 = r2 - sf.A * dx;
      // Third block measured in the scaled space: W^{-T} r3 = W^{-T} G dx - W dz.
      const Eigen::VectorXd e3 = r3 - (sf.G * dx - w2(dz));
      const double err = std::max({e1.lpNorm<Eigen::Infinity>(), e2.size() ? e2.lpNorm<Eigen::Infinity>() : 0.0,
                                   w.apply_inverse_transpose(e3).lpNorm<Eigen::Infinity>()});
      if (!(err > 1e-14) || !(err < 0.5 * last)) break;
      last = err;
      Eigen::VectorXd cx, cy, cz;
      reduced(e1, e2, e3, cx, cy, cz);
      dx += cx;
      dy += cy;
      dz += cz;
    }
  }
};

double safe_norm(const Eigen::VectorXd& v) { return v.size() ? v.norm() : 0.0; }

}  // namespace

Solution solve_standard(const StandardForm& sf, const SolverSettings& settings) {
  using detail::identity;
  using detail::jordan_product;
  using detail::max_step;
  using detail::min_cone_value;

  const ConeDims& dims = sf.dims;
  const int n = static_cast<int>(sf.c.size());
  const int m = static_cast<int>(sf.h.size());
  const int p = static_cast<int>(sf.b.size());
  Solution out;

  const Eigen::VectorXd e = identity(dims);
  const double resx0 = std::max(1.0, safe_norm(sf.c));
  const double resy0 = std::max(1.0, safe_norm(sf.b));
  const double resz0 = std::max(1.0, safe_norm(sf.h));

  Eigen::VectorXd x, y, z, s;
  double tau = 1.0, kappa = 1.0;
  try {
    // Starting point from two least-squares problems with W = I.
    const detail::NtScaling w0(dims, e, e);
    const Kkt kkt(sf, w0);
    Eigen::VectorXd dz;
    kkt.solve(Eigen::VectorXd::Zero(n), sf.b, sf.h, x, y, dz);
    s = sf.h - sf.G * x;
    Eigen::VectorXd x2;
    kkt.solve(-sf.c, Eigen::VectorXd::Zero(p), Eigen::VectorXd::Zero(m), x2, y, z);
    const double ms = min_cone_value(dims, s);
    if (!(ms > 1e-8 * std::max(1.0, s.lpNorm<Eigen::Infinity>()))) s += (1.0 + std::max(0.0, -ms)) * e;
    const double mz = min_cone_value(dims, z);
    if (!(mz > 1e-8 * std::max(1.0, z.lpNorm<Eigen::Infinity>()))) z += (1.0 + std::max(0.0, -mz)) * e;
  } catch (const SolverError& err) {
    out.message = err.what();
    return out;
  }

  const double degree = dims.degree();
  double pres = 0.0, dres = 0.0, relgap = 0.0;

  // Best iterate seen so far, measured in multiples of the requested
  // tolerances. Used when the iteration breaks down near the optimum.
  constexpr double kReducedAccuracy = 100.0;
  double best_score = std::numeric_limits<double>::infinity();
  double best_tol = 0.0;
  Eigen::VectorXd best_x;
  auto fail = [&](std::string msg) {
    if (best_score <= kReducedAccuracy) {
      out.status = SolveStatus::optimal;
      out.x = best_x;
      out.objective = sf.c.dot(out.x) + sf.objective_offset;
      out.solver_tolerance = best_tol;
      out.message = "converged to reduced accuracy (" + msg + ")";
    } else {
      out.message = std::move(msg);
    }
    return out;
  };
  for (int iter = 0; iter <= settings.max_iters; ++iter) {
    out.iterations = iter;
    const Eigen::VectorXd rx = sf.A.transpose() * y + sf.G.transpose() * z + sf.c * tau;
    const Eigen::VectorXd ry = sf.A * x - sf.b * tau;
    const Eigen::VectorXd rz = sf.G * x + s - sf.h * tau;
    const double cx = sf.c.dot(x);
    const double by = sf.b.dot(y);
    const double hz = sf.h.dot(z);
    const double rt = kappa + cx + by + hz;
    const double gap = s.dot(z);
    const double mu = (gap + tau * kappa) / (degree + 1.0);
    const double pcost = cx / tau;
    const double dcost = -(by + hz) / tau;

    pres = std::max(safe_norm(ry) / resy0, safe_norm(rz) / resz0) / tau;
    dres = safe_norm(rx) / resx0 / tau;
    const double abs_gap = gap / (tau * tau);
    if (pcost < 0.0) {
      relgap = abs_gap / -pcost;
    } else if (dcost > 0.0) {
      relgap = abs_gap / dcost;
    } else {
      relgap = std::numeric_limits<double>::infinity();
    }
    const double gap_measure = std::min(relgap, abs_gap);
    out.solver_tolerance = std::max({pres, dres, gap_measure});

    if (settings.verbose) {
      std::fprintf(stderr, "%3d pcost % .8e dcost % .8e pres %.2e dres %.2e gap %.2e tau %.2e kappa %.2e\n", iter,
                   pcost, dcost, pres, dres, abs_gap, tau, kappa);
    }
    if (!std::isfinite(mu) || !std::isfinite(pres) || !std::isfinite(dres)) return fail("non-finite iterate");
    const double score =
        std::max({pres / settings.feas_tol, dres / settings.feas_tol, gap_measure / settings.rel_gap});
    if (score < best_score) {
      best_score = score;
      best_tol = out.solver_tolerance;
      best_x = x / tau;
    }
    if (pres <= settings.feas_tol && dres <= settings.feas_tol && gap_measure <= settings.rel_gap) {
      out.status = SolveStatus::optimal;
      out.x = x / tau;
      out.objective = sf.c.dot(out.x) + sf.objective_offset;
      out.message = "converged";
      return out;
    }
    if (hz + by < 0.0) {
      const double pinf = safe_norm(Eigen::VectorXd(sf.A.transpose() * y + sf.G.transpose() * z)) / resx0 / -(hz + by);
      if (pinf <= settings.feas_tol) {
        out.status = SolveStatus::infeasible;
        out.message = "primal infeasibility certificate";
        return out;
      }
    }
    if (cx < 0.0) {
      const double dinf =
          std::max(safe_norm(Eigen::VectorXd(sf.A * x)) / resy0, safe_norm(Eigen::VectorXd(sf.G * x + s)) / resz0) /
          -cx;
      if (dinf <= settings.feas_tol) {
        out.status = SolveStatus::unbounded;
        out.message = "dual infeasibility certificate";
        return out;
      }
    }
    if (iter == settings.max_iters) break;

    try {
      const detail::NtScaling w(dims, s, z);
      const Eigen::VectorXd& lam = w.lambda();
      const Kkt kkt(sf, w);

      Eigen::VectorXd x1, y1, z1;
      kkt.solve(-sf.c, sf.b, sf.h, x1, y1, z1);
      const double denom_base = sf.c.dot(x1) + sf.b.dot(y1) + sf.h.dot(z1) - kappa / tau;

      auto direction = [&](double sigma, const Eigen::VectorXd& ds_target, double dk_target, Eigen::VectorXd& dx,
                           Eigen::VectorXd& dy, Eigen::VectorXd& dz, Eigen::VectorXd& ds, double& dtau,
                           double& dkappa) {
        const double f = 1.0 - sigma;
        const Eigen::VectorXd ld = w.lambda_divide(ds_target);
        Eigen::VectorXd x2, y2, z2;
        kkt.solve(-f * rx, -f * ry, -f * rz - w.apply_transpose(ld), x2, y2, z2);
        dtau = (-f * rt - dk_target / tau - (sf.c.dot(x2) + sf.b.dot(y2) + sf.h.dot(z2))) / denom_base;
        dx = x2 + dtau * x1;
        dy = y2 + dtau * y1;
        dz = z2 + dtau * z1;
        ds = w.apply_transpose(ld - w.apply(dz));
        dkappa = (dk_target - kappa * dtau) / tau;
      };

      auto step_to_boundary = [&](const Eigen::VectorXd& ds, const Eigen::VectorXd& dz, double dtau, double dkappa) {
        double t = std::min(max_step(dims, s, ds, 1e30), max_step(dims, z, dz, 1e30));
        if (dtau < 0.0) t = std::min(t, -tau / dtau);
        if (dkappa < 0.0) t = std::min(t, -kappa / dkappa);
        return t;
      };

      // Predictor.
      Eigen::VectorXd dx, dy, dz, ds;
      double dtau = 0.0, dkappa = 0.0;
      const Eigen::VectorXd lam2 = jordan_product(dims, lam, lam);
      direction(0.0, -lam2, -tau * kappa, dx, dy, dz, ds, dtau, dkappa);
      const double alpha_aff = std::min(1.0, step_to_boundary(ds, dz, dtau, dkappa));
      const double sigma = std::pow(1.0 - alpha_aff, 3);

      // Corrector.
      const Eigen::VectorXd corr = jordan_product(dims, w.apply_inverse_transpose(ds), w.apply(dz));
      const Eigen::VectorXd target = -lam2 - corr + sigma * mu * e;
      const double ktarget = -tau * kappa - dtau * dkappa + sigma * mu;
      direction(sigma, target, ktarget, dx, dy, dz, ds, dtau, dkappa);
      const double alpha = std::min(1.0, 0.99 * step_to_boundary(ds, dz, dtau, dkappa));
      if (!(alpha > 1e-12)) return fail("step length collapsed at iteration " + std::to_string(iter));
      x += alpha * dx;
      y += alpha * dy;
      z += alpha * dz;
      s += alpha * ds;
      tau += alpha * dtau;
      kappa += alpha * dkappa;
    } catch (const SolverError& err) {
      return fail(std::string(err.what()) + " at iteration " + std::to_string(iter));
    }
  }
  char buf[160];
  std::snprintf(buf, sizeof buf, "iteration limit reached (pres %.2e, dres %.2e, gap %.2e)", pres, dres, relgap);
  return fail(buf);
}

Solution InteriorPointSolver::solve(const ConeProgram& prog, const SolverSettings& settings) const {
  const StandardForm sf = compile(prog);
  Solution sol = solve_standard(sf, settings);
  if (sol.optimal()) {
    for (const auto& v : prog.variables()) {
      sol.values[v.name] = std::vector<double>(sol.x.data() + v.offset, sol.x.data() + v.offset + v.size());
    }
  } else {
    sol.x.resize(0);
  }
  return sol;
}

Solution solve(const ConeProgram& prog, const SolverSettings& settings) {
  return InteriorPointSolver().solve(prog, settings);
}

}  // namespace tgcmpc::conic
