#include <algorithm>
#include <cmath>
#include <limits>

#include "tgcmpc/detail/cones.hpp"
#include "tgcmpc/errors.hpp"

namespace tgcmpc::conic {

int ConeDims::total() const {
  int t = l;
  for (int k : q) t += k;
  for (int n : s) t += detail::svec_size(n);
  return t;
}

int ConeDims::degree() const {
  int d = l + static_cast<int>(q.size());
  for (int n : s) d += n;
  return d;
}

namespace detail {

namespace {

constexpr double kSqrt2 = 1.4142135623730951;

// Visits each block: f(kind, offset, size_or_n).
enum class Block { lp, soc, psd };

template <class F>
void for_each_block(const ConeDims& dims, F&& f) {
  int off = 0;
  if (dims.l > 0) f(Block::lp, off, dims.l);
  off += dims.l;
  for (int k : dims.q) {
    f(Block::soc, off, k);
    off += k;
  }
  for (int n : dims.s) {
    f(Block::psd, off, n);
    off += svec_size(n);
  }
}

double soc_step(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& d, double cap) {
  const double x0 = x(0), d0 = d(0);
  const auto x1 = x.tail(x.size() - 1);
  const auto d1 = d.tail(d.size() - 1);
  const double a = d0 * d0 - d1.squaredNorm();
  const double b = x0 * d0 - x1.dot(d1);
  const double c = std::max(x0 * x0 - x1.squaredNorm(), 0.0);
  double t = cap;
  // Also keep x0 + t d0 >= 0.
  if (d0 < 0.0) t = std::min(t, -x0 / d0);
  if (a == 0.0) {
    if (b < 0.0) t = std::min(t, -c / (2.0 * b));
    return t;
  }
  const double disc = b * b - a * c;
  if (disc < 0.0) return t;
  const double sq = std::sqrt(disc);
  const double qq = -(b + std::copysign(sq, b));
  for (double r : {qq / a, qq != 0.0 ? c / qq : std::numeric_limits<double>::infinity()}) {
    if (r > 0.0) t = std::min(t, r);
  }
  return t;
}

}  // namespace

int svec_size(int n) { return n * (n + 1) / 2; }

Eigen::VectorXd svec(const Eigen::MatrixXd& m) {
  const int n = static_cast<int>(m.rows());
  Eigen::VectorXd v(svec_size(n));
  int k = 0;
  for (int j = 0; j < n; ++j)
    for (int i = j; i < n; ++i, ++k) v(k) = (i == j) ? m(i, j) : kSqrt2 * 0.5 * (m(i, j) + m(j, i));
  return v;
}

Eigen::MatrixXd smat(const Eigen::VectorXd& v, int n) {
  if (v.size() != svec_size(n)) throw DimensionError("smat: length mismatch");
  Eigen::MatrixXd m(n, n);
  int k = 0;
  for (int j = 0; j < n; ++j)
    for (int i = j; i < n; ++i, ++k) {
      if (i == j) {
        m(i, i) = v(k);
      } else {
        m(i, j) = m(j, i) = v(k) / kSqrt2;
      }
    }
  return m;
}

Eigen::VectorXd identity(const ConeDims& dims) {
  Eigen::VectorXd e = Eigen::VectorXd::Zero(dims.total());
  for_each_block(dims, [&](Block b, int off, int n) {
    switch (b) {
      case Block::lp:
        e.segment(off, n).setOnes();
        break;
      case Block::soc:
        e(off) = 1.0;
        break;
      case Block::psd:
        e.segment(off, svec_size(n)) = svec(Eigen::MatrixXd::Identity(n, n));
        break;
    }
  });
  return e;
}

Eigen::VectorXd jordan_product(const ConeDims& dims, const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
  Eigen::VectorXd out(u.size());
  for_each_block(dims, [&](Block b, int off, int n) {
    switch (b) {
      case Block::lp:
        out.segment(off, n) = u.segment(off, n).cwiseProduct(v.segment(off, n));
        break;
      case Block::soc: {
        const auto us = u.segment(off, n);
        const auto vs = v.segment(off, n);
        out(off) = us.dot(vs);
        out.segment(off + 1, n - 1) = us(0) * vs.tail(n - 1) + vs(0) * us.tail(n - 1);
        break;
      }
      case Block::psd: {
        const int m = svec_size(n);
        const Eigen::MatrixXd U = smat(u.segment(off, m), n);
        const Eigen::MatrixXd V = smat(v.segment(off, m), n);
        out.segment(off, m) = svec(0.5 * (U * V + V * U));
        break;
      }
    }
  });
  return out;
}

double max_step(const ConeDims& dims, const Eigen::VectorXd& x, const Eigen::VectorXd& dx, double cap) {
  double t = cap;
  for_each_block(dims, [&](Block b, int off, int n) {
    switch (b) {
      case Block::lp:
        for (int i = off; i < off + n; ++i)
          if (dx(i) < 0.0) t = std::min(t, -x(i) / dx(i));
        break;
      case Block::soc:
        t = std::min(t, soc_step(x.segment(off, n), dx.segment(off, n), cap));
        break;
      case Block::psd: {
        const int m = svec_size(n);
        Eigen::LLT<Eigen::MatrixXd> llt(smat(x.segment(off, m), n));
        if (llt.info() != Eigen::Success) {
          t = 0.0;
          break;
        }
        Eigen::MatrixXd M = smat(dx.segment(off, m), n);
        M = llt.matrixL().solve(M);
        M = llt.matrixL().solve(M.transpose().eval());
        const double lmin = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(0.5 * (M + M.transpose()),
                                                                          Eigen::EigenvaluesOnly)
                                .eigenvalues()(0);
        if (lmin < 0.0) t = std::min(t, -1.0 / lmin);
        break;
      }
    }
  });
  return std::max(t, 0.0);
}

double min_cone_value(const ConeDims& dims, const Eigen::VectorXd& x) {
  double v = std::numeric_limits<double>::infinity();
  for_each_block(dims, [&](Block b, int off, int n) {
    switch (b) {
      case Block::lp:
        v = std::min(v, x.segment(off, n).minCoeff());
        break;
      case Block::soc:
        v = std::min(v, x(off) - x.segment(off + 1, n - 1).norm());
        break;
      case Block::psd: {
        const Eigen::MatrixXd M = smat(x.segment(off, svec_size(n)), n);
        v = std::min(v, Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(M, Eigen::EigenvaluesOnly).eigenvalues()(0));
        break;
      }
    }
  });
  return v;
}

// ------------------------------------------------------------- NtScaling

NtScaling::NtScaling(const ConeDims& dims, const Eigen::VectorXd& s, const Eigen::VectorXd& z)
    : dims_(dims), lambda_(s.size()) {
  for_each_block(dims, [&](Block b, int off, int n) {
    switch (b) {
      case Block::lp:
        lp_d_ = (s.segment(off, n).array() / z.segment(off, n).array()).sqrt();
        lambda_.segment(off, n) = (s.segment(off, n).array() * z.segment(off, n).array()).sqrt();
        break;
      case Block::soc: {
        const auto ss = s.segment(off, n);
        const auto zs = z.segment(off, n);
        const double sn = std::sqrt(std::max(ss(0) * ss(0) - ss.tail(n - 1).squaredNorm(), 1e-300));
        const double zn = std::sqrt(std::max(zs(0) * zs(0) - zs.tail(n - 1).squaredNorm(), 1e-300));
        const Eigen::VectorXd sb = ss / sn;
        const Eigen::VectorXd zb = zs / zn;
        const double gamma = std::sqrt(0.5 * (1.0 + sb.dot(zb)));
        Eigen::VectorXd wbar(n);
        wbar(0) = (sb(0) + zb(0)) / (2.0 * gamma);
        wbar.tail(n - 1) = (sb.tail(n - 1) - zb.tail(n - 1)) / (2.0 * gamma);
        soc_.push_back({std::sqrt(sn / zn), wbar});
        break;
      }
      case Block::psd: {
        const int m = svec_size(n);
        Eigen::LLT<Eigen::MatrixXd> ls(smat(s.segment(off, m), n));
        Eigen::LLT<Eigen::MatrixXd> lz(smat(z.segment(off, m), n));
        if (ls.info() != Eigen::Success || lz.info() != Eigen::Success)
          throw SolverError("NT scaling: iterate left the semidefinite cone");
        const Eigen::MatrixXd Ls = ls.matrixL();
        const Eigen::MatrixXd Lz = lz.matrixL();
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(Lz.transpose() * Ls, Eigen::ComputeFullU | Eigen::ComputeFullV);
        const Eigen::VectorXd sig = svd.singularValues();
        const Eigen::VectorXd isq = sig.cwiseSqrt().cwiseInverse();
        const Eigen::MatrixXd R = Ls * svd.matrixV() * isq.asDiagonal();
        // R^{-1} = Lambda^{1/2} V' Ls^{-1}
        const Eigen::MatrixXd Rinv =
            sig.cwiseSqrt().asDiagonal() *
            ls.matrixU().solve(svd.matrixV()).transpose().eval();
        r_.push_back(R);
        rinv_.push_back(Rinv);
        psd_lambda_.push_back(sig);
        break;
      }
    }
  });
  // lambda = W z for the SOC blocks (LP already set).
  Eigen::VectorXd wz = apply(z);
  for_each_block(dims, [&](Block b, int off, int n) {
    if (b == Block::soc) lambda_.segment(off, n) = wz.segment(off, n);
  });
  // PSD blocks: W z is diagonal by construction; use the exact diagonal.
  int psd_index = 0;
  for_each_block(dims, [&](Block b, int off, int n) {
    if (b == Block::psd) {
      lambda_.segment(off, svec_size(n)) = svec(psd_lambda_[psd_index++].asDiagonal().toDenseMatrix());
    }
  });
}

Eigen::VectorXd NtScaling::apply_op(const Eigen::VectorXd& v, Op op) const {
  Eigen::VectorXd out(v.size());
  std::size_t soc_index = 0, psd_index = 0;
  for_each_block(dims_, [&](Block b, int off, int n) {
    switch (b) {
      case Block::lp:
        if (op == Op::w || op == Op::wt) {
          out.segment(off, n) = v.segment(off, n).cwiseProduct(lp_d_);
        } else {
          out.segment(off, n) = v.segment(off, n).cwiseQuotient(lp_d_);
        }
        break;
      case Block::soc: {
        const Soc& sc = soc_[soc_index++];
        const auto x = v.segment(off, n);
        const double w0 = sc.wbar(0);
        const auto w1 = sc.wbar.tail(n - 1);
        const bool inverse = (op == Op::winv || op == Op::winvt);
        // Wbar x with Wbar = [[w0, w1'], [w1, I + w1 w1'/(1 + w0)]]; inverse flips w1.
        const double sgn = inverse ? -1.0 : 1.0;
        const double w1x = w1.dot(x.tail(n - 1));
        Eigen::VectorXd y(n);
        y(0) = w0 * x(0) + sgn * w1x;
        y.tail(n - 1) = x.tail(n - 1) + (sgn * x(0) + w1x / (1.0 + w0)) * w1;
        out.segment(off, n) = (inverse ? 1.0 / sc.eta : sc.eta) * y;
        break;
      }
      case Block::psd: {
        const int m = svec_size(n);
        const Eigen::MatrixXd X = smat(v.segment(off, m), n);
        const Eigen::MatrixXd& R = r_[psd_index];
        const Eigen::MatrixXd& Ri = rinv_[psd_index];
        ++psd_index;
        Eigen::MatrixXd Y;
        switch (op) {
          case Op::w:
            Y = R.transpose() * X * R;
            break;
          case Op::wt:
            Y = R * X * R.transpose();
            break;
          case Op::winv:
            Y = Ri.transpose() * X * Ri;
            break;
          case Op::winvt:
            Y = Ri * X * Ri.transpose();
            break;
        }
        out.segment(off, m) = svec(Y);
        break;
      }
    }
  });
  return out;
}

Eigen::VectorXd NtScaling::apply(const Eigen::VectorXd& v) const { return apply_op(v, Op::w); }
Eigen::VectorXd NtScaling::apply_transpose(const Eigen::VectorXd& v) const { return apply_op(v, Op::wt); }
Eigen::VectorXd NtScaling::apply_inverse(const Eigen::VectorXd& v) const { return apply_op(v, Op::winv); }
Eigen::VectorXd NtScaling::apply_inverse_transpose(const Eigen::VectorXd& v) const {
  return apply_op(v, Op::winvt);
}

Eigen::VectorXd NtScaling::lambda_divide(const Eigen::VectorXd& v) const {
  Eigen::VectorXd out(v.size());
  std::size_t psd_index = 0;
  for_each_block(dims_, [&](Block b, int off, int n) {
    switch (b) {
      case Block::lp:
        out.segment(off, n) = v.segment(off, n).cwiseQuotient(lambda_.segment(off, n));
        break;
      case Block::soc: {
        const auto u = lambda_.segment(off, n);
        const auto w = v.segment(off, n);
        const double det = u(0) * u(0) - u.tail(n - 1).squaredNorm();
        const double x0 = (u(0) * w(0) - u.tail(n - 1).dot(w.tail(n - 1))) / det;
        out(off) = x0;
        out.segment(off + 1, n - 1) = (w.tail(n - 1) - x0 * u.tail(n - 1)) / u(0);
        break;
      }
      case Block::psd: {
        const Eigen::VectorXd& lam = psd_lambda_[psd_index++];
        const int m = svec_size(n);
        Eigen::MatrixXd V = smat(v.segment(off, m), n);
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) V(i, j) *= 2.0 / (lam(i) + lam(j));
        out.segment(off, m) = svec(V);
        break;
      }
    }
  });
  return out;
}

}  // namespace detail
}  // namespace tgcmpc::conic
