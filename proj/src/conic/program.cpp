#include <algorithm>
#include <cmath>

#include "tgcmpc/conic.hpp"
#include "tgcmpc/errors.hpp"

namespace tgcmpc::conic {

int Variable::size() const {
  switch (kind) {
    case VarKind::scalar:
      return 1;
    case VarKind::vector:
      return n;
    case VarKind::symmetric:
      return n * (n + 1) / 2;
  }
  return 0;
}

// ---------------------------------------------------------------- LinExpr

LinExpr LinExpr::variable(int index, double coef) {
  LinExpr e;
  e.add_term(index, coef);
  return e;
}

double LinExpr::coefficient(int index) const {
  auto it = terms_.find(index);
  return it == terms_.end() ? 0.0 : it->second;
}

void LinExpr::add_term(int index, double coef) {
  if (coef == 0.0) return;
  auto [it, inserted] = terms_.emplace(index, coef);
  if (!inserted) {
    it->second += coef;
    if (it->second == 0.0) terms_.erase(it);
  }
}

LinExpr& LinExpr::operator+=(const LinExpr& o) {
  constant_ += o.constant_;
  for (const auto& [i, c] : o.terms_) add_term(i, c);
  return *this;
}

LinExpr& LinExpr::operator-=(const LinExpr& o) {
  constant_ -= o.constant_;
  for (const auto& [i, c] : o.terms_) add_term(i, -c);
  return *this;
}

LinExpr& LinExpr::operator*=(double k) {
  if (k == 0.0) {
    constant_ = 0.0;
    terms_.clear();
    return *this;
  }
  constant_ *= k;
  for (auto& [i, c] : terms_) c *= k;
  return *this;
}

double LinExpr::evaluate(const Eigen::VectorXd& x) const {
  double v = constant_;
  for (const auto& [i, c] : terms_) {
    if (i < 0 || i >= x.size()) throw DimensionError("LinExpr::evaluate: variable index out of range");
    v += c * x(i);
  }
  return v;
}

LinExpr operator+(LinExpr a, const LinExpr& b) { return a += b; }
LinExpr operator-(LinExpr a, const LinExpr& b) { return a -= b; }
LinExpr operator-(LinExpr a) { return a *= -1.0; }
LinExpr operator*(double k, LinExpr a) { return a *= k; }
LinExpr operator*(LinExpr a, double k) { return a *= k; }

// ------------------------------------------------------------- ExprMatrix

ExprMatrix ExprMatrix::constant(const Eigen::MatrixXd& m) {
  ExprMatrix e(static_cast<int>(m.rows()), static_cast<int>(m.cols()));
  for (int i = 0; i < e.rows_; ++i)
    for (int j = 0; j < e.cols_; ++j) e(i, j) = LinExpr(m(i, j));
  return e;
}

ExprMatrix ExprMatrix::diagonal(const ExprVector& d) {
  const int n = static_cast<int>(d.size());
  ExprMatrix e(n, n);
  for (int i = 0; i < n; ++i) e(i, i) = d[i];
  return e;
}

ExprMatrix ExprMatrix::column(const ExprVector& v) {
  ExprMatrix e(static_cast<int>(v.size()), 1);
  for (int i = 0; i < e.rows_; ++i) e(i, 0) = v[i];
  return e;
}

ExprMatrix ExprMatrix::blocks(const std::vector<std::vector<ExprMatrix>>& b) {
  if (b.empty()) return {};
  const std::size_t ncol = b.front().size();
  std::vector<int> heights(b.size()), widths(ncol);
  for (std::size_t i = 0; i < b.size(); ++i) {
    if (b[i].size() != ncol) throw DimensionError("ExprMatrix::blocks: ragged block rows");
    heights[i] = b[i][0].rows();
  }
  for (std::size_t j = 0; j < ncol; ++j) widths[j] = b[0][j].cols();
  for (std::size_t i = 0; i < b.size(); ++i)
    for (std::size_t j = 0; j < ncol; ++j)
      if (b[i][j].rows() != heights[i] || b[i][j].cols() != widths[j])
        throw DimensionError("ExprMatrix::blocks: block (" + std::to_string(i) + "," + std::to_string(j) +
                             ") has inconsistent shape");
  int rows = 0, cols = 0;
  for (int h : heights) rows += h;
  for (int w : widths) cols += w;
  ExprMatrix out(rows, cols);
  int r0 = 0;
  for (std::size_t i = 0; i < b.size(); ++i) {
    int c0 = 0;
    for (std::size_t j = 0; j < ncol; ++j) {
      for (int r = 0; r < heights[i]; ++r)
        for (int c = 0; c < widths[j]; ++c) out(r0 + r, c0 + c) = b[i][j](r, c);
      c0 += widths[j];
    }
    r0 += heights[i];
  }
  return out;
}

ExprMatrix ExprMatrix::transpose() const {
  ExprMatrix t(cols_, rows_);
  for (int i = 0; i < rows_; ++i)
    for (int j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

ExprMatrix ExprMatrix::block(int i, int j, int r, int c) const {
  if (i < 0 || j < 0 || r < 0 || c < 0 || i + r > rows_ || j + c > cols_)
    throw DimensionError("ExprMatrix::block out of range");
  ExprMatrix out(r, c);
  for (int a = 0; a < r; ++a)
    for (int b = 0; b < c; ++b) out(a, b) = (*this)(i + a, j + b);
  return out;
}

ExprVector ExprMatrix::as_vector() const { return data_; }

bool ExprMatrix::is_symmetric() const {
  if (rows_ != cols_) return false;
  for (int i = 0; i < rows_; ++i)
    for (int j = i + 1; j < cols_; ++j) {
      const LinExpr& a = (*this)(i, j);
      const LinExpr& b = (*this)(j, i);
      const double scale = 1e-12 * (1.0 + std::abs(a.constant()));
      if (std::abs(a.constant() - b.constant()) > scale) return false;
      if (a.terms().size() != b.terms().size()) return false;
      for (const auto& [k, c] : a.terms())
        if (std::abs(c - b.coefficient(k)) > 1e-12 * (1.0 + std::abs(c))) return false;
    }
  return true;
}

ExprMatrix& ExprMatrix::operator+=(const ExprMatrix& o) {
  if (o.rows_ != rows_ || o.cols_ != cols_) throw DimensionError("ExprMatrix +: shape mismatch");
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += o.data_[k];
  return *this;
}

ExprMatrix& ExprMatrix::operator-=(const ExprMatrix& o) {
  if (o.rows_ != rows_ || o.cols_ != cols_) throw DimensionError("ExprMatrix -: shape mismatch");
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= o.data_[k];
  return *this;
}

ExprMatrix& ExprMatrix::operator*=(double k) {
  for (auto& e : data_) e *= k;
  return *this;
}

Eigen::MatrixXd ExprMatrix::evaluate(const Eigen::VectorXd& x) const {
  Eigen::MatrixXd m(rows_, cols_);
  for (int i = 0; i < rows_; ++i)
    for (int j = 0; j < cols_; ++j) m(i, j) = (*this)(i, j).evaluate(x);
  return m;
}

ExprMatrix operator+(ExprMatrix a, const ExprMatrix& b) { return a += b; }
ExprMatrix operator-(ExprMatrix a, const ExprMatrix& b) { return a -= b; }
ExprMatrix operator-(ExprMatrix a) { return a *= -1.0; }
ExprMatrix operator*(double k, ExprMatrix a) { return a *= k; }

ExprMatrix operator*(const Eigen::MatrixXd& m, const ExprMatrix& e) {
  if (m.cols() != e.rows()) throw DimensionError("matrix * ExprMatrix: inner dimensions differ");
  ExprMatrix out(static_cast<int>(m.rows()), e.cols());
  for (int i = 0; i < m.rows(); ++i)
    for (int k = 0; k < m.cols(); ++k) {
      const double a = m(i, k);
      if (a == 0.0) continue;
      for (int j = 0; j < e.cols(); ++j) out(i, j) += a * e(k, j);
    }
  return out;
}

ExprMatrix operator*(const ExprMatrix& e, const Eigen::MatrixXd& m) {
  if (e.cols() != m.rows()) throw DimensionError("ExprMatrix * matrix: inner dimensions differ");
  ExprMatrix out(e.rows(), static_cast<int>(m.cols()));
  for (int k = 0; k < e.cols(); ++k)
    for (int j = 0; j < m.cols(); ++j) {
      const double a = m(k, j);
      if (a == 0.0) continue;
      for (int i = 0; i < e.rows(); ++i) out(i, j) += a * e(i, k);
    }
  return out;
}

ExprMatrix operator*(const LinExpr& s, const Eigen::MatrixXd& m) {
  ExprMatrix out(static_cast<int>(m.rows()), static_cast<int>(m.cols()));
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) out(i, j) = m(i, j) * s;
  return out;
}

ExprVector operator*(const Eigen::MatrixXd& m, const ExprVector& v) {
  return (m * ExprMatrix::column(v)).as_vector();
}

ExprVector operator+(const ExprVector& a, const ExprVector& b) {
  if (a.size() != b.size()) throw DimensionError("ExprVector +: length mismatch");
  ExprVector out(a);
  for (std::size_t i = 0; i < a.size(); ++i) out[i] += b[i];
  return out;
}

ExprVector operator-(const ExprVector& a, const ExprVector& b) {
  if (a.size() != b.size()) throw DimensionError("ExprVector -: length mismatch");
  ExprVector out(a);
  for (std::size_t i = 0; i < a.size(); ++i) out[i] -= b[i];
  return out;
}

ExprVector operator*(double k, const ExprVector& v) {
  ExprVector out(v);
  for (auto& e : out) e *= k;
  return out;
}

ExprVector constant_vector(const Eigen::VectorXd& v) {
  ExprVector out(v.size());
  for (int i = 0; i < v.size(); ++i) out[i] = LinExpr(v(i));
  return out;
}

// ------------------------------------------------------------ ConeProgram

const Variable& ConeProgram::declare(const std::string& name, VarKind kind, int n) {
  if (name.empty() || name.find_first_of(" \t\n#[]") != std::string::npos)
    throw UsageError("ConeProgram: invalid variable name '" + name + "'");
  if (has_variable(name)) throw UsageError("ConeProgram: duplicate variable '" + name + "'");
  if (n < 1) throw DimensionError("ConeProgram: variable '" + name + "' must have positive size");
  Variable v{name, kind, n, num_scalars_};
  num_scalars_ += v.size();
  variables_.push_back(v);
  return variables_.back();
}

LinExpr ConeProgram::add_scalar(const std::string& name) {
  return LinExpr::variable(declare(name, VarKind::scalar, 1).offset);
}

ExprVector ConeProgram::add_vector(const std::string& name, int n) {
  const int off = declare(name, VarKind::vector, n).offset;
  ExprVector v(n);
  for (int i = 0; i < n; ++i) v[i] = LinExpr::variable(off + i);
  return v;
}

ExprMatrix ConeProgram::add_symmetric(const std::string& name, int n) {
  declare(name, VarKind::symmetric, n);
  return variable_expr(name);
}

ExprMatrix ConeProgram::add_matrix(const std::string& name, int rows, int cols) {
  const ExprVector v = add_vector(name, rows * cols);
  ExprMatrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = v[static_cast<std::size_t>(i) * cols + j];
  return m;
}

ExprMatrix ConeProgram::variable_expr(const std::string& name) const {
  const Variable& v = variable(name);
  switch (v.kind) {
    case VarKind::scalar: {
      ExprMatrix m(1, 1);
      m(0, 0) = LinExpr::variable(v.offset);
      return m;
    }
    case VarKind::vector: {
      ExprMatrix m(v.n, 1);
      for (int i = 0; i < v.n; ++i) m(i, 0) = LinExpr::variable(v.offset + i);
      return m;
    }
    case VarKind::symmetric: {
      ExprMatrix m(v.n, v.n);
      int k = v.offset;
      for (int i = 0; i < v.n; ++i)
        for (int j = i; j < v.n; ++j, ++k) {
          m(i, j) = LinExpr::variable(k);
          m(j, i) = LinExpr::variable(k);
        }
      return m;
    }
  }
  return {};
}

void ConeProgram::check_expr(const LinExpr& e) const {
  for (const auto& [i, c] : e.terms()) {
    if (i < 0 || i >= num_scalars_) throw UsageError("ConeProgram: expression references an undeclared variable");
    if (!std::isfinite(c)) throw NumericInputError("ConeProgram: non-finite coefficient");
  }
  if (!std::isfinite(e.constant())) throw NumericInputError("ConeProgram: non-finite constant");
}

void ConeProgram::check_label(const std::string& label) const {
  if (label.empty() || label.find_first_of(" \t\n{}") != std::string::npos)
    throw UsageError("ConeProgram: invalid constraint label '" + label + "'");
}

void ConeProgram::minimize(const LinExpr& objective) {
  check_expr(objective);
  objective_ = objective;
}

void ConeProgram::add_linear_eq(const std::string& label, const ExprVector& exprs) {
  check_label(label);
  for (const auto& e : exprs) check_expr(e);
  constraints_.push_back({ConstraintKind::linear_eq, label, exprs, {}});
}

void ConeProgram::add_linear_ineq(const std::string& label, const ExprVector& exprs) {
  check_label(label);
  for (const auto& e : exprs) check_expr(e);
  constraints_.push_back({ConstraintKind::linear_ineq, label, exprs, {}});
}

void ConeProgram::add_soc(const std::string& label, const LinExpr& t, const ExprVector& v) {
  check_label(label);
  ExprVector all;
  all.reserve(v.size() + 1);
  all.push_back(t);
  all.insert(all.end(), v.begin(), v.end());
  for (const auto& e : all) check_expr(e);
  constraints_.push_back({ConstraintKind::soc, label, std::move(all), {}});
}

void ConeProgram::add_psd(const std::string& label, const ExprMatrix& m) {
  check_label(label);
  if (m.rows() == 0 || m.rows() != m.cols()) throw DimensionError("add_psd(" + label + "): matrix must be square");
  if (!m.is_symmetric()) throw UsageError("add_psd(" + label + "): matrix expression is not symmetric");
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) check_expr(m(i, j));
  constraints_.push_back({ConstraintKind::psd, label, {}, m});
}

void ConeProgram::add_nsd(const std::string& label, const ExprMatrix& m) { add_psd(label, -m); }

const Variable& ConeProgram::variable(const std::string& name) const {
  for (const auto& v : variables_)
    if (v.name == name) return v;
  throw UsageError("ConeProgram: unknown variable '" + name + "'");
}

bool ConeProgram::has_variable(const std::string& name) const {
  return std::any_of(variables_.begin(), variables_.end(), [&](const Variable& v) { return v.name == name; });
}

int ConeProgram::count(ConstraintKind kind) const {
  return static_cast<int>(
      std::count_if(constraints_.begin(), constraints_.end(), [&](const Constraint& c) { return c.kind == kind; }));
}

std::string ConeProgram::unique_name(const std::string& base) const {
  if (!has_variable(base)) return base;
  for (int k = 1;; ++k) {
    std::string candidate = base + "_" + std::to_string(k);
    if (!has_variable(candidate)) return candidate;
  }
}

// ---------------------------------------------------------------- helpers

LinExpr add_epigraph_sum_of_squares(ConeProgram& prog, const ExprVector& terms) {
  const LinExpr t = prog.add_scalar(prog.unique_name("sumsq"));
  ExprVector v(terms);
  v.push_back(0.5 * (t - 1.0));
  prog.add_soc("sumsq_epigraph", 0.5 * (t + 1.0), v);
  return t;
}

namespace {

// u <= sqrt(a*b), a, b >= 0, as ||(u, (a-b)/2)|| <= (a+b)/2.
void add_hyperbolic(ConeProgram& prog, const std::string& label, const LinExpr& u, const LinExpr& a,
                    const LinExpr& b) {
  prog.add_soc(label, 0.5 * (a + b), {u, 0.5 * (a - b)});
}

}  // namespace

LinExpr add_geometric_mean(ConeProgram& prog, const ExprMatrix& m, const std::string& label) {
  const int n = m.rows();
  if (n == 0 || m.cols() != n) throw DimensionError("add_geometric_mean: matrix must be square");
  const std::string lname = prog.unique_name(label + "_L");
  const ExprVector lv = prog.add_vector(lname, n * (n + 1) / 2);
  ExprMatrix L(n, n);
  ExprVector diag(n);
  int k = 0;
  for (int j = 0; j < n; ++j)
    for (int i = j; i < n; ++i, ++k) L(i, j) = lv[k];
  for (int i = 0; i < n; ++i) diag[i] = L(i, i);
  prog.add_psd(label + "_lmi", ExprMatrix::blocks({{m, L}, {L.transpose(), ExprMatrix::diagonal(diag)}}));

  const LinExpr t = prog.add_scalar(prog.unique_name(label + "_t"));
  if (n == 1) {
    prog.add_linear_ineq(label + "_tower", {t - diag[0]});
    return t;
  }
  // Pad to a power of two with copies of t, then reduce pairwise.
  int width = 1;
  while (width < n) width *= 2;
  ExprVector level(diag);
  while (static_cast<int>(level.size()) < width) level.push_back(t);
  int depth = 0;
  while (level.size() > 1) {
    const std::string vname = prog.unique_name(label + "_g" + std::to_string(depth));
    const ExprVector next = prog.add_vector(vname, static_cast<int>(level.size() / 2));
    for (std::size_t i = 0; i < next.size(); ++i) {
      add_hyperbolic(prog, label + "_tower", next[i], level[2 * i], level[2 * i + 1]);
    }
    level = next;
    ++depth;
  }
  prog.add_linear_ineq(label + "_tower", {t - level[0]});
  return t;
}

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::optimal:
      return "optimal";
    case SolveStatus::infeasible:
      return "infeasible";
    case SolveStatus::unbounded:
      return "unbounded";
    case SolveStatus::numerical_failure:
      return "numerical_failure";
  }
  return "unknown";
}

// --------------------------------------------------------------- Solution

namespace {

const std::vector<double>& lookup(const Solution& s, const std::string& name) {
  auto it = s.values.find(name);
  if (it == s.values.end()) {
    if (!s.optimal()) throw UsageError("Solution: no values, status is " + std::string(to_string(s.status)));
    throw UsageError("Solution: unknown variable '" + name + "'");
  }
  return it->second;
}

}  // namespace

double Solution::scalar(const std::string& name) const {
  const auto& v = lookup(*this, name);
  if (v.size() != 1) throw DimensionError("Solution::scalar: '" + name + "' is not a scalar");
  return v[0];
}

Eigen::VectorXd Solution::vector(const std::string& name) const {
  const auto& v = lookup(*this, name);
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Eigen::MatrixXd Solution::symmetric(const std::string& name) const {
  const auto& v = lookup(*this, name);
  const int n = static_cast<int>(std::lround((std::sqrt(8.0 * v.size() + 1.0) - 1.0) / 2.0));
  if (n * (n + 1) / 2 != static_cast<int>(v.size()))
    throw DimensionError("Solution::symmetric: '" + name + "' is not symmetric");
  Eigen::MatrixXd m(n, n);
  int k = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j, ++k) m(i, j) = m(j, i) = v[k];
  return m;
}

Eigen::MatrixXd Solution::matrix(const std::string& name, int rows, int cols) const {
  const auto& v = lookup(*this, name);
  if (static_cast<int>(v.size()) != rows * cols) throw DimensionError("Solution::matrix: size mismatch for " + name);
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = v[static_cast<std::size_t>(i) * cols + j];
  return m;
}

}  // namespace tgcmpc::conic
