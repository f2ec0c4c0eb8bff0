#pragma once

#include <Eigen/Dense>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace tgcmpc::conic {

enum class VarKind { scalar, vector, symmetric };

/// A declared decision variable. Scalars of a symmetric(n) variable are the
/// upper triangle in row-major order; all variables live in one flat vector.
struct Variable {
  std::string name;
  VarKind kind = VarKind::scalar;
  int n = 1;
  int offset = 0;

  int size() const;
  bool operator==(const Variable&) const = default;
};

/// Affine scalar expression: constant + sum_k coef_k * x[index_k].
class LinExpr {
 public:
  LinExpr() = default;
  LinExpr(double constant) : constant_(constant) {}  // NOLINT(google-explicit-constructor)

  static LinExpr variable(int index, double coef = 1.0);

  double constant() const { return constant_; }
  const std::map<int, double>& terms() const { return terms_; }
  bool is_constant() const { return terms_.empty(); }
  double coefficient(int index) const;

  void add_term(int index, double coef);
  void set_constant(double c) { constant_ = c; }

  LinExpr& operator+=(const LinExpr& o);
  LinExpr& operator-=(const LinExpr& o);
  LinExpr& operator*=(double k);

  double evaluate(const Eigen::VectorXd& x) const;

  bool operator==(const LinExpr&) const = default;

 private:
  double constant_ = 0.0;
  std::map<int, double> terms_;
};

LinExpr operator+(LinExpr a, const LinExpr& b);
LinExpr operator-(LinExpr a, const LinExpr& b);
LinExpr operator-(LinExpr a);
LinExpr operator*(double k, LinExpr a);
LinExpr operator*(LinExpr a, double k);

using ExprVector = std::vector<LinExpr>;

/// Dense matrix of affine expressions (row-major storage).
class ExprMatrix {
 public:
  ExprMatrix() = default;
  ExprMatrix(int rows, int cols) : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols) {}

  static ExprMatrix constant(const Eigen::MatrixXd& m);
  static ExprMatrix zero(int rows, int cols) { return ExprMatrix(rows, cols); }
  static ExprMatrix identity(int n) { return constant(Eigen::MatrixXd::Identity(n, n)); }
  /// Square matrix diag(d_0, ..., d_{k-1}).
  static ExprMatrix diagonal(const ExprVector& d);
  static ExprMatrix column(const ExprVector& v);
  /// Block assembly; every block row must share heights, every block column widths.
  static ExprMatrix blocks(const std::vector<std::vector<ExprMatrix>>& b);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  LinExpr& operator()(int i, int j) { return data_[static_cast<std::size_t>(i) * cols_ + j]; }
  const LinExpr& operator()(int i, int j) const { return data_[static_cast<std::size_t>(i) * cols_ + j]; }

  ExprMatrix transpose() const;
  ExprMatrix block(int i, int j, int r, int c) const;
  ExprMatrix row_range(int start, int count) const { return block(start, 0, count, cols_); }
  ExprVector as_vector() const;  // row-major flattening
  bool is_symmetric() const;

  ExprMatrix& operator+=(const ExprMatrix& o);
  ExprMatrix& operator-=(const ExprMatrix& o);
  ExprMatrix& operator*=(double k);

  Eigen::MatrixXd evaluate(const Eigen::VectorXd& x) const;

  bool operator==(const ExprMatrix&) const = default;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<LinExpr> data_;
};

ExprMatrix operator+(ExprMatrix a, const ExprMatrix& b);
ExprMatrix operator-(ExprMatrix a, const ExprMatrix& b);
ExprMatrix operator-(ExprMatrix a);
ExprMatrix operator*(double k, ExprMatrix a);
ExprMatrix operator*(const Eigen::MatrixXd& m, const ExprMatrix& e);
ExprMatrix operator*(const ExprMatrix& e, const Eigen::MatrixXd& m);
ExprMatrix operator*(const LinExpr& s, const Eigen::MatrixXd& m);
ExprVector operator*(const Eigen::MatrixXd& m, const ExprVector& v);
ExprVector operator+(const ExprVector& a, const ExprVector& b);
ExprVector operator-(const ExprVector& a, const ExprVector& b);
ExprVector operator*(double k, const ExprVector& v);
ExprVector constant_vector(const Eigen::VectorXd& v);

enum class ConstraintKind { linear_eq, linear_ineq, soc, psd };

/// linear_eq: every entry of `exprs` == 0.  linear_ineq: every entry <= 0.
/// soc: ||exprs[1..]||_2 <= exprs[0].  psd: `matrix` is PSD (a "<= 0" LMI is
/// stored negated).
struct Constraint {
  ConstraintKind kind = ConstraintKind::linear_eq;
  std::string label;
  ExprVector exprs;
  ExprMatrix matrix;

  bool operator==(const Constraint&) const = default;
};

class ConeProgram {
 public:
  LinExpr add_scalar(const std::string& name);
  ExprVector add_vector(const std::string& name, int n);
  ExprMatrix add_symmetric(const std::string& name, int n);
  /// A vector(rows*cols) variable viewed as a row-major rows x cols matrix.
  ExprMatrix add_matrix(const std::string& name, int rows, int cols);

  void minimize(const LinExpr& objective);

  void add_linear_eq(const std::string& label, const ExprVector& exprs);
  void add_linear_ineq(const std::string& label, const ExprVector& exprs);
  void add_soc(const std::string& label, const LinExpr& t, const ExprVector& v);
  /// m >= 0 in the semidefinite order. Throws UsageError if m is not symmetric.
  void add_psd(const std::string& label, const ExprMatrix& m);
  /// m <= 0; stored as the psd constraint -m >= 0.
  void add_nsd(const std::string& label, const ExprMatrix& m);

  const std::vector<Variable>& variables() const { return variables_; }
  const std::vector<Constraint>& constraints() const { return constraints_; }
  const LinExpr& objective() const { return objective_; }
  int num_scalars() const { return num_scalars_; }
  const Variable& variable(const std::string& name) const;
  bool has_variable(const std::string& name) const;
  /// Expression view of an already declared variable.
  ExprMatrix variable_expr(const std::string& name) const;
  int count(ConstraintKind kind) const;
  /// Name that is not yet taken, formed as base, base_1, base_2, ...
  std::string unique_name(const std::string& base) const;

  bool operator==(const ConeProgram&) const = default;

 private:
  const Variable& declare(const std::string& name, VarKind kind, int n);
  void check_expr(const LinExpr& e) const;
  void check_label(const std::string& label) const;

  std::vector<Variable> variables_;
  std::vector<Constraint> constraints_;
  LinExpr objective_;
  int num_scalars_ = 0;
};

/// Adds t and the rotated-cone constraint ||(terms, (t-1)/2)|| <= (t+1)/2,
/// i.e. t >= sum of squares. Minimizing t minimizes the sum of squares.
LinExpr add_epigraph_sum_of_squares(ConeProgram& prog, const ExprVector& terms);

/// Adds t with t <= det(m)^(1/n) for symmetric affine m (n x n), using
/// [[m, L], [L', diag(L)]] >= 0 with L lower triangular and a tower of
/// rotated second-order cones. Maximizing t maximizes log det(m).
LinExpr add_geometric_mean(ConeProgram& prog, const ExprMatrix& m, const std::string& label = "geomean");

struct SolverSettings {
  int max_iters = 200;
  double feas_tol = 1e-8;
  double rel_gap = 1e-8;
  bool verbose = false;  // one line per iteration on stderr
};

enum class SolveStatus { optimal, infeasible, unbounded, numerical_failure };
const char* to_string(SolveStatus s);

struct Solution {
  SolveStatus status = SolveStatus::numerical_failure;
  /// Values by variable name (flattened as in Variable); present iff optimal.
  std::map<std::string, std::vector<double>> values;
  Eigen::VectorXd x;
  double objective = 0.0;
  double solver_tolerance = 0.0;
  int iterations = 0;
  std::string message;

  bool optimal() const { return status == SolveStatus::optimal; }
  double scalar(const std::string& name) const;
  Eigen::VectorXd vector(const std::string& name) const;
  Eigen::MatrixXd symmetric(const std::string& name) const;
  Eigen::MatrixXd matrix(const std::string& name, int rows, int cols) const;
  double value(const LinExpr& e) const { return e.evaluate(x); }
};

/// min c'x  s.t.  G x + s = h,  A x = b,  s in K, with K = R+^l x SOC(q_1)
/// x ... x PSD(s_1) x ...; PSD blocks use the scaled lower-triangular svec
/// layout (off-diagonals times sqrt(2)).
struct ConeDims {
  int l = 0;
  std::vector<int> q;
  std::vector<int> s;

  int total() const;
  int degree() const;
};

struct StandardForm {
  Eigen::VectorXd c;
  double objective_offset = 0.0;
  Eigen::MatrixXd G;
  Eigen::VectorXd h;
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  ConeDims dims;
};

StandardForm compile(const ConeProgram& prog);

/// Backend contract.
class ConeSolver {
 public:
  virtual ~ConeSolver() = default;
  virtual std::string name() const = 0;
  /// Never throws on numerical trouble; reports numerical_failure instead.
  virtual Solution solve(const ConeProgram& prog, const SolverSettings& settings) const = 0;
};

/// Dense primal-dual interior-point method on the homogeneous self-dual
/// embedding with Nesterov-Todd scaling and Mehrotra correction.
class InteriorPointSolver final : public ConeSolver {
 public:
  std::string name() const override { return "dense-hsd-ipm"; }
  Solution solve(const ConeProgram& prog, const SolverSettings& settings) const override;
};

/// Solve with the default backend.
Solution solve(const ConeProgram& prog, const SolverSettings& settings = {});

/// Solve a compiled problem. Returns the primal vector x in Solution::x.
Solution solve_standard(const StandardForm& sf, const SolverSettings& settings);

/// Deterministic text dump, one constraint per line.
std::string to_debug_text(const ConeProgram& prog);
ConeProgram parse_debug_text(const std::string& text);

/// Violations measured directly on the program (independent of the solver
/// path). linear_eq: |e|; linear_ineq: max(e, 0); soc: max(||v|| - t, 0);
/// psd: max(-lambda_min, 0).
struct ResidualReport {
  double max_violation = 0.0;
  std::vector<std::pair<std::string, double>> per_constraint;
};
ResidualReport check_residuals(const ConeProgram& prog, const Eigen::VectorXd& x);

}  // namespace tgcmpc::conic
