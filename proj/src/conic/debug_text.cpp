#include <cstdio>
#include <sstream>

#include "tgcmpc/conic.hpp"
#include "tgcmpc/errors.hpp"

namespace tgcmpc::conic {

namespace {

constexpr const char* kHeader = "tgcmpc-cone-program 1";

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_expr(std::ostringstream& os, const LinExpr& e) {
  os << " {" << num(e.constant());
  for (const auto& [i, c] : e.terms()) os << ' ' << i << ':' << num(c);
  os << '}';
}

const char* kind_word(ConstraintKind k) {
  switch (k) {
    case ConstraintKind::linear_eq:
      return "eq";
    case ConstraintKind::linear_ineq:
      return "ineq";
    case ConstraintKind::soc:
      return "soc";
    case ConstraintKind::psd:
      return "psd";
  }
  return "?";
}

const char* var_word(VarKind k) {
  switch (k) {
    case VarKind::scalar:
      return "scalar";
    case VarKind::vector:
      return "vector";
    case VarKind::symmetric:
      return "symmetric";
  }
  return "?";
}

[[noreturn]] void bad(int line, const std::string& why) {
  throw ConfigError("debug text line " + std::to_string(line) + ": " + why);
}

double parse_double(const std::string& tok, int line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(tok, &used);
    if (used != tok.size()) bad(line, "bad number '" + tok + "'");
    return v;
  } catch (const std::logic_error&) {
    bad(line, "bad number '" + tok + "'");
  }
}

LinExpr read_expr(std::istringstream& is, int line) {
  std::string tok;
  if (!(is >> tok) || tok.size() < 2 || tok.front() != '{') bad(line, "expected '{'");
  bool closed = false;
  auto strip = [&](std::string t) {
    if (!t.empty() && t.back() == '}') {
      closed = true;
      t.pop_back();
    }
    return t;
  };
  LinExpr e(parse_double(strip(tok.substr(1)), line));
  while (!closed) {
    if (!(is >> tok)) bad(line, "unterminated expression");
    tok = strip(tok);
    const auto colon = tok.find(':');
    if (colon == std::string::npos) bad(line, "expected index:coef, got '" + tok + "'");
    int idx = 0;
    try {
      idx = std::stoi(tok.substr(0, colon));
    } catch (const std::logic_error&) {
      bad(line, "bad index in '" + tok + "'");
    }
    e.add_term(idx, parse_double(tok.substr(colon + 1), line));
  }
  return e;
}

}  // namespace

std::string to_debug_text(const ConeProgram& prog) {
  std::ostringstream os;
  os << kHeader << '\n';
  for (const auto& v : prog.variables()) {
    os << "var " << v.name << ' ' << var_word(v.kind);
    if (v.kind != VarKind::scalar) os << ' ' << v.n;
    os << '\n';
  }
  os << "minimize";
  write_expr(os, prog.objective());
  os << '\n';
  for (const auto& c : prog.constraints()) {
    os << kind_word(c.kind) << ' ' << c.label;
    if (c.kind == ConstraintKind::psd) {
      os << ' ' << c.matrix.rows();
      for (int i = 0; i < c.matrix.rows(); ++i)
        for (int j = 0; j < c.matrix.cols(); ++j) write_expr(os, c.matrix(i, j));
    } else {
      os << ' ' << c.exprs.size();
      for (const auto& e : c.exprs) write_expr(os, e);
    }
    os << '\n';
  }
  return os.str();
}

ConeProgram parse_debug_text(const std::string& text) {
  ConeProgram prog;
  std::istringstream lines(text);
  std::string line;
  int lineno = 0;
  bool header = false;
  while (std::getline(lines, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (!header) {
      if (line != kHeader) bad(lineno, "missing header '" + std::string(kHeader) + "'");
      header = true;
      continue;
    }
    std::istringstream is(line);
    std::string word;
    is >> word;
    if (word == "var") {
      std::string name, kind;
      int n = 1;
      is >> name >> kind;
      if (kind == "scalar") {
        prog.add_scalar(name);
      } else if (kind == "vector" && (is >> n)) {
        prog.add_vector(name, n);
      } else if (kind == "symmetric" && (is >> n)) {
        prog.add_symmetric(name, n);
      } else {
        bad(lineno, "bad variable declaration");
      }
    } else if (word == "minimize") {
      prog.minimize(read_expr(is, lineno));
    } else if (word == "eq" || word == "ineq" || word == "soc" || word == "psd") {
      std::string label;
      int count = 0;
      if (!(is >> label >> count) || count < 0) bad(lineno, "expected label and count");
      if (word == "psd") {
        ExprMatrix m(count, count);
        for (int i = 0; i < count; ++i)
          for (int j = 0; j < count; ++j) m(i, j) = read_expr(is, lineno);
        prog.add_psd(label, m);
      } else {
        ExprVector v;
        for (int i = 0; i < count; ++i) v.push_back(read_expr(is, lineno));
        if (word == "eq") {
          prog.add_linear_eq(label, v);
        } else if (word == "ineq") {
          prog.add_linear_ineq(label, v);
        } else {
          if (v.empty()) bad(lineno, "soc needs at least one expression");
          prog.add_soc(label, v.front(), ExprVector(v.begin() + 1, v.end()));
        }
      }
    } else {
      bad(lineno, "unknown record '" + word + "'");
    }
    std::string rest;
    if (is >> rest) bad(lineno, "trailing text '" + rest + "'");
  }
  if (!header) throw ConfigError("debug text: empty input");
  return prog;
}

}  // namespace tgcmpc::conic
