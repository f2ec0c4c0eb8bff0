#include "tgcmpc/problem_io.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "tgcmpc/errors.hpp"

namespace tgcmpc {

using nlohmann::json;

namespace {

void reject_unknown_keys(const json& obj, const std::set<std::string>& accepted, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + ": expected a JSON object");
  for (const auto& [key, value] : obj.items()) {
    if (!accepted.count(key)) {
      std::ostringstream os;
      os << where << ": unknown key \"" << key << "\"; accepted keys are";
      for (const auto& a : accepted) os << " " << a;
      throw ConfigError(os.str());
    }
  }
}

const json& require_key(const json& obj, const std::string& key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ConfigError(where + ": missing key \"" + key + "\"");
  return *it;
}

double number(const json& j, const std::string& what) {
  if (!j.is_number()) throw ConfigError(what + ": expected a number");
  return j.get<double>();
}

}  // namespace

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vector_to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Eigen::MatrixXd matrix_from_json(const json& j, const std::string& what, int cols) {
  if (!j.is_array()) throw ConfigError(what + ": expected an array of rows");
  if (j.empty()) return Eigen::MatrixXd::Zero(0, cols);
  const std::size_t ncols = j.at(0).is_array() ? j.at(0).size() : 0;
  Eigen::MatrixXd m(j.size(), ncols);
  for (std::size_t r = 0; r < j.size(); ++r) {
    const json& row = j[r];
    if (!row.is_array() || row.size() != ncols) {
      throw ConfigError(what + ": rows must be arrays of equal length");
    }
    for (std::size_t c = 0; c < ncols; ++c) m(r, c) = number(row[c], what);
  }
  return m;
}

Eigen::VectorXd vector_from_json(const json& j, const std::string& what) {
  if (!j.is_array()) throw ConfigError(what + ": expected an array");
  Eigen::VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v(i) = number(j[i], what);
  return v;
}

Problem parse_problem(const json& doc) {
  reject_unknown_keys(doc, {"system", "cost", "constraints", "horizon", "x0"}, "problem");
  Problem p;

  const json& js = require_key(doc, "system", "problem");
  reject_unknown_keys(js, {"A", "Bu", "Bw", "Cy", "Dyu", "blocks"}, "system");
  auto& sys = p.system;
  sys.A = matrix_from_json(require_key(js, "A", "system"), "system.A");
  const int nx = static_cast<int>(sys.A.rows());
  sys.Bu = matrix_from_json(require_key(js, "Bu", "system"), "system.Bu");
  sys.Bw = matrix_from_json(require_key(js, "Bw", "system"), "system.Bw");
  sys.Cy = matrix_from_json(require_key(js, "Cy", "system"), "system.Cy", nx);
  sys.Dyu = matrix_from_json(require_key(js, "Dyu", "system"), "system.Dyu", static_cast<int>(sys.Bu.cols()));
  const json& jb = require_key(js, "blocks", "system");
  if (!jb.is_array()) throw ConfigError("system.blocks: expected [[np, nq], ...]");
  for (const auto& b : jb) {
    if (!b.is_array() || b.size() != 2 || !b[0].is_number_integer() || !b[1].is_number_integer()) {
      throw ConfigError("system.blocks: each entry must be [np, nq] integers");
    }
    sys.structure.blocks.push_back({b[0].get<int>(), b[1].get<int>()});
  }
  if (auto errs = validate_system(sys); !errs.empty()) {
    std::ostringstream os;
    os << "system is invalid:";
    for (const auto& e : errs) os << "\n  " << e;
    throw ConfigError(os.str());
  }
  const int nu = sys.nu();

  const json& jc = require_key(doc, "cost", "problem");
  reject_unknown_keys(jc, {"Q", "R", "N"}, "cost");
  try {
    const SymMatrix Q(matrix_from_json(require_key(jc, "Q", "cost"), "cost.Q"));
    const SymMatrix R(matrix_from_json(require_key(jc, "R", "cost"), "cost.R"));
    Eigen::MatrixXd N = jc.contains("N") ? matrix_from_json(jc["N"], "cost.N", nu) : Eigen::MatrixXd::Zero(nx, nu);
    if (Q.n() != nx || R.n() != nu) throw ConfigError("cost: Q must be nx x nx and R nu x nu");
    p.cost = make_cost(Q, R, N);
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(std::string("cost: ") + e.what());
  }

  if (doc.contains("constraints")) {
    const json& jk = doc["constraints"];
    reject_unknown_keys(jk, {"Hx", "Hu", "g"}, "constraints");
    p.constraints.Hx = matrix_from_json(require_key(jk, "Hx", "constraints"), "constraints.Hx", nx);
    p.constraints.Hu = matrix_from_json(require_key(jk, "Hu", "constraints"), "constraints.Hu", nu);
    p.constraints.g = vector_from_json(require_key(jk, "g", "constraints"), "constraints.g");
    if (auto errs = validate_constraints(p.constraints, nx, nu); !errs.empty()) {
      std::ostringstream os;
      os << "constraints are invalid:";
      for (const auto& e : errs) os << "\n  " << e;
      throw ConfigError(os.str());
    }
  } else {
    p.constraints = PolytopeConstraints::none(nx, nu);
  }

  if (doc.contains("horizon")) {
    if (!doc["horizon"].is_number_integer() || doc["horizon"].get<int>() < 1) {
      throw ConfigError("horizon must be an integer >= 1");
    }
    p.horizon = doc["horizon"].get<int>();
  }
  p.x0 = doc.contains("x0") ? vector_from_json(doc["x0"], "x0") : Eigen::VectorXd::Zero(nx);
  if (p.x0.size() != nx || !p.x0.allFinite()) throw ConfigError("x0 must be a finite vector of length nx");
  return p;
}

Problem load_problem(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open problem file " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ConfigError("problem file " + path + ": " + e.what());
  }
  return parse_problem(doc);
}

json problem_to_json(const Problem& p) {
  json blocks = json::array();
  for (const auto& b : p.system.structure.blocks) blocks.push_back({b.np, b.nq});
  return json{
      {"system",
       {{"A", matrix_to_json(p.system.A)},
        {"Bu", matrix_to_json(p.system.Bu)},
        {"Bw", matrix_to_json(p.system.Bw)},
        {"Cy", matrix_to_json(p.system.Cy)},
        {"Dyu", matrix_to_json(p.system.Dyu)},
        {"blocks", blocks}}},
      {"cost", {{"Q", matrix_to_json(p.cost.Q)}, {"R", matrix_to_json(p.cost.R)}, {"N", matrix_to_json(p.cost.N)}}},
      {"constraints",
       {{"Hx", matrix_to_json(p.constraints.Hx)},
        {"Hu", matrix_to_json(p.constraints.Hu)},
        {"g", vector_to_json(p.constraints.g)}}},
      {"horizon", p.horizon},
      {"x0", vector_to_json(p.x0)}};
}

}  // namespace tgcmpc
