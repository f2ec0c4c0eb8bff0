#include "tgcmpc/errors.hpp"
#include "tgcmpc/problem_io.hpp"
#include "tgcmpc/synthesis.hpp"

namespace tgcmpc {

using nlohmann::json;

namespace {

const json& field(const json& j, const char* key, const char* what) {
  if (!j.is_object() || !j.contains(key))
    throw ConfigError(std::string(what) + ": missing field '" + key + "'");
  return j.at(key);
}

SymMatrix sym_field(const json& j, const char* key, const char* what) {
  try {
    return SymMatrix(matrix_from_json(field(j, key, what), std::string(what) + "." + key));
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(std::string(what) + "." + key + ": " + e.what());
  }
}

double number_field(const json& j, const char* key, const char* what) {
  const json& v = field(j, key, what);
  if (!v.is_number()) throw ConfigError(std::string(what) + "." + key + " must be a number");
  return v.get<double>();
}

}  // namespace

json gcc_to_json(const GccSolution& g) {
  return json{{"K", matrix_to_json(g.K)},
              {"P", matrix_to_json(g.P.matrix())},
              {"X", matrix_to_json(g.X.matrix())},
              {"Y", matrix_to_json(g.Y)},
              {"upsilon", vector_to_json(g.upsilon)},
              {"trace_P", g.trace_P},
              {"Rbar", matrix_to_json(g.Rbar.matrix())},
              {"P_N", matrix_to_json(g.P_N.matrix())},
              {"solver_tolerance", g.solver_tolerance}};
}

GccSolution gcc_from_json(const json& j) {
  GccSolution g;
  g.K = matrix_from_json(field(j, "K", "gcc"), "gcc.K");
  g.P = sym_field(j, "P", "gcc");
  g.X = sym_field(j, "X", "gcc");
  g.Y = matrix_from_json(field(j, "Y", "gcc"), "gcc.Y");
  g.upsilon = vector_from_json(field(j, "upsilon", "gcc"), "gcc.upsilon");
  g.trace_P = number_field(j, "trace_P", "gcc");
  g.Rbar = sym_field(j, "Rbar", "gcc");
  g.P_N = sym_field(j, "P_N", "gcc");
  g.solver_tolerance = j.value("solver_tolerance", 0.0);
  if (g.K.rows() != g.Rbar.n() || g.K.cols() != g.P.n())
    throw ConfigError("gcc: K shape does not match P and Rbar");
  return g;
}

json rpi_to_json(const RpiSolution& r) {
  return json{{"E_R", matrix_to_json(r.E_R.matrix())},
              {"K_R", matrix_to_json(r.K_R)},
              {"a_alpha", r.a_alpha},
              {"a_sigma", vector_to_json(r.a_sigma)},
              {"method", r.method},
              {"objective", r.objective},
              {"solver_tolerance", r.solver_tolerance}};
}

RpiSolution rpi_from_json(const json& j) {
  RpiSolution r;
  r.E_R = sym_field(j, "E_R", "rpi");
  r.K_R = matrix_from_json(field(j, "K_R", "rpi"), "rpi.K_R");
  r.a_alpha = number_field(j, "a_alpha", "rpi");
  r.a_sigma = vector_from_json(field(j, "a_sigma", "rpi"), "rpi.a_sigma");
  r.method = j.value("method", std::string("approx"));
  r.objective = j.value("objective", 0.0);
  r.solver_tolerance = j.value("solver_tolerance", 0.0);
  if (r.K_R.cols() != r.E_R.n()) throw ConfigError("rpi: K_R shape does not match E_R");
  try {
    finalize_rpi(r);
  } catch (const Error& e) {
    throw ConfigError(std::string("rpi.E_R: ") + e.what());
  }
  return r;
}

}  // namespace tgcmpc
