#pragma once

#include <Eigen/Dense>
#include <nlohmann/json.hpp>
#include <string>

#include "tgcmpc/model.hpp"

namespace tgcmpc {

/// Problem file layout (one JSON document):
///
///   {
///     "system": {"A": [[...]], "Bu": ..., "Bw": ..., "Cy": ..., "Dyu": ...,
///                "blocks": [[np_1, nq_1], ...]},
///     "cost": {"Q": ..., "R": ..., "N": ...},          // N optional (zero)
///     "constraints": {"Hx": ..., "Hu": ..., "g": [...]}, // optional
///     "horizon": 5,                                      // optional
///     "x0": [...]                                        // optional (zero)
///   }
///
/// Matrices are row-major nested arrays. Unknown keys are rejected with a
/// ConfigError that lists the accepted ones.
Problem parse_problem(const nlohmann::json& doc);
Problem load_problem(const std::string& path);
nlohmann::json problem_to_json(const Problem& p);

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m);
nlohmann::json vector_to_json(const Eigen::VectorXd& v);
/// `cols` is used when the array is empty (a 0 x cols matrix).
Eigen::MatrixXd matrix_from_json(const nlohmann::json& j, const std::string& what, int cols = 0);
Eigen::VectorXd vector_from_json(const nlohmann::json& j, const std::string& what);

}  // namespace tgcmpc
