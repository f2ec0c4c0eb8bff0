#pragma once

// Offline data for the bundled three-state example, computed once per test
// binary: the optimal GCC and the approximate invariant set at a_alpha = 0.5
// with K_R = K.

#include "oracles.hpp"
#include "tgcmpc/problem_io.hpp"
#include "tgcmpc/synthesis.hpp"

struct ThreeState {
  tgcmpc::Problem problem;
  tgcmpc::GccSolution gcc;
  tgcmpc::RpiSolution rpi;
  Eigen::VectorXd ray;  // [1, -1, 1]

  static const ThreeState& get() {
    static const ThreeState e = [] {
      ThreeState x;
      x.problem = tgcmpc::load_problem(oracle::data_file("three_state_example.json"));
      x.gcc = tgcmpc::synthesize_gcc(x.problem.system, x.problem.cost);
      x.rpi = *tgcmpc::synthesize_approx_mrpi(x.problem.system, 0.5, x.gcc.K).solution;
      x.ray = Eigen::Vector3d(1, -1, 1);
      return x;
    }();
    return e;
  }
};
