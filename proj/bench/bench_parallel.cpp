// Serial reference kernels against their OpenMP versions on the bundled
// three-state example. Both variants return identical results (see the
// unit tests); only wall time differs.

#include <benchmark/benchmark.h>

#include "tgcmpc/problem_io.hpp"
#include "tgcmpc/sim.hpp"
#include "tgcmpc/synthesis.hpp"
#include "tgcmpc/tube.hpp"

using namespace tgcmpc;

namespace {

struct Data {
  Problem problem;
  GccSolution gcc;
  RpiSolution rpi;
  Eigen::VectorXd ray = Eigen::Vector3d(1, -1, 1);
  TubeProblem tp;
  TubeSolution plan;
  std::vector<DisturbanceModel> rollouts;
  std::vector<DisturbanceModel> runs;

  static const Data& get() {
    static const Data d = [] {
      Data x;
      x.problem = load_problem(std::string(TGCMPC_DATA_DIR) + "/three_state_example.json");
      x.gcc = synthesize_gcc(x.problem.system, x.problem.cost);
      x.rpi = *synthesize_approx_mrpi(x.problem.system, 0.5, x.gcc.K).solution;
      x.tp = make_tube_problem(x.problem, x.gcc, x.rpi, 5, 0.6 * x.ray);
      x.plan = solve_tube(x.tp);
      for (int s = 1; s <= 1000; ++s) x.rollouts.push_back({DisturbanceKind::random_ball, static_cast<std::uint64_t>(s), {}});
      for (int s = 1; s <= 8; ++s) x.runs.push_back({DisturbanceKind::boundary, static_cast<std::uint64_t>(s), {}});
      return x;
    }();
    return d;
  }
};

void BM_Rollouts(benchmark::State& st) {
  const auto& d = Data::get();
  for (auto _ : st) {
    auto r = st.range(0) ? rollout_batch(d.tp, d.plan, d.rollouts) : rollout_batch_serial(d.tp, d.plan, d.rollouts);
    benchmark::DoNotOptimize(r);
  }
}

void BM_ClosedLoop(benchmark::State& st) {
  const auto& d = Data::get();
  const Eigen::VectorXd x0 = 0.5 * d.ray;
  for (auto _ : st) {
    auto r = st.range(0) ? closed_loop_batch(d.problem, d.gcc, d.rpi, Controller{}, x0, 10, d.runs)
                         : closed_loop_batch_serial(d.problem, d.gcc, d.rpi, Controller{}, x0, 10, d.runs);
    benchmark::DoNotOptimize(r);
  }
}

void BM_AlphaScan(benchmark::State& st) {
  const auto& d = Data::get();
  RpiSynth synth = [&](double a) { return synthesize_approx_mrpi(d.problem.system, a, d.gcc.K); };
  for (auto _ : st) {
    auto r = st.range(0) ? scan_a_alpha(synth, AlphaGrid{}) : scan_a_alpha_serial(synth, AlphaGrid{});
    benchmark::DoNotOptimize(r);
  }
}

void BM_Sweep(benchmark::State& st) {
  const auto& d = Data::get();
  for (auto _ : st) {
    auto r = st.range(0) ? feasibility_sweep(d.problem, d.gcc, d.rpi, d.ray, SweepOptions{})
                         : feasibility_sweep_serial(d.problem, d.gcc, d.rpi, d.ray, SweepOptions{});
    benchmark::DoNotOptimize(r);
  }
}

}  // namespace

// Argument 0 is the serial reference, 1 the OpenMP kernel.
BENCHMARK(BM_Rollouts)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_ClosedLoop)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_AlphaScan)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_Sweep)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
