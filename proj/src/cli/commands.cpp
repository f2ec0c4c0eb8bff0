#include "tgcmpc/cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "tgcmpc/acceptance.hpp"
#include "tgcmpc/errors.hpp"
#include "tgcmpc/problem_io.hpp"
#include "tgcmpc/sim.hpp"
#include "tgcmpc/svg.hpp"
#include "tgcmpc/synthesis.hpp"
#include "tgcmpc/tube.hpp"

namespace fs = std::filesystem;

namespace tgcmpc::cli {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string join(const Eigen::VectorXd& v) {
  std::string s;
  for (Eigen::Index i = 0; i < v.size(); ++i) s += (i ? "," : "") + fmt(v(i));
  return s;
}

Eigen::VectorXd to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write " + path.string());
  f << text;
  if (!f) throw ConfigError("write failed for " + path.string());
}

nlohmann::json read_json(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(f);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

fs::path output_dir(const RunConfig& cfg) {
  fs::path dir(cfg.output_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory " + dir.string() + ": " + ec.message());
  return dir;
}

conic::SolverSettings with_tol(conic::SolverSettings s, const RunConfig& cfg) {
  if (cfg.solver_tol) s.feas_tol = *cfg.solver_tol;
  return s;
}

Problem load(const RunConfig& cfg) {
  if (cfg.problem_path.empty()) throw ConfigError("--problem is required");
  Problem p = load_problem(cfg.problem_path);
  if (cfg.horizon) {
    if (*cfg.horizon < 1) throw ConfigError("--horizon must be at least 1");
    p.horizon = *cfg.horizon;
  }
  return p;
}

struct Offline {
  GccSolution gcc;
  RpiSolution rpi;
};

Offline synthesize(const Problem& p, const RunConfig& cfg) {
  const auto settings = with_tol(synthesis_settings(), cfg);
  Offline o{synthesize_gcc(p.system, p.cost, settings), {}};
  if (cfg.rpi_method != "approx" && cfg.rpi_method != "mrpi")
    throw ConfigError("--rpi must be approx or mrpi, got " + cfg.rpi_method);
  const bool exact = cfg.rpi_method == "mrpi";
  const Eigen::MatrixXd K = o.gcc.K;
  RpiSynth synth = [&](double a) {
    return exact ? synthesize_mrpi(p.system, K, a, settings) : synthesize_approx_mrpi(p.system, a, K, settings);
  };
  if (cfg.a_alpha) {
    RpiAttempt at = synth(*cfg.a_alpha);
    if (!at.solution) throw InfeasibleError("invariant set synthesis at a_alpha=" + fmt(*cfg.a_alpha) + ": " + at.message);
    o.rpi = *at.solution;
  } else {
    o.rpi = line_search_a_alpha(synth, AlphaGrid{}, RpiRanking::logdet);
  }
  return o;
}

Offline offline(const Problem& p, const RunConfig& cfg) {
  if (cfg.offline_dir.empty()) return synthesize(p, cfg);
  const fs::path dir(cfg.offline_dir);
  try {
    return {gcc_from_json(read_json(dir / "gcc.json")), rpi_from_json(read_json(dir / "rpi.json"))};
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("offline data: ") + e.what());
  }
}

Eigen::VectorXd direction(const Problem& p, const RunConfig& cfg) {
  Eigen::VectorXd d;
  if (!cfg.direction.empty()) {
    d = to_vector(cfg.direction);
  } else {
    if (p.x0.size() == 0 || p.x0.lpNorm<Eigen::Infinity>() == 0.0)
      throw ConfigError("--direction is required when the problem has no nonzero x0");
    d = p.x0 / p.x0.lpNorm<Eigen::Infinity>();
  }
  if (d.size() != p.system.nx()) throw ConfigError("direction must have " + std::to_string(p.system.nx()) + " entries");
  return d;
}

Eigen::VectorXd initial_state(const Problem& p, const RunConfig& cfg) {
  Eigen::VectorXd x0;
  if (cfg.lambda) {
    x0 = *cfg.lambda * direction(p, cfg);
  } else if (!cfg.x0.empty()) {
    x0 = to_vector(cfg.x0);
  } else {
    x0 = p.x0.size() ? p.x0 : Eigen::VectorXd::Zero(p.system.nx());
  }
  if (x0.size() != p.system.nx()) throw ConfigError("x0 must have " + std::to_string(p.system.nx()) + " entries");
  return x0;
}

std::vector<double> range(int n) {
  std::vector<double> k(n);
  for (int i = 0; i < n; ++i) k[i] = i;
  return k;
}

std::string tube_svg(const TubeSolution& sol, const RpiSolution& rpi) {
  const int N = static_cast<int>(sol.nu.size());
  const int nx = static_cast<int>(sol.z.front().size());
  const Eigen::MatrixXd Einv = sym_inverse(rpi.E_R).matrix();
  plot::Panel states{"nominal states and tube", "k", {}, {}, {}};
  for (int i = 0; i < nx; ++i) {
    plot::Series s{"z" + std::to_string(i), range(N + 1), {}, false};
    plot::Band b{"tube z" + std::to_string(i), range(N + 1), {}, {}};
    const double w = std::sqrt(Einv(i, i));
    for (int k = 0; k <= N; ++k) {
      s.y.push_back(sol.z[k](i));
      b.lo.push_back(sol.z[k](i) - w * sol.alpha(k));
      b.hi.push_back(sol.z[k](i) + w * sol.alpha(k));
    }
    states.series.push_back(std::move(s));
    states.bands.push_back(std::move(b));
  }
  plot::Panel alpha{"tube scaling alpha", "k", {}, {}, {}};
  alpha.series.push_back({"alpha", range(N + 1), std::vector<double>(sol.alpha.data(), sol.alpha.data() + N + 1), false});
  return plot::render_svg({states, alpha});
}

std::string trace_svg(const SimTrace& t, const PolytopeConstraints& c) {
  const int M = t.steps();
  const int nx = t.x.empty() ? 0 : static_cast<int>(t.x.front().size());
  const int nu = t.u.empty() ? 0 : static_cast<int>(t.u.front().size());
  std::vector<double> bounds;
  for (int i = 0; i < c.ng(); ++i)
    if (c.Hx.row(i).cwiseAbs().sum() + c.Hu.row(i).cwiseAbs().sum() > 0) bounds.push_back(c.g(i));
  std::vector<double> box;
  if (!bounds.empty()) {
    const double b = *std::max_element(bounds.begin(), bounds.end());
    box = {-b, b};
  }
  plot::Panel xs{"states", "k", {}, {}, box};
  for (int i = 0; i < nx; ++i) {
    plot::Series s{"x" + std::to_string(i), range(static_cast<int>(t.x.size())), {}, false};
    for (const auto& x : t.x) s.y.push_back(x(i));
    xs.series.push_back(std::move(s));
  }
  plot::Panel us{"inputs", "k", {}, {}, box};
  for (int i = 0; i < nu; ++i) {
    plot::Series s{"u" + std::to_string(i), range(M), {}, false};
    for (const auto& u : t.u) s.y.push_back(u(i));
    us.series.push_back(std::move(s));
  }
  std::vector<plot::Panel> panels{xs, us};
  if (!t.bounds.empty()) {
    plot::Panel cb{"cost bound per solve", "k", {}, {}, {}};
    cb.series.push_back({"bound", range(static_cast<int>(t.bounds.size())), t.bounds, false});
    panels.push_back(std::move(cb));
  }
  return plot::render_svg(panels);
}

}  // namespace

int cmd_synthesize(const RunConfig& cfg, std::ostream& out, std::ostream&) {
  const Problem p = load(cfg);
  const fs::path dir = output_dir(cfg);
  const Offline o = synthesize(p, cfg);
  write_file(dir / "gcc.json", gcc_to_json(o.gcc).dump(2) + "\n");
  write_file(dir / "rpi.json", rpi_to_json(o.rpi).dump(2) + "\n");
  out << "trace_P=" << fmt(o.gcc.trace_P) << '\n'
      << "upsilon=" << join(o.gcc.upsilon) << '\n'
      << "rpi_method=" << o.rpi.method << '\n'
      << "a_alpha=" << fmt(o.rpi.a_alpha) << '\n'
      << "a_sigma=" << join(o.rpi.a_sigma) << '\n'
      << "logdet_E_R=" << fmt(logdet(o.rpi.E_R)) << '\n';
  return kOk;
}

int cmd_tube(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const Problem p = load(cfg);
  const fs::path dir = output_dir(cfg);
  const Offline o = offline(p, cfg);
  const Eigen::VectorXd x0 = initial_state(p, cfg);
  std::optional<SymMatrix> E_N;
  if (cfg.terminal) E_N = terminal_weight_from_rpi(p.constraints, o.rpi);
  const TubeProblem tp = make_tube_problem(p, o.gcc, o.rpi, p.horizon, x0, 0.0, E_N);
  const TubeSolution sol = solve_tube(tp, with_tol(tube_settings(), cfg));
  out << "status=" << conic::to_string(sol.status) << '\n' << "horizon=" << p.horizon << '\n';
  if (!sol.optimal()) {
    err << "tube program not solved: " << sol.message << '\n';
    return sol.status == conic::SolveStatus::infeasible ? kInfeasible : kCheckFailed;
  }
  write_file(dir / "tube.csv", tube_csv(sol));
  write_file(dir / "tube.svg", tube_svg(sol, o.rpi));
  out << "objective=" << fmt(sol.objective) << '\n'
      << "alpha_max=" << fmt(sol.alpha.maxCoeff()) << '\n'
      << "alpha_final=" << fmt(sol.alpha(sol.alpha.size() - 1)) << '\n'
      << "solver_tolerance=" << fmt(sol.solver_tolerance) << '\n';
  return kOk;
}

int cmd_simulate(const RunConfig& cfg, std::ostream& out, std::ostream&) {
  const Problem p = load(cfg);
  const fs::path dir = output_dir(cfg);
  if (cfg.steps < 1) throw ConfigError("--steps must be at least 1");
  if (cfg.runs < 1) throw ConfigError("--runs must be at least 1");
  Controller ctl;
  if (cfg.controller == "tube") {
    ctl.kind = ControllerKind::tube;
  } else if (cfg.controller == "gcc") {
    ctl.kind = ControllerKind::gcc_only;
  } else {
    throw ConfigError("--controller must be tube or gcc, got " + cfg.controller);
  }
  ctl.N = p.horizon;
  ctl.settings = with_tol(tube_settings(), cfg);
  const DisturbanceKind kind = parse_disturbance_kind(cfg.disturbance);
  const Eigen::VectorXd x0 = initial_state(p, cfg);

  Offline o;
  std::optional<RpiSolution> rpi;
  if (ctl.kind == ControllerKind::tube || !cfg.offline_dir.empty()) {
    o = offline(p, cfg);
    rpi = o.rpi;
  } else {
    o.gcc = synthesize_gcc(p.system, p.cost, with_tol(synthesis_settings(), cfg));
  }

  std::vector<DisturbanceModel> models;
  for (int r = 0; r < cfg.runs; ++r) models.push_back({kind, cfg.seed + static_cast<std::uint64_t>(r), {}});
  const auto traces = closed_loop_batch(p, o.gcc, rpi, ctl, x0, cfg.steps, models);

  int stopped = 0;
  for (std::size_t r = 0; r < traces.size(); ++r) {
    const SimTrace& t = traces[r];
    const std::string stem = cfg.runs == 1 ? "trace" : "trace_" + std::to_string(models[r].seed);
    write_file(dir / (stem + ".csv"), trace_csv(t));
    write_file(dir / (stem + ".svg"), trace_svg(t, p.constraints));
    const std::string pre = cfg.runs == 1 ? "" : "run" + std::to_string(models[r].seed) + ".";
    const int M = t.steps();
    int violations = static_cast<int>(std::count(t.violated.begin(), t.violated.end(), true));
    out << pre << "status=" << t.status << '\n' << pre << "steps=" << M << '\n' << pre << "violations=" << violations << '\n';
    if (M > 0) out << pre << "realized_cost=" << fmt(realized_cost(t, o.gcc, M)) << '\n';
    if (!t.bounds.empty()) out << pre << "bound=" << fmt(t.bounds.front()) << '\n';
    if (!t.x.empty()) out << pre << "final_inf_norm=" << fmt(t.x.back().lpNorm<Eigen::Infinity>()) << '\n';
    if (!t.complete) ++stopped;
  }
  return stopped ? kInfeasible : kOk;
}

int cmd_sweep(const RunConfig& cfg, std::ostream& out, std::ostream&) {
  const Problem p = load(cfg);
  const fs::path dir = output_dir(cfg);
  const Offline o = offline(p, cfg);
  SweepOptions so;
  so.N = p.horizon;
  so.lambda_max = cfg.lambda_max;
  so.tol = cfg.tol;
  so.settings = with_tol(tube_settings(), cfg);
  if (!(so.lambda_max > 0.0) || !(so.tol > 0.0)) throw ConfigError("--lambda-max and --tol must be positive");
  const SweepResult res = feasibility_sweep(p, o.gcc, o.rpi, direction(p, cfg), so);
  write_file(dir / "sweep.csv", sweep_csv(res));
  out << "lambda_star=" << fmt(res.lambda_star) << '\n' << "probes=" << res.scan.size() << '\n';
  return kOk;
}

int cmd_check(const RunConfig& cfg, std::ostream& out, std::ostream&) {
  acceptance::Options opt = acceptance::default_options();
  if (!cfg.problem_path.empty()) opt.problem_path = cfg.problem_path;
  if (!cfg.reference_path.empty()) opt.reference_path = cfg.reference_path;
  opt.perturb_K = cfg.perturb_k;
  if (cfg.solver_tol) opt.solver_tol = *cfg.solver_tol;
  const auto results = acceptance::run_acceptance(opt);
  int failed = 0;
  for (const auto& r : results) {
    out << acceptance::format_line(r) << '\n';
    if (!r.passed()) ++failed;
  }
  out << "passed=" << results.size() - failed << '\n' << "failed=" << failed << '\n';
  return failed ? kCheckFailed : kOk;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  CLI::App app{"Tube-based guaranteed cost MPC"};
  app.require_subcommand(1);

  auto common = [&](CLI::App* c) {
    c->add_option("--problem", cfg.problem_path, "problem JSON file");
    c->add_option("--out", cfg.output_dir, "output directory");
    c->add_option("--horizon", cfg.horizon, "override the problem horizon");
  };
  auto offline_opts = [&](CLI::App* c) {
    c->add_option("--a-alpha", cfg.a_alpha, "fixed a_alpha instead of the line search");
    c->add_option("--rpi", cfg.rpi_method, "invariant set program: approx or mrpi");
    c->add_option("--offline", cfg.offline_dir, "directory with gcc.json and rpi.json");
  };
  auto state_opts = [&](CLI::App* c) {
    c->add_option("--x0", cfg.x0, "initial state")->delimiter(',');
    c->add_option("--lambda", cfg.lambda, "initial state lambda * direction");
    c->add_option("--direction", cfg.direction, "ray for --lambda")->delimiter(',');
  };

  auto* syn = app.add_subcommand("synthesize", "offline controller and invariant set");
  common(syn);
  syn->add_option("--a-alpha", cfg.a_alpha, "fixed a_alpha instead of the line search");
  syn->add_option("--rpi", cfg.rpi_method, "invariant set program: approx or mrpi");

  auto* tube = app.add_subcommand("tube", "single tube program solve");
  common(tube);
  offline_opts(tube);
  state_opts(tube);
  tube->add_flag("--terminal", cfg.terminal, "add the terminal set constraint");

  auto* sim = app.add_subcommand("simulate", "closed-loop simulation");
  common(sim);
  offline_opts(sim);
  state_opts(sim);
  sim->add_option("--seed", cfg.seed, "disturbance seed");
  sim->add_option("--disturbance", cfg.disturbance, "zero, ball or boundary");
  sim->add_option("--steps", cfg.steps, "closed-loop steps");
  sim->add_option("--runs", cfg.runs, "number of seeds starting at --seed");
  sim->add_option("--controller", cfg.controller, "tube or gcc");

  auto* sweep = app.add_subcommand("sweep", "feasibility boundary along a ray");
  common(sweep);
  offline_opts(sweep);
  sweep->add_option("--direction", cfg.direction, "ray, default the problem x0")->delimiter(',');
  sweep->add_option("--lambda-max", cfg.lambda_max, "upper end of the scan");
  sweep->add_option("--tol", cfg.tol, "bisection tolerance");

  auto* check = app.add_subcommand("check", "acceptance suite");
  check->add_option("--problem", cfg.problem_path, "problem JSON file");
  check->add_option("--reference", cfg.reference_path, "reference values JSON file");
  check->add_option("--perturb-k", cfg.perturb_k, "added to K(0,0) before the certificate checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (const char* env = std::getenv("TGCMPC_SOLVER_TOL")) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(env, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != std::string(env).size() || !(v > 0.0))
        throw ConfigError(std::string("TGCMPC_SOLVER_TOL is not a positive number: ") + env);
      cfg.solver_tol = v;
    }
    if (syn->parsed()) return cmd_synthesize(cfg, out, err);
    if (tube->parsed()) return cmd_tube(cfg, out, err);
    if (sim->parsed()) return cmd_simulate(cfg, out, err);
    if (sweep->parsed()) return cmd_sweep(cfg, out, err);
    return cmd_check(cfg, out, err);
  } catch (const InfeasibleError& e) {
    err << "infeasible: " << e.what() << '\n';
    return kInfeasible;
  } catch (const SolverError& e) {
    err << "solver: " << e.what() << '\n';
    return kCheckFailed;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  }
}

}  // namespace tgcmpc::cli
