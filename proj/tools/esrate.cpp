#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "esrate/engine.hpp"
#include "esrate/error.hpp"
#include "esrate/harness.hpp"
#include "esrate/rates.hpp"
#include "esrate/theory.hpp"
#include "esrate/verify.hpp"

namespace {

using namespace esrate;

struct RunArgs {
  std::string objective = "h1";
  std::size_t dim = 10;
  int kappa = 0;
  std::string alpha_rule = "const";
  double c = 1.0;
  std::optional<std::int64_t> budget;
  double f_floor = kDefaultFFloor;
  std::uint64_t seed = 1;
  std::string out;
  std::size_t stride = 1;
  double M = 0.5;
  double omega = 1.0;
};

int cmd_run(const RunArgs& a) {
  ObjectiveSpec spec = a.objective == "perturbed"
                           ? perturbed_family(HessianFamily::H1, a.dim, a.kappa, a.M, a.omega)
                           : hessian_family(parse_family(a.objective), a.dim, a.kappa);
  const EsParams params = alpha_preset(parse_alpha_rule(a.alpha_rule), a.c, a.dim);
  const Trajectory traj = run(spec, params, init_default(spec, a.seed),
                              a.budget.value_or(default_budget(a.dim)), a.f_floor, a.seed);
  if (a.out.empty()) {
    write_trajectory_csv(std::cout, traj, a.stride);
  } else {
    std::ofstream out(a.out, std::ios::binary);
    if (!out) throw InvalidInput("cannot write " + a.out);
    write_trajectory_csv(out, traj, a.stride);
  }
  try {
    const RateEstimate est = estimate_cr(traj);
    std::cerr << "t_final=" << traj.t_final << " stop=" << stop_reason_name(traj.stop_reason)
              << " cr_hat=" << est.cr_hat << " stderr=" << est.std_error << '\n';
  } catch (const Unsupported& e) {
    std::cerr << "t_final=" << traj.t_final << " (no rate: " << e.what() << ")\n";
  }
  return 0;
}

int cmd_experiment(const std::string& config_path, const std::string& out_dir) {
  std::ifstream in(config_path);
  if (!in) throw InvalidInput("cannot read " + config_path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("config is not valid JSON: ") + e.what());
  }
  const ExperimentConfig cfg = config_from_json(j);
  std::filesystem::create_directories(out_dir);
  const ResultTable table = run_experiment(cfg);
  const auto dir = std::filesystem::path(out_dir);
  emit_csv(table, dir / cfg.csv);
  emit_plot(table, dir / cfg.plot, cfg.plot_scaled);
  for (const auto& r : table.aggregates()) {
    std::cerr << r.objective << " d=" << r.dim << " kappa=" << r.kappa << " alpha=" << r.alpha_rule
              << " cr_hat=" << r.cr_hat << " scaled=" << r.scaled_rate << '\n';
  }
  return 0;
}

struct BoundsArgs {
  std::size_t dim = 0;
  double L = 1.0;
  double U = 1.0;
  double v_std = 0.0;
  double kappa_inf = 2.0;
  std::optional<double> e_q;
  std::string alpha_rule = "const";
  double c = 1.0;
  std::optional<double> p_target;
  std::optional<double> q_low;
  std::optional<double> q_high;
  std::string trace;
  int grid = 64;
};

int cmd_bounds(const BoundsArgs& a) {
  if (!(a.U >= a.L)) throw InvalidInput("need U >= L");
  if (a.q_low.has_value() != a.q_high.has_value()) {
    throw InvalidInput("--q-low and --q-high go together");
  }
  const TheoryInputs in{a.L, a.e_q.value_or(static_cast<double>(a.dim) * a.U), a.v_std,
                        a.kappa_inf, a.dim};
  EsParams params = alpha_preset(parse_alpha_rule(a.alpha_rule), a.c, a.dim);
  if (a.p_target) params = EsParams::for_target(params.alpha_up, *a.p_target);
  TheoryConstants c{};
  if (a.q_low) {
    c = build_constants(in, params, *a.q_low, *a.q_high);
  } else {
    BUpperOptions opt;
    opt.grid = a.grid;
    std::ofstream trace;
    if (!a.trace.empty()) {
      trace.open(a.trace, std::ios::binary);
      if (!trace) throw InvalidInput("cannot write " + a.trace);
      opt.trace = &trace;
    }
    c = b_upper(in, params, opt);
  }
  auto j = to_json(c);
  j["I_q_lower"] = feasible_q_interval(a.v_std, a.kappa_inf).lower;
  j["assumption2_rhs"] = assumption2_rhs(a.kappa_inf);
  j["lower_rate_bound"] = lower_rate_bound(a.dim);
  std::cout << j.dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulation and bound verification for the (1+1)-ES with success-based step sizes"};
  app.require_subcommand(1);

  RunArgs ra;
  auto* run_cmd = app.add_subcommand("run", "Run one trajectory and write it as CSV");
  run_cmd->add_option("--objective", ra.objective, "h1|h2|h3|perturbed")
      ->check(CLI::IsMember({"h1", "h2", "h3", "perturbed"}));
  run_cmd->add_option("--dim", ra.dim, "Dimension")->check(CLI::PositiveNumber);
  run_cmd->add_option("--kappa", ra.kappa, "Log10 condition exponent")->check(CLI::NonNegativeNumber);
  run_cmd->add_option("--alpha-rule", ra.alpha_rule, "const|sqrt|dim")
      ->check(CLI::IsMember({"const", "sqrt", "dim"}));
  run_cmd->add_option("--c", ra.c, "Alpha rule constant");
  run_cmd->add_option("--budget", ra.budget, "Iterations (default 10000 + 1000 d)");
  run_cmd->add_option("--f-floor", ra.f_floor, "Stop once f drops below this");
  run_cmd->add_option("--seed", ra.seed, "Trial seed");
  run_cmd->add_option("--out", ra.out, "Output CSV (default stdout)");
  run_cmd->add_option("--stride", ra.stride, "Keep every k-th row");
  run_cmd->add_option("--M", ra.M, "Perturbation amplitude");
  run_cmd->add_option("--omega", ra.omega, "Perturbation frequency");

  std::string config_path;
  std::string out_dir = ".";
  auto* exp_cmd = app.add_subcommand("experiment", "Run a configured grid, emit CSV and SVG");
  exp_cmd->add_option("--config", config_path, "JSON config")->required();
  exp_cmd->add_option("--out-dir", out_dir, "Directory for outputs");

  BoundsArgs ba;
  auto* bounds_cmd = app.add_subcommand("bounds", "Print the theory constants as JSON");
  bounds_cmd->add_option("--dim", ba.dim, "Dimension")->required()->check(CLI::PositiveNumber);
  bounds_cmd->add_option("--L", ba.L, "Strong convexity modulus");
  bounds_cmd->add_option("--U", ba.U, "Smoothness modulus");
  bounds_cmd->add_option("--v-std", ba.v_std, "sup V_std (default 0)");
  bounds_cmd->add_option("--kappa-inf", ba.kappa_inf, "inf kappa (default 2)");
  bounds_cmd->add_option("--e-q", ba.e_q, "E_Q (default d U)");
  bounds_cmd->add_option("--alpha-rule", ba.alpha_rule, "const|sqrt|dim")
      ->check(CLI::IsMember({"const", "sqrt", "dim"}));
  bounds_cmd->add_option("--c", ba.c, "Alpha rule constant");
  bounds_cmd->add_option("--p-target", ba.p_target, "Pick alpha_down for this target");
  bounds_cmd->add_option("--q-low", ba.q_low, "Fix q_low (with --q-high)");
  bounds_cmd->add_option("--q-high", ba.q_high, "Fix q_high (with --q-low)");
  bounds_cmd->add_option("--grid", ba.grid, "Grid points per axis for the supremum");
  bounds_cmd->add_option("--trace", ba.trace, "Write the grid search as CSV");

  std::string suite;
  VerifyOptions vo;
  auto* verify_cmd = app.add_subcommand("verify", "Run a verification suite, print a JSON report");
  verify_cmd->add_option("--suite", suite, "invariance|lemmas|assumption2|drift")
      ->required()
      ->check(CLI::IsMember({"invariance", "lemmas", "assumption2", "drift"}));
  verify_cmd->add_option("--n", vo.n, "Monte Carlo samples per estimate");
  verify_cmd->add_option("--seed", vo.seed, "Base seed");
  verify_cmd->add_option("--seeds", vo.seeds, "Invariance: seeds per objective");
  verify_cmd->add_option("--steps", vo.steps, "Invariance: steps per run");
  verify_cmd->add_option("--dim", vo.dim, "Drift: sphere dimension");
  verify_cmd->add_option("--p-target", vo.p_target, "Drift: target success probability");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*run_cmd) return cmd_run(ra);
    if (*exp_cmd) return cmd_experiment(config_path, out_dir);
    if (*bounds_cmd) return cmd_bounds(ba);
    if (*verify_cmd) {
      const VerifyResult r = run_verify(suite, vo);
      std::cout << r.report.dump(2) << '\n';
      return r.ok ? 0 : 2;
    }
  } catch (const InvalidInput& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const Unsupported& e) {
    std::cerr << "unsupported: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
