#include "ercmdp/experiment.hpp"

#include "ercmdp/bisection.hpp"
#include "ercmdp/dual.hpp"
#include "ercmdp/model_io.hpp"
#include "ercmdp/npg.hpp"
#include "ercmdp/oracles.hpp"

#include <chrono>
#include <cmath>
#include <fstream>

namespace ercmdp {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

GeneratorSpec generator_from_json(const json& j) {
  GeneratorSpec spec;
  spec.kind = j.at("kind").get<std::string>();
  if (spec.kind != "random" && spec.kind != "gridworld")
    throw std::runtime_error("generator.kind must be 'random' or 'gridworld'");
  if (j.contains("seed")) spec.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("num_states")) spec.num_states = j["num_states"].get<int>();
  if (j.contains("num_actions")) spec.num_actions = j["num_actions"].get<int>();
  if (j.contains("n_constraints")) spec.n_constraints = j["n_constraints"].get<int>();
  if (j.contains("gamma")) spec.gamma = j["gamma"].get<double>();
  if (j.contains("width")) spec.width = j["width"].get<int>();
  if (j.contains("height")) spec.height = j["height"].get<int>();
  if (j.contains("hazards")) spec.hazards = j["hazards"].get<std::vector<int>>();
  if (j.contains("threshold_factor")) spec.threshold_factor = j["threshold_factor"].get<double>();
  if (j.contains("make_active")) spec.make_active = j["make_active"].get<bool>();
  return spec;
}

}  // namespace

ExperimentConfig experiment_config_from_json(const json& j) {
  ExperimentConfig config;
  const json& inst = j.at("instance");
  if (inst.contains("file")) config.instance_file = inst["file"].get<std::string>();
  if (inst.contains("generator")) config.generator = generator_from_json(inst["generator"]);
  if (!config.instance_file && !config.generator)
    throw std::runtime_error("config.instance needs either 'file' or 'generator'");
  if (config.instance_file && config.generator)
    throw std::runtime_error("config.instance must not name both a file and a generator");

  if (j.contains("solver")) config.solver = j["solver"].get<std::string>();
  if (config.solver != "dual-descent" && config.solver != "bisection" &&
      config.solver != "standard-cmdp")
    throw std::runtime_error("solver must be dual-descent, bisection or standard-cmdp");
  if (j.contains("tau")) config.tau = j["tau"].get<double>();
  if (j.contains("epsilon")) config.epsilon = j["epsilon"].get<double>();
  if (j.contains("budgets")) {
    const json& b = j["budgets"];
    if (b.contains("n1")) config.n1 = b["n1"].get<int>();
    if (b.contains("n2")) config.n2 = b["n2"].get<int>();
    if (b.contains("n3")) config.n3 = b["n3"].get<int>();
  }
  if (config.n1 < 1) throw std::runtime_error("budgets.n1 must be positive");
  if (config.n2 < 0 || config.n3 < 0) throw std::runtime_error("budgets must be nonnegative");
  if (j.contains("step_size_override"))
    config.step_size_override = j["step_size_override"].get<double>();
  if (j.contains("adaptive_backtracking"))
    config.adaptive_backtracking = j["adaptive_backtracking"].get<bool>();
  if (j.contains("stop_grad_tol")) config.stop_grad_tol = j["stop_grad_tol"].get<double>();
  if (j.contains("oracle_comparison")) config.oracle_comparison = j["oracle_comparison"].get<bool>();
  if (j.contains("grid_resolution")) config.grid_resolution = j["grid_resolution"].get<double>();
  if (j.contains("slater_policy_file"))
    config.slater_policy_file = j["slater_policy_file"].get<std::string>();
  if (j.contains("random_init_seed"))
    config.random_init_seed = j["random_init_seed"].get<std::uint64_t>();
  if (j.contains("record_timing")) config.record_timing = j["record_timing"].get<bool>();
  config.output_dir = j.at("output_dir").get<std::string>();
  if (config.tau <= 0.0 && config.solver != "standard-cmdp")
    throw std::runtime_error("tau must be positive for regularized runs");
  return config;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
  try {
    return experiment_config_from_json(j);
  } catch (const json::exception& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

GeneratedInstance resolve_instance(const ExperimentConfig& config) {
  GeneratedInstance inst;
  if (config.generator) {
    const GeneratorSpec& g = *config.generator;
    inst = g.kind == "random"
               ? gen_random_cmdp(g.seed, g.num_states, g.num_actions, g.n_constraints, g.gamma,
                                 g.threshold_factor)
               : gen_gridworld(g.width, g.height, g.gamma, g.hazards, g.threshold_factor);
    if (g.make_active) {
      const double tau = config.solver == "standard-cmdp"
                             ? (1.0 - inst.model.gamma) * config.epsilon /
                                   (4.0 * std::log(static_cast<double>(inst.model.num_actions)))
                             : config.tau;
      inst = make_constraint_active(inst.model, tau);
    }
  } else {
    inst.model = load_cmdp(*config.instance_file);
    inst.slater = config.slater_policy_file
                      ? load_policy(*config.slater_policy_file)
                      : Policy::uniform(inst.model.num_states, inst.model.num_actions);
    inst.slack = utility_values(inst.model, inst.slater) - inst.model.thresholds;
    if (inst.model.num_constraints() > 0 && inst.slack.minCoeff() <= 0.0)
      throw InfeasibleError(
          "no certified Slater point: the supplied (or uniform) policy is not strictly "
          "feasible; pass slater_policy_file");
  }
  return inst;
}

namespace {

json vector_to_json(const Vector& v) {
  json out = json::array();
  for (int i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

void add_oracle_comparison(ordered_json& summary, const TabularCMDP& model,
                           const Policy& solved_policy, double tau, double dual_value,
                           const Constants& constants, double resolution) {
  ordered_json oracle;
  const OccupancyLpResult lp = occupancy_lp_solve(model);
  if (lp.status == LpStatus::Optimal) {
    oracle["lp_value"] = lp.value;
    const double v = value_at_dist(model, evaluate_value(model, solved_policy, model.reward));
    oracle["primal_value_gap_vs_lp"] = std::abs(lp.value - v);
  } else {
    oracle["lp_value"] = nullptr;
    oracle["lp_status"] = "infeasible";
  }
  if (model.num_constraints() <= 2 && model.num_constraints() > 0) {
    const DualBox box = make_dual_box(model, constants, tau);
    const GridSearchResult grid =
        dual_grid_search(model, tau, box, resolution, constants.ell);
    oracle["grid_lambda_star"] = vector_to_json(grid.lambda_star);
    oracle["grid_d_star"] = grid.d_star;
    oracle["dual_gap_vs_grid"] = dual_value - grid.d_star;
  }
  summary["oracle"] = std::move(oracle);
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config) {
  const auto t0 = std::chrono::steady_clock::now();
  GeneratedInstance inst = resolve_instance(config);
  const TabularCMDP& model = inst.model;
  {
    const ValidationReport report = validate_model(model);
    if (!report.ok()) throw std::runtime_error("model validation failed:\n" + report.to_string());
  }
  const int n = model.num_constraints();
  if (config.solver == "bisection" && n != 1)
    throw std::runtime_error("bisection requires exactly one constraint");

  const std::filesystem::path dir(config.output_dir);
  std::filesystem::create_directories(dir);

  const double tau = config.solver == "standard-cmdp"
                         ? (1.0 - model.gamma) * config.epsilon /
                               (4.0 * std::log(static_cast<double>(std::max(2, model.num_actions))))
                         : config.tau;
  Constants constants;
  try {
    constants = compute_constants(model, inst.slater, tau);
  } catch (const std::invalid_argument& e) {
    throw InfeasibleError(e.what());
  }
  const DualBox box = make_dual_box(model, constants, tau);
  const double q_gap = lagrangian_q_gap_bound(constants.c2_sum, tau, model.num_actions, model.gamma);

  // Budget derivations when not pinned by the config: the inner budget makes
  // the gradient error at most epsilon/2 (the bisection analysis needs exactly
  // this); the recover budget targets a 1e-10 log-policy error.
  const double grad_target_log_error =
      config.epsilon * std::pow(1.0 - model.gamma, 2) /
      (2.0 * std::sqrt(static_cast<double>(std::max(1, n))) * model.num_actions);
  const int n2 = config.n2 > 0 ? config.n2
                               : npg_iteration_budget(q_gap, std::min(1e-9, grad_target_log_error),
                                                      tau, model.gamma);
  const int n3 = config.n3 > 0 ? config.n3 : npg_iteration_budget(q_gap, 1e-10, tau, model.gamma);

  ordered_json summary;
  summary["solver"] = config.solver;
  summary["tau"] = tau;
  summary["num_states"] = model.num_states;
  summary["num_actions"] = model.num_actions;
  summary["n_constraints"] = n;

  ordered_json params;
  params["ell"] = constants.ell;
  params["ell_c"] = constants.ell_c;
  params["c1"] = constants.c1;
  params["c2"] = constants.c2;
  params["c2_sum"] = constants.c2_sum;
  params["d_hat"] = constants.d_hat;
  params["xi"] = vector_to_json(constants.xi);
  params["box_upper"] = vector_to_json(box.upper);
  params["q_gap_bound"] = q_gap;
  params["n1"] = config.n1;
  params["n2"] = n2;
  params["n3"] = n3;
  params["epsilon"] = config.epsilon;
  params["eta"] = default_npg_step_size(model.gamma, tau);
  if (config.step_size_override) params["step_size_override"] = *config.step_size_override;

  double dual_value = 0.0;
  Policy solved;
  if (config.solver == "bisection") {
    BisectionConfig bc;
    bc.epsilon = config.epsilon;
    bc.inner_budget_n1 = n2;
    bc.recover_budget_n2 = n3;
    bc.interval_lo = 0.0;
    bc.interval_hi = constants.c2;
    const BisectionResult result = bisection_solve(model, tau, bc, inst.slater);
    std::ofstream trace(dir / "trace.csv");
    result.write_csv(trace);
    solved = result.policy;
    dual_value = result.dual_value;
    summary["lambda"] = json::array({result.lambda});
    summary["final_gradient"] = result.final_gradient;
    summary["outer_iters"] = result.outer_iters;
    summary["short_circuit"] =
        result.short_circuit_low ? "low" : (result.short_circuit_high ? "high" : "none");
  } else if (config.solver == "dual-descent") {
    DualDescentOptions opts;
    opts.step_size = config.step_size_override;
    opts.adaptive_backtracking = config.adaptive_backtracking;
    opts.stop_grad_tol = config.stop_grad_tol;
    opts.init_policy = inst.slater;
    opts.random_init_seed = config.random_init_seed;
    opts.record_timing = config.record_timing;
    if (!opts.step_size && !(constants.ell > 0.0) && n > 0)
      throw std::runtime_error("no usable step size: provide step_size_override");
    const DualDescentResult result = accelerated_dual_descent(model, tau, box, constants,
                                                              config.n1, n2, n3, opts);
    std::ofstream trace(dir / "trace.csv");
    result.trace.write_csv(trace);
    solved = result.policy;
    dual_value = result.dual_value;
    summary["lambda"] = vector_to_json(result.lambda);
    summary["grad_norm"] = result.gradient.norm();
    summary["outer_iters"] = result.outer_iters;
    summary["alpha"] = result.alpha_used;
    summary["backtracks"] = result.backtrack_count;
    summary["dual_increase_flags"] = result.trace.dual_increase_flags;
  } else {
    StandardSolveOptions opts;
    opts.max_outer = config.n1;
    opts.step_size = config.step_size_override;
    opts.record_timing = config.record_timing;
    const StandardSolveReport report = standard_cmdp_solve(model, config.epsilon, inst.slater, opts);
    std::ofstream trace(dir / "trace.csv");
    report.trace.write_csv(trace);
    solved = report.policy;
    dual_value = 0.0;
    summary["lambda"] = vector_to_json(report.lambda);
    summary["outer_iters"] = report.outer_iters;
    summary["alpha"] = report.alpha;
    summary["duality_gap_allowance"] = report.gap_allowance;
  }

  const Vector utilities = utility_values(model, solved);
  double violation = 0.0;
  for (int i = 0; i < n; ++i)
    violation = std::max(violation, std::max(0.0, model.thresholds[i] - utilities[i]));
  summary["primal_value"] = value_at_dist(model, evaluate_value(model, solved, model.reward));
  summary["soft_objective"] =
      value_at_dist(model, evaluate_soft_value(model, solved, model.reward, tau));
  if (config.solver != "standard-cmdp") summary["dual_value"] = dual_value;
  summary["utilities"] = vector_to_json(utilities);
  summary["max_violation"] = violation;
  if (config.oracle_comparison)
    add_oracle_comparison(summary, model, solved, tau, dual_value, constants,
                          config.grid_resolution);
  summary["wall_ms"] =
      config.record_timing
          ? std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count()
          : 0.0;

  std::ofstream summary_out(dir / "summary.json");
  summary_out << summary.dump(2) << "\n";
  std::ofstream params_out(dir / "params.json");
  params_out << params.dump(2) << "\n";
  save_policy(solved, dir / "policy.json");

  return {dir, std::move(summary)};
}

}  // namespace ercmdp
