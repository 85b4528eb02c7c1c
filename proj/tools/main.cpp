#include "ercmdp/bisection.hpp"
#include "ercmdp/dual.hpp"
#include "ercmdp/experiment.hpp"
#include "ercmdp/fit.hpp"
#include "ercmdp/gen.hpp"
#include "ercmdp/invariants.hpp"
#include "ercmdp/model_io.hpp"
#include "ercmdp/oracles.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using namespace ercmdp;
using nlohmann::ordered_json;

int cmd_validate(const std::string& file) {
  const TabularCMDP model = cmdp_from_json([&] {
    std::ifstream in(file);
    if (!in) throw std::runtime_error("cannot open " + file);
    nlohmann::json j;
    in >> j;
    return j;
  }());
  const ValidationReport report = validate_model(model);
  if (report.ok()) {
    std::cout << "pass: " << model.num_states << " states, " << model.num_actions
              << " actions, " << model.num_constraints() << " constraints, gamma "
              << model.gamma << "\n";
    return 0;
  }
  std::cout << report.to_string();
  return 1;
}

void write_instance(const GeneratedInstance& inst, const std::string& out,
                    const std::string& slater_out) {
  save_cmdp(inst.model, out);
  std::cout << "wrote " << out << " (slack";
  for (int i = 0; i < inst.slack.size(); ++i) std::cout << " " << inst.slack[i];
  std::cout << ")\n";
  if (!slater_out.empty()) {
    save_policy(inst.slater, slater_out);
    std::cout << "wrote " << slater_out << "\n";
  }
}

std::vector<std::pair<double, double>> read_csv_column(const std::string& file,
                                                       const std::string& column) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open " + file);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(file + ": empty file");
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) header.push_back(field);
  }
  int col = -1, iter_col = -1;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == column) col = static_cast<int>(i);
    if (header[i] == "iter") iter_col = static_cast<int>(i);
  }
  if (col < 0) throw std::runtime_error(file + ": no column named '" + column + "'");
  std::vector<std::pair<double, double>> rows;
  int row_index = 0;
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string field;
    double iter = ++row_index;
    double value = 0;
    for (int i = 0; std::getline(ss, field, ','); ++i) {
      if (i == iter_col) iter = std::stod(field);
      if (i == col) value = std::stod(field);
    }
    rows.emplace_back(iter, value);
  }
  return rows;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Entropy-regularized constrained MDP solver and experiment runner"};
  app.require_subcommand(1);

  // validate
  std::string validate_file;
  auto* validate = app.add_subcommand("validate", "Check a CMDP file against the model invariants");
  validate->add_option("file", validate_file, "CMDP JSON file")->required();

  // gen
  auto* gen = app.add_subcommand("gen", "Generate a Slater-feasible instance");
  gen->require_subcommand(1);
  std::uint64_t seed = 0;
  int states = 5, actions = 3, constraints = 1, width = 4, height = 4;
  double gamma = 0.9, threshold_factor = 0.9;
  std::string out_file, slater_out;
  std::vector<int> hazards;
  bool no_hazards = false;
  auto* gen_random = gen->add_subcommand("random", "Random dense instance");
  gen_random->add_option("--seed", seed);
  gen_random->add_option("--states", states);
  gen_random->add_option("--actions", actions);
  gen_random->add_option("--constraints", constraints);
  gen_random->add_option("--gamma", gamma);
  gen_random->add_option("--threshold-factor", threshold_factor);
  gen_random->add_option("-o,--output", out_file)->required();
  gen_random->add_option("--slater-out", slater_out);
  auto* gen_grid = gen->add_subcommand("gridworld", "Slippery gridworld with hazards");
  gen_grid->add_option("--width", width);
  gen_grid->add_option("--height", height);
  gen_grid->add_option("--gamma", gamma);
  gen_grid->add_option("--hazards", hazards, "hazard state indices (y*width+x)");
  gen_grid->add_flag("--no-hazards", no_hazards);
  gen_grid->add_option("--threshold-factor", threshold_factor);
  gen_grid->add_option("-o,--output", out_file)->required();
  gen_grid->add_option("--slater-out", slater_out);

  // solve
  auto* solve = app.add_subcommand("solve", "Run a solver from a config file");
  solve->require_subcommand(1);
  std::string config_file;
  for (const char* name : {"dual", "bisect", "standard"}) {
    auto* sub = solve->add_subcommand(name);
    sub->add_option("-c,--config", config_file, "experiment config JSON")->required();
  }

  // oracle
  auto* oracle = app.add_subcommand("oracle", "Run an independent oracle on a CMDP file");
  oracle->require_subcommand(1);
  std::string oracle_file;
  double tau = 0.1, resolution = 1e-3, tol = 1e-12;
  auto* oracle_lp = oracle->add_subcommand("lp", "Occupancy-measure linear program");
  oracle_lp->add_option("file", oracle_file)->required();
  auto* oracle_grid = oracle->add_subcommand("grid", "Dual grid search");
  oracle_grid->add_option("file", oracle_file)->required();
  oracle_grid->add_option("--tau", tau);
  oracle_grid->add_option("--resolution", resolution);
  auto* oracle_svi = oracle->add_subcommand("softvi", "Soft value iteration");
  oracle_svi->add_option("file", oracle_file)->required();
  oracle_svi->add_option("--tau", tau);
  oracle_svi->add_option("--tol", tol);

  // check-invariants
  auto* check = app.add_subcommand("check-invariants", "Run property sweeps");
  std::string suite = "all";
  std::uint64_t check_seed = 7;
  check->add_option("--suite", suite, "model|npg|dual|oracles|quick|all");
  check->add_option("--seed", check_seed);

  // fit-rate
  auto* fit = app.add_subcommand("fit-rate", "Fit a convergence rate to a trace column");
  std::string trace_file, column, model_name = "power";
  fit->add_option("trace", trace_file)->required();
  fit->add_option("--column", column)->required();
  fit->add_option("--model", model_name, "power|linear-log");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*validate) return cmd_validate(validate_file);

    if (*gen_random) {
      write_instance(gen_random_cmdp(seed, states, actions, constraints, gamma, threshold_factor),
                     out_file, slater_out);
      return 0;
    }
    if (gen->get_subcommands().size() == 1 && *gen_grid) {
      std::optional<std::vector<int>> hz;
      if (no_hazards)
        hz = std::vector<int>{};
      else if (!hazards.empty())
        hz = hazards;
      write_instance(gen_gridworld(width, height, gamma, hz, threshold_factor), out_file,
                     slater_out);
      return 0;
    }

    if (*solve) {
      ExperimentConfig config = load_experiment_config(config_file);
      const std::string chosen = solve->get_subcommands().front()->get_name();
      const std::string solver = chosen == "dual"      ? "dual-descent"
                                 : chosen == "bisect"  ? "bisection"
                                                       : "standard-cmdp";
      if (!config.solver.empty() && config.solver != solver)
        throw std::runtime_error("config selects solver '" + config.solver +
                                 "' but the subcommand asks for '" + solver + "'");
      config.solver = solver;
      if (solver == "dual-descent" && config.step_size_override)
        std::cerr << "warning: overriding the step size 1/ell with "
                  << *config.step_size_override << "; Theorem-rate guarantees no longer apply\n";
      const ExperimentResult result = run_experiment(config);
      std::cout << result.summary.dump(2) << "\n";
      std::cout << "artifacts in " << result.dir.string() << "\n";
      return 0;
    }

    if (*oracle) {
      const TabularCMDP model = load_cmdp(oracle_file);
      ordered_json out;
      if (*oracle_lp) {
        const OccupancyLpResult lp = occupancy_lp_solve(model);
        if (lp.status != LpStatus::Optimal) {
          std::cout << "{\"status\": \"infeasible\"}\n";
          return 2;
        }
        out["status"] = "optimal";
        out["value"] = lp.value;
        out["occupancy_sum"] = lp.occupancy.mu.sum();
      } else if (*oracle_grid) {
        const Policy uniform = Policy::uniform(model.num_states, model.num_actions);
        const Constants constants = compute_constants(model, uniform, tau);
        const DualBox box = make_dual_box(model, constants, tau);
        const GridSearchResult grid = dual_grid_search(model, tau, box, resolution, constants.ell);
        out["lambda_star"] = ordered_json::array();
        for (int i = 0; i < grid.lambda_star.size(); ++i)
          out["lambda_star"].push_back(grid.lambda_star[i]);
        out["d_star"] = grid.d_star;
        out["error_bound"] = grid.certificate.error_bound;
        out["local_curvature"] = grid.certificate.curvature;
      } else {
        const SoftViResult svi = soft_value_iteration(model, model.reward, tau, tol);
        out["value_at_rho"] = model.initial_dist.dot(svi.value);
        out["iterations"] = svi.iterations;
      }
      std::cout << out.dump(2) << "\n";
      return 0;
    }

    if (*check) {
      const auto results = run_invariant_suite(suite, check_seed);
      bool all_pass = true;
      for (const auto& r : results) {
        std::cout << (r.pass ? "[PASS] " : "[FAIL] ") << r.name << " (" << r.detail << ")\n";
        all_pass = all_pass && r.pass;
      }
      std::cout << (all_pass ? "all checks passed" : "CHECKS FAILED") << "\n";
      return all_pass ? 0 : 1;
    }

    if (*fit) {
      const auto rows = read_csv_column(trace_file, column);
      std::vector<double> iters, values;
      for (const auto& [it, val] : rows) {
        iters.push_back(it);
        values.push_back(val);
      }
      const RateFit f = fit_rate(iters, values, rate_model_from_string(model_name));
      ordered_json out;
      out["model"] = model_name;
      out["slope"] = f.slope;
      out["intercept"] = f.intercept;
      out["residual_rms"] = f.residual_rms;
      out["slope_stderr"] = f.slope_stderr;
      out["points_used"] = f.points_used;
      std::cout << out.dump(2) << "\n";
      return 0;
    }
  } catch (const InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
