#pragma once

#include "ercmdp/gen.hpp"
#include "ercmdp/model.hpp"

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>

#include <json.hpp>

namespace ercmdp {

/// Raised when a solver or oracle reports a genuinely infeasible instance
/// (CLI exit code 2), as opposed to a malformed configuration (exit code 1).
struct InfeasibleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GeneratorSpec {
  std::string kind;  // "random" | "gridworld"
  std::uint64_t seed = 0;
  int num_states = 5;
  int num_actions = 3;
  int n_constraints = 1;
  double gamma = 0.9;
  int width = 4;
  int height = 4;
  std::optional<std::vector<int>> hazards;
  double threshold_factor = 0.9;
  bool make_active = false;  // re-threshold (n = 1) so the constraint binds
};

struct ExperimentConfig {
  std::optional<std::string> instance_file;
  std::optional<GeneratorSpec> generator;
  std::string solver;  // "dual-descent" | "bisection" | "standard-cmdp"
  double tau = 0.1;
  double epsilon = 1e-3;  // bisection gradient threshold / standard-cmdp accuracy
  int n1 = 100;           // outer iterations (dual-descent, standard-cmdp max_outer)
  int n2 = 0;             // inner budget; 0 derives it from the iteration-count formula
  int n3 = 0;             // recover budget; 0 derives it
  std::optional<double> step_size_override;
  bool adaptive_backtracking = false;
  std::optional<double> stop_grad_tol;
  bool oracle_comparison = false;
  double grid_resolution = 1e-3;
  std::optional<std::string> slater_policy_file;
  std::optional<std::uint64_t> random_init_seed;
  bool record_timing = true;
  std::string output_dir;
};

ExperimentConfig experiment_config_from_json(const nlohmann::json& j);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

/// Resolves the instance named by a config: loads and validates a file, or
/// runs the generator. The Slater policy comes with generated instances or
/// from slater_policy_file; otherwise the uniform policy is tried.
GeneratedInstance resolve_instance(const ExperimentConfig& config);

struct ExperimentResult {
  std::filesystem::path dir;
  nlohmann::ordered_json summary;
};

/// Runs the configured solver, writing trace.csv, summary.json and
/// params.json (the resolved constants and budgets) into output_dir.
ExperimentResult run_experiment(const ExperimentConfig& config);

}  // namespace ercmdp
