#pragma once

#include "ercmdp/model.hpp"

#include <filesystem>

#include <json.hpp>

namespace ercmdp {

/// JSON keys: num_states, num_actions, gamma, transition [s][a][s'],
/// reward [s][a], utilities (array of [s][a] tables), thresholds, initial_dist.
nlohmann::json cmdp_to_json(const TabularCMDP& model);
TabularCMDP cmdp_from_json(const nlohmann::json& j);

/// Loads and validates; throws std::runtime_error with index-level
/// diagnostics on malformed input or any invariant violation.
TabularCMDP load_cmdp(const std::filesystem::path& path);
void save_cmdp(const TabularCMDP& model, const std::filesystem::path& path);

nlohmann::json policy_to_json(const Policy& policy);
Policy policy_from_json(const nlohmann::json& j);
Policy load_policy(const std::filesystem::path& path);
void save_policy(const Policy& policy, const std::filesystem::path& path);

}  // namespace ercmdp
