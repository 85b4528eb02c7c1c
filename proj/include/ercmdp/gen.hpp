#pragma once

#include "ercmdp/model.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace ercmdp {

struct GeneratedInstance {
  TabularCMDP model;
  Policy slater;  // certified strictly feasible policy
  Vector slack;   // U_g(slater) - b, strictly positive by construction
};

/// Random instance with strictly positive transition rows, uniform rho (so
/// the visitation floor is (1-gamma)/|S|), rewards and utilities in [0,1],
/// and thresholds b_i = threshold_factor * U_{g_i}(uniform), making the
/// uniform policy a certified Slater point.
GeneratedInstance gen_random_cmdp(std::uint64_t seed, int num_states, int num_actions,
                                  int n_constraints, double gamma,
                                  double threshold_factor = 0.9);

/// Re-thresholds a single-constraint instance so the constraint is active:
/// b is placed between the utility of the unconstrained tau-optimal policy
/// and that of a utility-maximizing policy, which becomes the Slater point.
/// Throws when the utility range is too flat for an active constraint.
GeneratedInstance make_constraint_active(const TabularCMDP& model, double tau,
                                         double share = 0.5);

/// Deterministic-intent gridworld with slip noise: 4 actions, absorbing goal
/// in the far corner paying reward 1, safety utility 1 on safe cells and 0 on
/// hazard cells. The Slater point is a smoothed shortest-path policy that
/// detours around hazards; the threshold is set to a fraction of its utility.
/// hazard_cells are state indices (y*width + x); by default one hazard is
/// placed near the center when the grid is at least 3x3.
GeneratedInstance gen_gridworld(int width, int height, double gamma,
                                std::optional<std::vector<int>> hazard_cells = {},
                                double threshold_factor = 0.9);

}  // namespace ercmdp
