#pragma once

#include "ercmdp/model.hpp"
#include "ercmdp/simplex.hpp"

#include <vector>

namespace ercmdp {

struct DualBox;  // dual.hpp

/// Finite sum  sum_{t<horizon} gamma^t rho^T P_pi^t r_pi  by explicit
/// recursion; truncation error is at most gamma^horizon max|r| / (1-gamma).
double truncated_rollout_value(const TabularCMDP& model, const Policy& policy,
                               const Matrix& reward, int horizon);

struct SoftViResult {
  ValueTable value;  // within tol of the soft optimum in sup norm
  QTable q;
  Policy policy;     // pi*(a|s) proportional to exp(Q*(s,a)/tau)
  int iterations = 0;
};

/// Iterates the soft Bellman backup V(s) <- tau log sum_a exp((r + gamma E V)/tau)
/// until the sup-norm change is at most tol (1-gamma)/gamma, guaranteeing
/// ||V - V*||_inf <= tol. gamma = 0 is exact after one backup.
SoftViResult soft_value_iteration(const TabularCMDP& model, const Matrix& reward, double tau,
                                  double tol = 1e-12);

struct ViResult {
  ValueTable value;
  Matrix policy;  // greedy deterministic rule as a probability table
  int iterations = 0;
};

/// Ordinary (unregularized) value iteration to sup-norm accuracy tol.
ViResult value_iteration(const TabularCMDP& model, const Matrix& reward, double tol = 1e-12);

struct GridCertificate {
  double left_value = 0.0;    // D at the neighbor below the minimizer
  double right_value = 0.0;   // D at the neighbor above
  double curvature = 0.0;     // local second difference / resolution^2
  double error_bound = 0.0;   // ell * resolution^2 / 2 with the supplied ell
};

struct GridSearchResult {
  Vector lambda_star;
  double d_star = 0.0;
  GridCertificate certificate;
  // Full scan, kept for downstream slope measurements (n = 1 only).
  std::vector<double> grid;
  std::vector<double> values;
};

/// Evaluates D(lambda) on a uniform grid over the box, using soft value
/// iteration (not NPG) for the inner maximization, and returns the grid
/// minimizer with a certificate. Rejects n > 2; the grid is exponential in n.
GridSearchResult dual_grid_search(const TabularCMDP& model, double tau, const DualBox& box,
                                  double resolution, double smoothness_for_certificate = 0.0);

/// Discounted state-action occupancy; satisfies the flow constraints
/// sum_a mu(s',a) = (1-gamma) rho(s') + gamma sum_{s,a} P(s'|s,a) mu(s,a).
struct OccupancyMeasure {
  Matrix mu;  // S x A, nonnegative, sums to 1
};

struct OccupancyLpResult {
  LpStatus status = LpStatus::Infeasible;
  OccupancyMeasure occupancy;
  Matrix policy;  // mu(s,a)/sum_a mu(s,a); uniform rows where the marginal is 0
  double value = 0.0;
};

/// Ground truth for the unregularized CMDP: maximizes sum mu r over the
/// occupancy polytope with utility constraints sum mu g_i >= (1-gamma) b_i.
OccupancyLpResult occupancy_lp_solve(const TabularCMDP& model);

}  // namespace ercmdp
