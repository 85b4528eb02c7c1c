#pragma once

#include "ercmdp/model.hpp"

#include <optional>
#include <ostream>
#include <utility>
#include <vector>

namespace ercmdp {

/// The paper's fastest admissible step-size (1-gamma)/tau.
double default_npg_step_size(double gamma, double tau);

struct NpgConfig {
  double tau = 0.0;       // regularization weight, > 0
  double eta = 0.0;       // step-size in (0, (1-gamma)/tau]
  int max_iters = 0;
  std::optional<double> stop_tol;  // optional sup-norm exit on log-policy change
};

struct NpgIterRecord {
  double soft_value;   // V_{lambda,tau}^{pi_t}(rho)
  double log_change;   // sup-norm change of the log-policy produced this step
  double log_error;    // ||log pi* - log pi_t||_inf when a reference is given, else NaN
};

struct NpgTrace {
  std::vector<NpgIterRecord> records;
  // Set when the soft objective decreased by more than 1e-12 between
  // iterations; reported, never asserted.
  bool non_monotone = false;
  int iterations() const { return static_cast<int>(records.size()); }
  void write_csv(std::ostream& out) const;
};

/// r_lambda(s,a) = r(s,a) + sum_i lambda_i g_i(s,a). Rejects negative lambda.
Matrix lagrangian_reward(const TabularCMDP& model, const Vector& lambda);

/// L(pi, lambda) = V_tau^pi(rho) + lambda^T (U_g^pi(rho) - b).
double lagrangian_value(const TabularCMDP& model, const Policy& policy, const Vector& lambda,
                        double tau);

/// One natural-policy-gradient update under the soft-max class:
///   log pi'(a|s) = (1 - eta tau/(1-gamma)) log pi(a|s)
///                + (eta/(1-gamma)) Q_{lambda,tau}^pi(s,a) - log Z(s).
Policy npg_step(const TabularCMDP& model, const Policy& policy, const Vector& lambda,
                const NpgConfig& config);

/// Runs npg_step for config.max_iters iterations or until the stop tolerance
/// is met. When `reference` is given, the trace records the sup-norm
/// log-policy distance to it per iterate.
std::pair<Policy, NpgTrace> npg_run(const TabularCMDP& model, const Policy& init_policy,
                                    const Vector& lambda, const NpgConfig& config,
                                    const Policy* reference = nullptr);

/// Iteration count ceil((1/(1-gamma)) log(2 q_gap_bound / (epsilon tau))),
/// clamped below at 0. All arguments must be positive (gamma in [0,1)).
int npg_iteration_budget(double q_gap_bound, double epsilon, double tau, double gamma);

/// Computable bound on ||Q*_lambda - Q^pi_lambda||_inf over the multiplier
/// box: (1 + c2 + tau log|A|) / (1-gamma).
double lagrangian_q_gap_bound(double c2, double tau, int num_actions, double gamma);

/// Log-policy error guaranteed after `iters` update steps from any start:
/// 2 q_gap_bound gamma^{iters-1} / tau (infinite for iters == 0).
double npg_error_certificate(double q_gap_bound, double tau, double gamma, int iters);

namespace detail {
/// Reward r + lambda^T g without the sign check; the accelerated outer loop
/// evaluates the dual at extrapolation points that may dip below zero.
Matrix combined_reward(const TabularCMDP& model, const Vector& lambda);
}  // namespace detail

}  // namespace ercmdp
