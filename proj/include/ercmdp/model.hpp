#pragma once

#include "ercmdp/types.hpp"

#include <string>
#include <vector>

namespace ercmdp {

/// Tabular constrained MDP with discounted reward r, n utility functions g_i
/// with thresholds b_i, discount gamma and initial distribution rho.
///
/// The transition tensor P(s'|s,a) is stored as a (|S|*|A|) x |S| matrix with
/// row index s*|A| + a, which keeps policy evaluation a plain mat-vec.
struct TabularCMDP {
  int num_states = 0;
  int num_actions = 0;
  Matrix transition;             // (S*A) x S
  Matrix reward;                 // S x A, entries in [0,1]
  std::vector<Matrix> utilities; // n tables, S x A, entries in [0,1]
  Vector thresholds;             // length n, entries in [0, 1/(1-gamma)]
  double gamma = 0.0;
  Vector initial_dist;           // length S

  int num_constraints() const { return static_cast<int>(thresholds.size()); }
  int sa_index(int s, int a) const { return s * num_actions + a; }
};

/// Row-stochastic decision rule over the soft-max class: every probability is
/// strictly positive, stored in log space so multiplicative updates at small
/// regularization weights do not underflow.
class Policy {
 public:
  Policy() = default;

  static Policy uniform(int num_states, int num_actions);

  /// Normalizes arbitrary finite logits row-wise via log-sum-exp.
  static Policy from_logits(const Matrix& logits);

  /// Requires strictly positive rows summing to 1 within 1e-10.
  static Policy from_probs(const Matrix& probs);

  int num_states() const { return static_cast<int>(log_prob_.rows()); }
  int num_actions() const { return static_cast<int>(log_prob_.cols()); }
  const Matrix& log_prob() const { return log_prob_; }
  const Matrix& prob() const { return prob_; }

 private:
  Matrix log_prob_;  // S x A, rows log-sum-exp normalized
  Matrix prob_;      // exp(log_prob_), materialized once at construction
};

struct ValidationReport {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
  std::string to_string() const;
};

/// Checks every model invariant (row-stochastic transitions, ranges of r, g,
/// b, rho a distribution) and reports each violation with indices and the
/// offending residual. Never throws.
ValidationReport validate_model(const TabularCMDP& model);

/// Throws std::invalid_argument when the policy shape does not match the model.
void require_compatible(const TabularCMDP& model, const Policy& policy);

/// State-to-state kernel P_pi(s,s') = sum_a pi(a|s) P(s'|s,a).
Matrix policy_transition(const TabularCMDP& model, const Matrix& probs);

/// Per-state expected reward r_pi(s) = sum_a pi(a|s) reward(s,a).
Vector policy_reward(const Matrix& probs, const Matrix& reward);

/// Unique solution of V = r_pi + gamma P_pi V by a dense LU solve.
/// The overload on a raw probability table tolerates zero probabilities
/// (used for policies recovered from occupancy measures).
ValueTable evaluate_value(const TabularCMDP& model, const Matrix& probs, const Matrix& reward);
ValueTable evaluate_value(const TabularCMDP& model, const Policy& policy, const Matrix& reward);

/// Q(s,a) = reward(s,a) + gamma E_{s'}[V(s')] with V from evaluate_value.
QTable evaluate_q(const TabularCMDP& model, const Policy& policy, const Matrix& reward);

/// d^T = (1-gamma) rho^T (I - gamma P_pi)^{-1}; entries sum to 1.
VisitationDistribution discounted_visitation(const TabularCMDP& model, const Matrix& probs);
VisitationDistribution discounted_visitation(const TabularCMDP& model, const Policy& policy);

/// Discounted entropy H(rho, pi): the value of the per-pair reward
/// -log pi(a|s) at rho. Lies in [0, log|A|/(1-gamma)].
double discounted_entropy(const TabularCMDP& model, const Policy& policy);

/// Entropy-regularized value: fixed point of
///   V(s) = sum_a pi(a|s) [reward(s,a) - tau log pi(a|s) + gamma E V],
/// equal to evaluate_value(reward) plus tau times the state-wise entropy.
ValueTable evaluate_soft_value(const TabularCMDP& model, const Policy& policy,
                               const Matrix& reward, double tau);

/// Q_tau(s,a) = reward(s,a) + gamma E_{s'}[V_tau(s')].
QTable evaluate_soft_q(const TabularCMDP& model, const Policy& policy,
                       const Matrix& reward, double tau);

/// Soft Q from an already computed soft value table (single Bellman backup).
QTable soft_q_from_value(const TabularCMDP& model, const Matrix& reward, const ValueTable& v);

/// Discounted utilities U_{g_i}(rho), one entry per constraint.
Vector utility_values(const TabularCMDP& model, const Matrix& probs);
Vector utility_values(const TabularCMDP& model, const Policy& policy);

/// Soft-max parameterization gradient of the unregularized value:
/// grad(s,a) = d_rho(s) pi(a|s) A(s,a) / (1-gamma).
Matrix softmax_policy_gradient(const TabularCMDP& model, const Policy& policy,
                               const Matrix& reward);

/// Policy distance used throughout: Frobenius norm of the probability tables.
double policy_distance(const Policy& a, const Policy& b);

/// Scalar value at the initial distribution.
inline double value_at_dist(const TabularCMDP& model, const ValueTable& v) {
  return model.initial_dist.dot(v);
}

}  // namespace ercmdp
