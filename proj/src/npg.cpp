#include "ercmdp/npg.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace ercmdp {

double default_npg_step_size(double gamma, double tau) {
  if (tau <= 0.0) throw std::invalid_argument("default_npg_step_size: tau must be > 0");
  return (1.0 - gamma) / tau;
}

namespace detail {

Matrix combined_reward(const TabularCMDP& model, const Vector& lambda) {
  if (lambda.size() != model.num_constraints())
    throw std::invalid_argument("lambda length does not match the number of constraints");
  Matrix r = model.reward;
  for (int i = 0; i < model.num_constraints(); ++i) r += lambda[i] * model.utilities[i];
  return r;
}

}  // namespace detail

Matrix lagrangian_reward(const TabularCMDP& model, const Vector& lambda) {
  if (lambda.size() > 0 && lambda.minCoeff() < 0.0)
    throw std::invalid_argument("lagrangian_reward: lambda must be nonnegative");
  return detail::combined_reward(model, lambda);
}

double lagrangian_value(const TabularCMDP& model, const Policy& policy, const Vector& lambda,
                        double tau) {
  const Matrix r_lambda = detail::combined_reward(model, lambda);
  const double v = value_at_dist(model, evaluate_soft_value(model, policy, r_lambda, tau));
  return v - lambda.dot(model.thresholds);
}

namespace {

void check_config(const TabularCMDP& model, const NpgConfig& config) {
  if (config.tau <= 0.0) throw std::invalid_argument("NpgConfig: tau must be > 0");
  const double eta_max = (1.0 - model.gamma) / config.tau;
  if (!(config.eta > 0.0 && config.eta <= eta_max * (1.0 + 1e-12)))
    throw std::invalid_argument("NpgConfig: eta must lie in (0, (1-gamma)/tau]");
}

Matrix step_logits(const TabularCMDP& model, const Policy& policy, const QTable& q,
                   const NpgConfig& config) {
  const double coef = 1.0 - config.eta * config.tau / (1.0 - model.gamma);
  return coef * policy.log_prob() + (config.eta / (1.0 - model.gamma)) * q;
}

}  // namespace

Policy npg_step(const TabularCMDP& model, const Policy& policy, const Vector& lambda,
                const NpgConfig& config) {
  require_compatible(model, policy);
  check_config(model, config);
  const Matrix r_lambda = detail::combined_reward(model, lambda);
  const QTable q = evaluate_soft_q(model, policy, r_lambda, config.tau);
  return Policy::from_logits(step_logits(model, policy, q, config));
}

std::pair<Policy, NpgTrace> npg_run(const TabularCMDP& model, const Policy& init_policy,
                                    const Vector& lambda, const NpgConfig& config,
                                    const Policy* reference) {
  require_compatible(model, init_policy);
  if (config.max_iters < 0) throw std::invalid_argument("NpgConfig: max_iters must be >= 0");
  if (config.max_iters > 0) check_config(model, config);

  NpgTrace trace;
  Policy policy = init_policy;
  const Matrix r_lambda = detail::combined_reward(model, lambda);
  double prev_value = -std::numeric_limits<double>::infinity();

  for (int t = 0; t < config.max_iters; ++t) {
    const ValueTable v = evaluate_soft_value(model, policy, r_lambda, config.tau);
    const QTable q = soft_q_from_value(model, r_lambda, v);
    const double soft_value = value_at_dist(model, v);
    if (soft_value < prev_value - 1e-12) trace.non_monotone = true;
    prev_value = soft_value;

    Policy next = Policy::from_logits(step_logits(model, policy, q, config));
    const double change = (next.log_prob() - policy.log_prob()).cwiseAbs().maxCoeff();
    const double err =
        reference ? (reference->log_prob() - next.log_prob()).cwiseAbs().maxCoeff()
                  : std::numeric_limits<double>::quiet_NaN();
    trace.records.push_back({soft_value, change, err});
    policy = std::move(next);
    if (config.stop_tol && change <= *config.stop_tol) break;
  }
  return {std::move(policy), std::move(trace)};
}

int npg_iteration_budget(double q_gap_bound, double epsilon, double tau, double gamma) {
  if (!(q_gap_bound > 0.0 && epsilon > 0.0 && tau > 0.0))
    throw std::invalid_argument("npg_iteration_budget: arguments must be positive");
  if (!(gamma >= 0.0 && gamma < 1.0))
    throw std::invalid_argument("npg_iteration_budget: gamma must lie in [0,1)");
  const double n = std::log(2.0 * q_gap_bound / (epsilon * tau)) / (1.0 - gamma);
  if (n <= 0.0) return 0;
  return static_cast<int>(std::ceil(n));
}

double lagrangian_q_gap_bound(double c2, double tau, int num_actions, double gamma) {
  return (1.0 + c2 + tau * std::log(static_cast<double>(num_actions))) / (1.0 - gamma);
}

double npg_error_certificate(double q_gap_bound, double tau, double gamma, int iters) {
  if (iters <= 0) return std::numeric_limits<double>::infinity();
  return 2.0 * q_gap_bound * std::pow(gamma, iters - 1) / tau;
}

void NpgTrace::write_csv(std::ostream& out) const {
  out << "iter,soft_value,log_change,log_err\n";
  char buf[128];
  for (std::size_t i = 0; i < records.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%.17g\n", i + 1, records[i].soft_value,
                  records[i].log_change, records[i].log_error);
    out << buf;
  }
}

}  // namespace ercmdp
