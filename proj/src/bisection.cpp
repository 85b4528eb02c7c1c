#include "ercmdp/bisection.hpp"

#include <cmath>
#include <stdexcept>

namespace ercmdp {

GradSubResult grad_sub(const TabularCMDP& model, double lambda, const Policy& warm_policy,
                       double tau, int inner_budget) {
  if (model.num_constraints() != 1)
    throw std::invalid_argument("grad_sub: requires exactly one constraint");
  if (lambda < 0.0) throw std::invalid_argument("grad_sub: lambda must be nonnegative");
  const DualEval eval = dual_value_and_gradient(model, Vector::Constant(1, lambda), tau,
                                                warm_policy, inner_budget);
  return {eval.gradient[0], eval.policy, eval.inner_iters, eval.cert_log_error};
}

void BisectionResult::write_csv(std::ostream& out) const {
  out << "iter,p,q,midpoint,grad_estimate,inner_iters\n";
  char buf[160];
  for (const auto& row : rows) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g,%d\n", row.iter, row.p, row.q,
                  row.midpoint, row.grad_estimate, row.inner_iters);
    out << buf;
  }
}

BisectionResult bisection_solve(const TabularCMDP& model, double tau,
                                const BisectionConfig& config,
                                std::optional<Policy> init_policy) {
  if (model.num_constraints() != 1)
    throw std::invalid_argument("bisection_solve: requires exactly one constraint");
  if (!(config.epsilon > 0.0)) throw std::invalid_argument("bisection_solve: epsilon must be > 0");
  if (!(config.interval_lo < config.interval_hi))
    throw std::invalid_argument("bisection_solve: interval must be nonempty");
  if (config.inner_budget_n1 < 1 || config.recover_budget_n2 < 1)
    throw std::invalid_argument("bisection_solve: budgets must be >= 1");

  BisectionResult result;
  Policy warm =
      init_policy ? *init_policy : Policy::uniform(model.num_states, model.num_actions);

  double p = config.interval_lo;
  double q = config.interval_hi;

  // Endpoint optima: by convexity the minimum sits at an endpoint whenever the
  // gradient does not change sign over the interval.
  GradSubResult at_lo = grad_sub(model, p, warm, tau, config.inner_budget_n1);
  warm = at_lo.policy;
  if (at_lo.gradient >= 0.0) {
    result.short_circuit_low = true;
    result.lambda = p;
    result.final_gradient = at_lo.gradient;
  } else {
    GradSubResult at_hi = grad_sub(model, q, warm, tau, config.inner_budget_n1);
    warm = at_hi.policy;
    if (at_hi.gradient <= 0.0) {
      result.short_circuit_high = true;
      result.lambda = q;
      result.final_gradient = at_hi.gradient;
    }
  }

  if (!result.short_circuit_low && !result.short_circuit_high) {
    double lambda = 0.5 * (p + q);
    double grad = 0.0;
    int t = 0;
    while (true) {
      lambda = 0.5 * (p + q);
      GradSubResult mid = grad_sub(model, lambda, warm, tau, config.inner_budget_n1);
      warm = mid.policy;
      grad = mid.gradient;
      result.rows.push_back({t + 1, p, q, lambda, grad, mid.inner_iters});
      ++t;
      if (std::abs(grad) < config.epsilon) break;
      if (grad >= config.epsilon)
        q = lambda;
      else
        p = lambda;
      if (q - p < 1e-300) break;  // interval exhausted; cannot occur under the budget analysis
    }
    result.lambda = lambda;
    result.final_gradient = grad;
    result.outer_iters = t;
    result.interval_lo = p;
    result.interval_hi = q;
  } else {
    result.interval_lo = result.lambda;
    result.interval_hi = result.lambda;
  }

  const GradSubResult recover =
      grad_sub(model, result.lambda, warm, tau, config.recover_budget_n2);
  result.policy = recover.policy;
  if (result.outer_iters == 0) result.final_gradient = recover.gradient;
  const double soft_obj =
      value_at_dist(model, evaluate_soft_value(model, result.policy, model.reward, tau));
  result.dual_value = soft_obj + result.lambda * recover.gradient;
  return result;
}

}  // namespace ercmdp
