#include "ercmdp/dual.hpp"

#include <chrono>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace ercmdp {

namespace {

constexpr double kLn2 = 0.6931471805599453;

double max_violation_of(const TabularCMDP& model, const Vector& utilities) {
  double worst = 0.0;
  for (int i = 0; i < model.num_constraints(); ++i)
    worst = std::max(worst, model.thresholds[i] - utilities[i]);
  return std::max(0.0, worst);
}

// Value-error allowance |L(pi~,lambda) - D(lambda)| <= 3 gamma eps / (2 tau)
// for a certified inner log-error eps.
double value_allowance(double gamma, double tau, double cert_log_error) {
  return 1.5 * gamma * cert_log_error / tau;
}

}  // namespace

Constants compute_constants(const TabularCMDP& model, const Policy& slater_policy, double tau) {
  if (tau <= 0.0) throw std::invalid_argument("compute_constants: tau must be > 0");
  const int n = model.num_constraints();
  const int na = model.num_actions;
  const double gamma = model.gamma;

  Constants constants;
  constants.xi = utility_values(model, slater_policy) - model.thresholds;
  for (int i = 0; i < n; ++i) {
    if (!(constants.xi[i] > 0.0)) {
      std::ostringstream msg;
      msg << "compute_constants: supplied policy is not strictly feasible; slack of constraint "
          << i << " is " << constants.xi[i];
      throw std::invalid_argument(msg.str());
    }
  }
  const double min_rho = model.initial_dist.minCoeff();
  if (!(min_rho > 0.0))
    throw std::invalid_argument(
        "compute_constants: initial distribution must be interior (every rho(s) > 0)");
  constants.d_hat = (1.0 - gamma) * min_rho;
  constants.ell_c = std::sqrt(static_cast<double>(na)) / ((1.0 - gamma) * (1.0 - gamma));
  constants.c1 = std::sqrt(2.0 * (1.0 - gamma) * kLn2 / (tau * constants.d_hat));
  if (n > 0) {
    const double top = 2.0 + 2.0 * tau * std::log(static_cast<double>(na));
    constants.c2 = top / ((1.0 - gamma) * constants.xi.minCoeff());
    constants.c2_sum = 0.0;
    for (int i = 0; i < n; ++i) constants.c2_sum += top / ((1.0 - gamma) * constants.xi[i]);
    const double na_d = static_cast<double>(n) * na;
    constants.ell = 2.0 * kLn2 * (na_d + (1.0 - gamma) * (1.0 - gamma) * std::sqrt(na_d)) /
                    (tau * std::pow(1.0 - gamma, 3) * constants.d_hat);
  }
  return constants;
}

DualBox make_dual_box(const TabularCMDP& model, const Constants& constants, double tau) {
  const double top = 2.0 + 2.0 * tau * std::log(static_cast<double>(model.num_actions));
  DualBox box;
  box.upper = Vector(model.num_constraints());
  for (int i = 0; i < model.num_constraints(); ++i)
    box.upper[i] = top / ((1.0 - model.gamma) * constants.xi[i]);
  return box;
}

Vector project_dual(const Vector& lambda, const DualBox& box) {
  if (lambda.size() != box.upper.size())
    throw std::invalid_argument("project_dual: size mismatch");
  if (!lambda.allFinite()) throw std::invalid_argument("project_dual: lambda must be finite");
  Vector out(lambda.size());
  for (int i = 0; i < lambda.size(); ++i)
    out[i] = std::min(std::max(lambda[i], 0.0), box.upper[i]);
  return out;
}

double gradient_error_allowance(int n_constraints, int num_actions, double gamma,
                                double inner_log_error) {
  return std::sqrt(static_cast<double>(n_constraints)) * num_actions * inner_log_error /
         ((1.0 - gamma) * (1.0 - gamma));
}

DualEval dual_value_and_gradient(const TabularCMDP& model, const Vector& lambda, double tau,
                                 const Policy& warm_start_policy, int inner_budget,
                                 double c2_sum, std::optional<double> stop_tol) {
  NpgConfig config;
  config.tau = tau;
  config.eta = default_npg_step_size(model.gamma, tau);
  config.max_iters = inner_budget;
  config.stop_tol = stop_tol;

  auto [policy, trace] = npg_run(model, warm_start_policy, lambda, config);

  DualEval eval;
  eval.policy = std::move(policy);
  eval.inner_iters = trace.iterations();
  eval.utilities = utility_values(model, eval.policy);
  eval.gradient = eval.utilities - model.thresholds;
  eval.soft_objective =
      value_at_dist(model, evaluate_soft_value(model, eval.policy, model.reward, tau));
  eval.value = eval.soft_objective + lambda.dot(eval.gradient);
  const double q_gap =
      lagrangian_q_gap_bound(std::max(c2_sum, lambda.cwiseAbs().sum()), tau, model.num_actions,
                             model.gamma);
  eval.cert_log_error = npg_error_certificate(q_gap, tau, model.gamma, eval.inner_iters);
  return eval;
}

void SolveTrace::write_csv(std::ostream& out) const {
  out << "iter";
  for (int i = 0; i < n_constraints; ++i) out << ",lambda_" << i;
  out << ",dual_value,grad_norm,max_violation,soft_objective,inner_iters,wall_ms\n";
  char buf[64];
  for (const auto& row : rows) {
    out << row.iter;
    for (int i = 0; i < n_constraints; ++i) {
      std::snprintf(buf, sizeof(buf), ",%.17g", row.lambda[i]);
      out << buf;
    }
    std::snprintf(buf, sizeof(buf), ",%.17g", row.dual_value);
    out << buf;
    std::snprintf(buf, sizeof(buf), ",%.17g", row.grad_norm);
    out << buf;
    std::snprintf(buf, sizeof(buf), ",%.17g", row.max_violation);
    out << buf;
    std::snprintf(buf, sizeof(buf), ",%.17g", row.soft_objective);
    out << buf;
    out << "," << row.inner_iters;
    std::snprintf(buf, sizeof(buf), ",%.17g\n", row.wall_ms);
    out << buf;
  }
}

DualDescentResult accelerated_dual_descent(const TabularCMDP& model, double tau,
                                           const DualBox& box, const Constants& constants,
                                           int n1, int inner_budget, int recover_budget,
                                           const DualDescentOptions& options) {
  if (n1 < 1) throw std::invalid_argument("accelerated_dual_descent: n1 must be >= 1");
  if (inner_budget < 1 || recover_budget < 1)
    throw std::invalid_argument("accelerated_dual_descent: budgets must be >= 1");
  const int n = model.num_constraints();
  if (box.size() != n) throw std::invalid_argument("accelerated_dual_descent: box size mismatch");

  Vector lambda_curr;
  if (options.lambda0) {
    lambda_curr = project_dual(*options.lambda0, box);
  } else if (options.random_init_seed) {
    Rng rng(*options.random_init_seed);
    lambda_curr = Vector(n);
    for (int i = 0; i < n; ++i) lambda_curr[i] = rng.uniform(0.0, box.upper[i]);
  } else {
    lambda_curr = Vector::Zero(n);
  }
  Vector lambda_prev = lambda_curr;

  double ell_hat = n == 0 ? 1.0 : constants.ell;
  if (options.step_size) {
    if (!(*options.step_size > 0.0))
      throw std::invalid_argument("accelerated_dual_descent: step size must be > 0");
    ell_hat = 1.0 / *options.step_size;
  }
  if (!(ell_hat > 0.0))
    throw std::invalid_argument("accelerated_dual_descent: no usable step size");

  DualDescentResult result;
  result.trace.n_constraints = n;
  Policy warm = options.init_policy ? *options.init_policy
                                    : Policy::uniform(model.num_states, model.num_actions);

  double last_dual = std::numeric_limits<double>::infinity();
  const auto t_start = std::chrono::steady_clock::now();

  for (int t = 0; t < n1; ++t) {
    const double beta = (static_cast<double>(t) - 1.0) / (static_cast<double>(t) + 2.0);
    const Vector mu = lambda_curr + beta * (lambda_curr - lambda_prev);
    DualEval at_mu =
        dual_value_and_gradient(model, mu, tau, warm, inner_budget, constants.c2_sum);
    int inner_iters = at_mu.inner_iters;
    const double allow_mu = value_allowance(model.gamma, tau, at_mu.cert_log_error);
    const double grad_allow = gradient_error_allowance(n, model.num_actions, model.gamma,
                                                       at_mu.cert_log_error);

    Vector candidate;
    DualEval at_candidate;
    bool accepted = false;
    int guard = 0;
    do {
      const double alpha = 1.0 / ell_hat;
      candidate = project_dual(mu - alpha * at_mu.gradient, box);
      at_candidate =
          dual_value_and_gradient(model, candidate, tau, at_mu.policy, inner_budget,
                                  constants.c2_sum);
      inner_iters += at_candidate.inner_iters;
      if (!options.adaptive_backtracking) break;
      const Vector diff = candidate - mu;
      const double model_value = at_mu.value + at_mu.gradient.dot(diff) +
                                 0.5 * ell_hat * diff.squaredNorm();
      const double allowance = allow_mu +
                               value_allowance(model.gamma, tau, at_candidate.cert_log_error) +
                               grad_allow * diff.norm() + 1e-12;
      accepted = at_candidate.value <= model_value + allowance;
      if (!accepted) {
        ell_hat *= 2.0;
        lambda_prev = lambda_curr;  // restart momentum after a rejected step
        ++result.backtrack_count;
      }
    } while (!accepted && ++guard < 60);

    warm = at_candidate.policy;

    SolveTraceRow row;
    row.iter = t + 1;
    row.lambda = candidate;
    row.dual_value = at_candidate.value;
    row.grad_norm = at_candidate.gradient.norm();
    row.max_violation = max_violation_of(model, at_candidate.utilities);
    row.soft_objective = at_candidate.soft_objective;
    row.inner_iters = inner_iters;
    row.wall_ms =
        options.record_timing
            ? std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t_start)
                  .count()
            : 0.0;
    const double increase_allow =
        value_allowance(model.gamma, tau, at_candidate.cert_log_error) +
        value_allowance(model.gamma, tau, at_mu.cert_log_error) + 1e-12;
    if (row.dual_value > last_dual + increase_allow) ++result.trace.dual_increase_flags;
    last_dual = row.dual_value;
    result.trace.rows.push_back(std::move(row));

    lambda_prev = lambda_curr;
    lambda_curr = candidate;
    result.outer_iters = t + 1;

    if (options.stop_grad_tol) {
      const double alpha = 1.0 / ell_hat;
      const Vector residual =
          (lambda_curr - project_dual(lambda_curr - alpha * at_candidate.gradient, box)) / alpha;
      if (residual.norm() <= *options.stop_grad_tol) break;
    }
  }

  DualEval final_eval =
      dual_value_and_gradient(model, lambda_curr, tau, warm, recover_budget, constants.c2_sum);
  result.policy = final_eval.policy;
  result.lambda = lambda_curr;
  result.dual_value = final_eval.value;
  result.gradient = final_eval.gradient;
  result.utilities = final_eval.utilities;
  result.cert_log_error = final_eval.cert_log_error;
  result.soft_objective = final_eval.soft_objective;
  result.alpha_used = 1.0 / ell_hat;
  return result;
}

double estimate_dual_smoothness(const TabularCMDP& model, double tau, const DualBox& box,
                                int samples, int inner_budget, std::uint64_t seed) {
  const int n = box.size();
  if (n == 0) return 1e-6;
  Rng rng(seed);
  std::vector<Vector> points;
  points.push_back(Vector::Zero(n));
  points.push_back(box.upper);
  for (int k = 2; k < std::max(2, samples); ++k) {
    Vector p(n);
    for (int i = 0; i < n; ++i) p[i] = rng.uniform(0.0, box.upper[i]);
    points.push_back(std::move(p));
  }
  const Policy uniform = Policy::uniform(model.num_states, model.num_actions);
  std::vector<Vector> grads;
  grads.reserve(points.size());
  for (const auto& p : points)
    grads.push_back(dual_value_and_gradient(model, p, tau, uniform, inner_budget, 0.0).gradient);
  double ratio = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i)
    for (std::size_t j = i + 1; j < points.size(); ++j) {
      const double dist = (points[i] - points[j]).norm();
      if (dist > 1e-12) ratio = std::max(ratio, (grads[i] - grads[j]).norm() / dist);
    }
  return std::max(2.0 * ratio, 1e-6);
}

StandardSolveReport standard_cmdp_solve(const TabularCMDP& model, double epsilon,
                                        const Policy& slater_policy,
                                        const StandardSolveOptions& options) {
  if (epsilon <= 0.0) throw std::invalid_argument("standard_cmdp_solve: epsilon must be > 0");
  StandardSolveReport report;

  if (model.num_actions == 1) {
    // The soft-max class contains a single policy.
    report.policy = Policy::uniform(model.num_states, 1);
    report.lambda = Vector::Zero(model.num_constraints());
    report.value = value_at_dist(model, evaluate_value(model, report.policy, model.reward));
    report.utilities = utility_values(model, report.policy);
    report.max_violation = max_violation_of(model, report.utilities);
    report.tau = 0.0;
    report.gap_allowance = 0.0;
    report.practical_step = false;
    return report;
  }

  const double log_a = std::log(static_cast<double>(model.num_actions));
  const double tau = (1.0 - model.gamma) * epsilon / (4.0 * log_a);
  report.tau = tau;
  report.gap_allowance = tau * log_a / (1.0 - model.gamma);
  report.constants = compute_constants(model, slater_policy, tau);
  const DualBox box = make_dual_box(model, report.constants, tau);

  const double q_gap =
      lagrangian_q_gap_bound(report.constants.c2_sum, tau, model.num_actions, model.gamma);
  const int inner_budget = npg_iteration_budget(q_gap, 1e-9, tau, model.gamma);
  const int recover_budget = npg_iteration_budget(q_gap, 1e-10, tau, model.gamma);

  DualDescentOptions run;
  run.init_policy = slater_policy;
  run.record_timing = options.record_timing;
  int outer = options.max_outer;
  if (options.theoretical_step) {
    // Corollary-sized schedule: alpha = 1/ell and T chosen so the C1 sqrt(eps0)
    // term is at most eps/2. Only tractable when ell is small.
    const double radius = box.upper.norm() + 1.0;
    const double target = epsilon /
                          (2.0 * report.constants.ell_c * report.constants.c1 *
                           std::max(report.constants.c2, 1e-300));
    outer = static_cast<int>(
        std::ceil(std::sqrt(2.0 * report.constants.ell) * radius / target));
    report.practical_step = false;
  } else {
    const double ell_hat =
        options.step_size ? 1.0 / *options.step_size
                          : estimate_dual_smoothness(model, tau, box, 4, inner_budget, 20240901);
    run.step_size = 1.0 / ell_hat;
    run.adaptive_backtracking = true;
    run.stop_grad_tol = 1e-9;
    report.practical_step = true;
  }

  DualDescentResult result = accelerated_dual_descent(model, tau, box, report.constants, outer,
                                                      inner_budget, recover_budget, run);
  report.policy = result.policy;
  report.lambda = result.lambda;
  report.value = value_at_dist(model, evaluate_value(model, report.policy, model.reward));
  report.utilities = result.utilities;
  report.max_violation = max_violation_of(model, report.utilities);
  report.alpha = result.alpha_used;
  report.outer_iters = result.outer_iters;
  report.trace = std::move(result.trace);
  return report;
}

}  // namespace ercmdp
