#include "ercmdp/oracles.hpp"

#include "ercmdp/dual.hpp"

#include <cmath>
#include <stdexcept>

namespace ercmdp {

double truncated_rollout_value(const TabularCMDP& model, const Policy& policy,
                               const Matrix& reward, int horizon) {
  require_compatible(model, policy);
  if (horizon < 0) throw std::invalid_argument("truncated_rollout_value: horizon must be >= 0");
  const Matrix p_pi_t = policy_transition(model, policy.prob()).transpose();
  const Vector r_pi = policy_reward(policy.prob(), reward);
  Vector state_dist = model.initial_dist;
  double total = 0.0;
  double discount = 1.0;
  for (int t = 0; t < horizon; ++t) {
    total += discount * state_dist.dot(r_pi);
    state_dist = p_pi_t * state_dist;
    discount *= model.gamma;
  }
  return total;
}

namespace {

// One soft Bellman backup; returns the sup-norm change.
double soft_backup(const TabularCMDP& model, const Matrix& reward, double tau, ValueTable& v,
                   Vector& future) {
  future.noalias() = model.transition * v;
  double change = 0.0;
  for (int s = 0; s < model.num_states; ++s) {
    double m = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < model.num_actions; ++a) {
      const double q = reward(s, a) + model.gamma * future[model.sa_index(s, a)];
      if (q > m) m = q;
    }
    double acc = 0.0;
    for (int a = 0; a < model.num_actions; ++a) {
      const double q = reward(s, a) + model.gamma * future[model.sa_index(s, a)];
      acc += std::exp((q - m) / tau);
    }
    const double next = m + tau * std::log(acc);
    change = std::max(change, std::abs(next - v[s]));
    v[s] = next;
  }
  return change;
}

// Plain soft value iteration from a caller-supplied start. The stopping rule
// is the contraction criterion, so the guarantee ||V - V*|| <= tol holds for
// any warm start.
int soft_vi_from(const TabularCMDP& model, const Matrix& reward, double tau, double tol,
                 ValueTable& v) {
  Vector future(model.num_states * model.num_actions);
  if (model.gamma == 0.0) {
    soft_backup(model, reward, tau, v, future);
    return 1;
  }
  const double stop = tol * (1.0 - model.gamma) / model.gamma;
  int iters = 0;
  double change;
  do {
    change = soft_backup(model, reward, tau, v, future);
    ++iters;
  } while (change > stop && iters < 1000000);
  if (change > stop) throw std::runtime_error("soft_value_iteration failed to converge");
  return iters;
}

}  // namespace

SoftViResult soft_value_iteration(const TabularCMDP& model, const Matrix& reward, double tau,
                                  double tol) {
  if (tau <= 0.0) throw std::invalid_argument("soft_value_iteration: tau must be > 0");
  if (tol <= 0.0) throw std::invalid_argument("soft_value_iteration: tol must be > 0");
  SoftViResult result;
  result.value = ValueTable::Zero(model.num_states);
  result.iterations = soft_vi_from(model, reward, tau, tol, result.value);
  result.q = soft_q_from_value(model, reward, result.value);
  result.policy = Policy::from_logits(result.q / tau);
  return result;
}

ViResult value_iteration(const TabularCMDP& model, const Matrix& reward, double tol) {
  if (tol <= 0.0) throw std::invalid_argument("value_iteration: tol must be > 0");
  ViResult result;
  result.value = ValueTable::Zero(model.num_states);
  Vector future(model.num_states * model.num_actions);
  const double stop =
      model.gamma > 0.0 ? tol * (1.0 - model.gamma) / model.gamma
                        : std::numeric_limits<double>::infinity();
  double change;
  do {
    future.noalias() = model.transition * result.value;
    change = 0.0;
    for (int s = 0; s < model.num_states; ++s) {
      double best = -std::numeric_limits<double>::infinity();
      for (int a = 0; a < model.num_actions; ++a)
        best = std::max(best, reward(s, a) + model.gamma * future[model.sa_index(s, a)]);
      change = std::max(change, std::abs(best - result.value[s]));
      result.value[s] = best;
    }
    ++result.iterations;
  } while (change > stop && model.gamma > 0.0 && result.iterations < 1000000);

  result.policy = Matrix::Zero(model.num_states, model.num_actions);
  future.noalias() = model.transition * result.value;
  for (int s = 0; s < model.num_states; ++s) {
    int best_a = 0;
    double best = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < model.num_actions; ++a) {
      const double q = reward(s, a) + model.gamma * future[model.sa_index(s, a)];
      if (q > best) {
        best = q;
        best_a = a;
      }
    }
    result.policy(s, best_a) = 1.0;
  }
  return result;
}

namespace {

// Inner maximization for one grid point. Warm start comes from the neighbor;
// a single policy-evaluation solve for the current soft-greedy policy jumps
// close to the fixed point, then plain contraction sweeps finish under the
// usual stopping rule.
double grid_inner_value(const TabularCMDP& model, const Matrix& reward, double tau, double tol,
                        ValueTable& v) {
  Vector future = model.transition * v;
  Matrix logits(model.num_states, model.num_actions);
  for (int s = 0; s < model.num_states; ++s)
    for (int a = 0; a < model.num_actions; ++a)
      logits(s, a) = (reward(s, a) + model.gamma * future[model.sa_index(s, a)]) / tau;
  const Policy greedy = Policy::from_logits(logits);
  v = evaluate_soft_value(model, greedy, reward, tau);
  soft_vi_from(model, reward, tau, tol, v);
  return model.initial_dist.dot(v);
}

}  // namespace

GridSearchResult dual_grid_search(const TabularCMDP& model, double tau, const DualBox& box,
                                  double resolution, double smoothness_for_certificate) {
  const int n = model.num_constraints();
  if (n > 2) throw std::invalid_argument("dual_grid_search: supports at most 2 constraints");
  if (resolution <= 0.0) throw std::invalid_argument("dual_grid_search: resolution must be > 0");
  if (box.upper.size() != n) throw std::invalid_argument("dual_grid_search: box size mismatch");
  const double tol = 1e-12;

  GridSearchResult result;
  result.certificate.error_bound = smoothness_for_certificate * resolution * resolution / 2.0;

  if (n == 0) {
    const SoftViResult svi = soft_value_iteration(model, model.reward, tau, tol);
    result.lambda_star = Vector(0);
    result.d_star = model.initial_dist.dot(svi.value);
    return result;
  }

  if (n == 1) {
    const double upper = box.upper[0];
    const int points = std::max(2, static_cast<int>(std::ceil(upper / resolution)) + 1);
    const double step = upper / (points - 1);
    result.grid.resize(points);
    result.values.resize(points);
    ValueTable v = ValueTable::Zero(model.num_states);
    Matrix reward(model.num_states, model.num_actions);
    int best = 0;
    for (int j = 0; j < points; ++j) {
      const double lambda = j * step;
      reward = model.reward + lambda * model.utilities[0];
      const double d =
          grid_inner_value(model, reward, tau, tol, v) - lambda * model.thresholds[0];
      result.grid[j] = lambda;
      result.values[j] = d;
      if (d < result.values[best]) best = j;
    }
    result.lambda_star = Vector::Constant(1, result.grid[best]);
    result.d_star = result.values[best];
    const double center = result.values[best];
    const double left = result.values[best > 0 ? best - 1 : best];
    const double right =
        result.values[best + 1 < points ? best + 1 : best];
    result.certificate.left_value = left;
    result.certificate.right_value = right;
    if (best > 0 && best + 1 < points)
      result.certificate.curvature = (left - 2.0 * center + right) / (step * step);
    return result;
  }

  // n == 2: scan the product grid, warm-starting along the inner axis.
  const int p0 = std::max(2, static_cast<int>(std::ceil(box.upper[0] / resolution)) + 1);
  const int p1 = std::max(2, static_cast<int>(std::ceil(box.upper[1] / resolution)) + 1);
  const double s0 = box.upper[0] / (p0 - 1);
  const double s1 = box.upper[1] / (p1 - 1);
  Matrix values(p0, p1);
  ValueTable v_outer = ValueTable::Zero(model.num_states);
  Matrix reward(model.num_states, model.num_actions);
  int bi = 0, bj = 0;
  for (int i = 0; i < p0; ++i) {
    ValueTable v = v_outer;
    for (int j = 0; j < p1; ++j) {
      reward = model.reward + (i * s0) * model.utilities[0] + (j * s1) * model.utilities[1];
      values(i, j) = grid_inner_value(model, reward, tau, tol, v) - (i * s0) * model.thresholds[0] -
                     (j * s1) * model.thresholds[1];
      if (j == 0) v_outer = v;
      if (values(i, j) < values(bi, bj)) {
        bi = i;
        bj = j;
      }
    }
  }
  result.lambda_star = Vector(2);
  result.lambda_star << bi * s0, bj * s1;
  result.d_star = values(bi, bj);
  result.certificate.left_value = values(bi > 0 ? bi - 1 : bi, bj);
  result.certificate.right_value = values(bi + 1 < p0 ? bi + 1 : bi, bj);
  double curv = 0.0;
  if (bi > 0 && bi + 1 < p0)
    curv = std::max(curv, (values(bi - 1, bj) - 2 * values(bi, bj) + values(bi + 1, bj)) / (s0 * s0));
  if (bj > 0 && bj + 1 < p1)
    curv = std::max(curv, (values(bi, bj - 1) - 2 * values(bi, bj) + values(bi, bj + 1)) / (s1 * s1));
  result.certificate.curvature = curv;
  return result;
}

OccupancyLpResult occupancy_lp_solve(const TabularCMDP& model) {
  const int ns = model.num_states;
  const int na = model.num_actions;
  const int nv = ns * na;
  const int n = model.num_constraints();

  LpProblem lp;
  lp.c = Vector(nv);
  for (int s = 0; s < ns; ++s)
    for (int a = 0; a < na; ++a) lp.c[model.sa_index(s, a)] = -model.reward(s, a);

  lp.a_eq = Matrix::Zero(ns, nv);
  lp.b_eq = (1.0 - model.gamma) * model.initial_dist;
  for (int s2 = 0; s2 < ns; ++s2)
    for (int s = 0; s < ns; ++s)
      for (int a = 0; a < na; ++a) {
        const int idx = model.sa_index(s, a);
        lp.a_eq(s2, idx) = (s == s2 ? 1.0 : 0.0) - model.gamma * model.transition(idx, s2);
      }

  lp.a_ge = Matrix::Zero(n, nv);
  lp.b_ge = Vector(n);
  for (int i = 0; i < n; ++i) {
    for (int s = 0; s < ns; ++s)
      for (int a = 0; a < na; ++a) lp.a_ge(i, model.sa_index(s, a)) = model.utilities[i](s, a);
    lp.b_ge[i] = (1.0 - model.gamma) * model.thresholds[i];
  }

  const LpSolution sol = simplex_solve(lp);
  OccupancyLpResult result;
  result.status = sol.status;
  if (sol.status != LpStatus::Optimal) return result;

  result.occupancy.mu = Matrix(ns, na);
  for (int s = 0; s < ns; ++s)
    for (int a = 0; a < na; ++a) result.occupancy.mu(s, a) = std::max(0.0, sol.x[model.sa_index(s, a)]);
  result.policy = Matrix(ns, na);
  for (int s = 0; s < ns; ++s) {
    const double marginal = result.occupancy.mu.row(s).sum();
    if (marginal > 1e-12)
      result.policy.row(s) = result.occupancy.mu.row(s) / marginal;
    else
      result.policy.row(s).setConstant(1.0 / na);
  }
  result.value = -sol.objective / (1.0 - model.gamma);
  return result;
}

}  // namespace ercmdp
