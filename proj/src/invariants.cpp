#include "ercmdp/invariants.hpp"

#include "ercmdp/dual.hpp"
#include "ercmdp/gen.hpp"
#include "ercmdp/npg.hpp"
#include "ercmdp/oracles.hpp"

#include <cmath>
#include <functional>
#include <sstream>

namespace ercmdp {

namespace {

constexpr double kLn2 = 0.6931471805599453;

Policy random_policy(Rng& rng, int ns, int na, double scale = 2.0) {
  Matrix logits(ns, na);
  for (int s = 0; s < ns; ++s)
    for (int a = 0; a < na; ++a) logits(s, a) = rng.uniform(-scale, scale);
  return Policy::from_logits(logits);
}

class Checker {
 public:
  explicit Checker(std::uint64_t seed) : rng_(seed) {}

  void check(const std::string& name, double worst, double tol) {
    std::ostringstream detail;
    detail << "worst residual " << worst << " vs tol " << tol;
    results_.push_back({name, worst <= tol, detail.str()});
  }

  void record(const std::string& name, bool pass, const std::string& detail) {
    results_.push_back({name, pass, detail});
  }

  Rng& rng() { return rng_; }
  std::vector<CheckResult> take() { return std::move(results_); }

 private:
  Rng rng_;
  std::vector<CheckResult> results_;
};

void model_suite(Checker& c, int instances) {
  double bellman = 0, soft_bellman = 0, bounds = 0, visit = 0, perf = 0, lips = 0, kl = 0;
  double grad_soft = 0, grad_direct = 0, two_path = 0;
  Rng& rng = c.rng();
  for (int k = 0; k < instances; ++k) {
    const int ns = 3 + static_cast<int>(rng.raw() % 4);
    const int na = 2 + static_cast<int>(rng.raw() % 3);
    const auto inst = gen_random_cmdp(rng.raw(), ns, na, 2, 0.9);
    const TabularCMDP& m = inst.model;
    const Policy pi = random_policy(rng, ns, na);
    const double tau = 0.3;

    const ValueTable v = evaluate_value(m, pi, m.reward);
    const QTable q = evaluate_q(m, pi, m.reward);
    for (int s = 0; s < ns; ++s)
      bellman = std::max(bellman, std::abs(v[s] - pi.prob().row(s).dot(q.row(s))));

    const ValueTable vt = evaluate_soft_value(m, pi, m.reward, tau);
    const QTable qt = evaluate_soft_q(m, pi, m.reward, tau);
    for (int s = 0; s < ns; ++s) {
      double acc = 0;
      for (int a = 0; a < na; ++a)
        acc += pi.prob()(s, a) * (qt(s, a) - tau * pi.log_prob()(s, a));
      soft_bellman = std::max(soft_bellman, std::abs(vt[s] - acc));
    }

    const double vr = value_at_dist(m, v);
    const double h = discounted_entropy(m, pi);
    const double hi = 1.0 / (1.0 - m.gamma);
    bounds = std::max({bounds, -vr, vr - hi, -h, h - std::log(double(na)) * hi});

    const VisitationDistribution d = discounted_visitation(m, pi);
    visit = std::max(visit, std::abs(d.sum() - 1.0));
    for (int s = 0; s < ns; ++s)
      visit = std::max(visit, (1.0 - m.gamma) * m.initial_dist[s] - d[s]);

    const Policy pi2 = random_policy(rng, ns, na);
    const ValueTable v2 = evaluate_value(m, pi2, m.reward);
    const QTable q2 = evaluate_q(m, pi2, m.reward);
    double rhs = 0;
    for (int s = 0; s < ns; ++s)
      rhs += d[s] * (pi2.prob().row(s) - pi.prob().row(s)).dot(q2.row(s));
    rhs /= (1.0 - m.gamma);
    perf = std::max(perf, std::abs(value_at_dist(m, v2) - vr - rhs));

    const double ell_c = std::sqrt(double(na)) / std::pow(1.0 - m.gamma, 2);
    lips = std::max(lips, std::abs(value_at_dist(m, v2) - vr) -
                              ell_c * policy_distance(pi, pi2));

    for (int rep = 0; rep < 5; ++rep) {
      Vector p(na), qd(na);
      for (int a = 0; a < na; ++a) {
        p[a] = 0.05 + rng.uniform();
        qd[a] = 0.05 + rng.uniform();
      }
      p /= p.sum();
      qd /= qd.sum();
      double div = 0;
      for (int a = 0; a < na; ++a) div += p[a] * std::log(p[a] / qd[a]);
      const double l1 = (p - qd).cwiseAbs().sum();
      kl = std::max(kl, l1 * l1 / (2.0 * kLn2) - div);
    }

    // Soft-max parameterization gradient against central differences.
    const Matrix analytic = softmax_policy_gradient(m, pi, m.reward);
    const double step = 1e-5;
    for (int s = 0; s < ns && s < 2; ++s)
      for (int a = 0; a < na; ++a) {
        Matrix theta = pi.log_prob();
        theta(s, a) += step;
        const double up = value_at_dist(m, evaluate_value(m, Policy::from_logits(theta), m.reward));
        theta(s, a) -= 2 * step;
        const double dn = value_at_dist(m, evaluate_value(m, Policy::from_logits(theta), m.reward));
        grad_soft = std::max(grad_soft, std::abs((up - dn) / (2 * step) - analytic(s, a)));
      }

    // Direct-parameterization gradient along renormalized rows.
    const QTable q_pi = evaluate_q(m, pi, m.reward);
    for (int s = 0; s < ns && s < 2; ++s)
      for (int a = 0; a < na; ++a) {
        auto perturbed = [&](double eps) {
          Matrix probs = pi.prob();
          probs(s, a) += eps;
          probs.row(s) /= probs.row(s).sum();
          return value_at_dist(m, evaluate_value(m, probs, m.reward));
        };
        const double fd = (perturbed(step) - perturbed(-step)) / (2 * step);
        double directional = 0;  // direction d p_j = delta_{ja} - p_j
        for (int a2 = 0; a2 < na; ++a2) {
          const double dir = (a2 == a ? 1.0 : 0.0) - pi.prob()(s, a2);
          directional += d[s] * q_pi(s, a2) / (1.0 - m.gamma) * dir;
        }
        grad_direct = std::max(grad_direct, std::abs(fd - directional));
      }

    two_path = std::max(two_path, std::abs(value_at_dist(m, vt) - (vr + tau * h)));
  }
  c.check("bellman-consistency", bellman, 1e-10);
  c.check("soft-bellman-consistency", soft_bellman, 1e-10);
  c.check("value-entropy-bounds", bounds, 1e-9);
  c.check("visitation-distribution", visit, 1e-10);
  c.check("performance-difference", perf, 1e-8);
  c.check("value-lipschitz", lips, 1e-9);
  c.check("kl-l1-bound", kl, 1e-12);
  c.check("softmax-gradient-fd", grad_soft, 1e-6);
  c.check("direct-gradient-fd", grad_direct, 1e-6);
  c.check("soft-value-two-paths", two_path, 1e-10);
}

void npg_suite(Checker& c, int instances) {
  double rows = 0, conv = 0, fixed_pt = 0, rate = 0;
  Rng& rng = c.rng();
  for (int k = 0; k < instances; ++k) {
    const auto inst = gen_random_cmdp(rng.raw(), 5, 3, 1, 0.9);
    const TabularCMDP& m = inst.model;
    const double tau = 0.1;
    const SoftViResult opt = soft_value_iteration(m, m.reward, tau, 1e-13);

    NpgConfig config;
    config.tau = tau;
    config.eta = default_npg_step_size(m.gamma, tau);
    const QTable q0 = evaluate_soft_q(m, Policy::uniform(5, 3), m.reward, tau);
    const double q_gap = (opt.q - q0).cwiseAbs().maxCoeff();
    config.max_iters = npg_iteration_budget(std::max(q_gap, 1e-3), 1e-9, tau, m.gamma);
    const auto [pi, trace] =
        npg_run(m, Policy::uniform(5, 3), Vector::Zero(1), config, &opt.policy);

    rows = std::max(rows, (pi.prob().rowwise().sum().array() - 1.0).abs().maxCoeff());
    conv = std::max(conv, (pi.log_prob() - opt.policy.log_prob()).cwiseAbs().maxCoeff());

    const QTable qf = evaluate_soft_q(m, pi, m.reward, tau);
    const ValueTable vf = evaluate_soft_value(m, pi, m.reward, tau);
    for (int s = 0; s < 5; ++s)
      for (int a = 0; a < 3; ++a)
        fixed_pt = std::max(fixed_pt,
                            std::abs(pi.log_prob()(s, a) - (qf(s, a) - vf[s]) / tau));

    for (std::size_t t = 1; t + 1 < trace.records.size(); ++t) {
      const double e0 = trace.records[t].log_error;
      const double e1 = trace.records[t + 1].log_error;
      if (e0 > 1e-10) rate = std::max(rate, e1 - m.gamma * e0 * 1.05);
    }
  }
  c.check("npg-rows-stochastic", rows, 1e-10);
  c.check("npg-convergence-to-oracle", conv, 1e-8);
  c.check("npg-fixed-point", fixed_pt, 1e-8);
  c.check("npg-linear-rate", rate, 0.0);
}

void dual_suite(Checker& c, int instances) {
  double convexity = 0, smooth = 0, weak = 0, quad = 0, grad_err = 0;
  Rng& rng = c.rng();
  for (int k = 0; k < instances; ++k) {
    const auto inst = gen_random_cmdp(rng.raw(), 4, 3, 1, 0.9);
    const TabularCMDP& m = inst.model;
    const double tau = 0.2;
    const Constants constants = compute_constants(m, inst.slater, tau);
    const DualBox box = make_dual_box(m, constants, tau);
    const double q_gap = lagrangian_q_gap_bound(constants.c2_sum, tau, 3, m.gamma);
    const int budget = npg_iteration_budget(q_gap, 1e-10, tau, m.gamma);
    const Policy uniform = Policy::uniform(4, 3);
    auto eval = [&](const Vector& lam, int mult) {
      return dual_value_and_gradient(m, lam, tau, uniform, budget * mult, constants.c2_sum);
    };

    for (int rep = 0; rep < 10; ++rep) {
      Vector l1(1), l2(1);
      l1[0] = rng.uniform(0.0, box.upper[0]);
      l2[0] = rng.uniform(0.0, box.upper[0]);
      const DualEval e1 = eval(l1, 1);
      const DualEval e2 = eval(l2, 1);
      const DualEval em = eval(((l1 + l2) / 2).eval(), 1);
      const double val_allow = 3.0 * 1.5 * m.gamma * e1.cert_log_error / tau;
      convexity = std::max(convexity,
                           em.value - 0.5 * (e1.value + e2.value) - val_allow);
      const double dist = std::abs(l1[0] - l2[0]);
      if (dist > 1e-8) {
        const double allow = 2.0 * gradient_error_allowance(1, 3, m.gamma, e1.cert_log_error) / dist;
        smooth = std::max(smooth, (e1.gradient - e2.gradient).norm() / dist -
                                      constants.ell - allow);
      }
      const double v_slater =
          value_at_dist(m, evaluate_soft_value(m, inst.slater, m.reward, tau));
      weak = std::max(weak, v_slater - e1.value - val_allow);

      // Quadratic lower bound at the converged maximizer.
      const Policy pi_rand = random_policy(rng, 4, 3);
      const double l_at = lagrangian_value(m, pi_rand, l1, tau);
      const double l_best = lagrangian_value(m, e1.policy, l1, tau);
      const double coef = tau * constants.d_hat / (2.0 * (1.0 - m.gamma) * kLn2);
      quad = std::max(quad, coef * std::pow(policy_distance(pi_rand, e1.policy), 2) -
                                (l_best - l_at) - 1e-10);
    }

    Vector lam(1);
    lam[0] = rng.uniform(0.0, box.upper[0]);
    const DualEval coarse =
        dual_value_and_gradient(m, lam, tau, uniform, budget / 2, constants.c2_sum);
    const DualEval fine = eval(lam, 10);
    const double allowance =
        gradient_error_allowance(1, 3, m.gamma, coarse.cert_log_error);
    grad_err = std::max(grad_err, (coarse.gradient - fine.gradient).norm() - allowance);
  }
  c.check("dual-midpoint-convexity", convexity, 1e-9);
  c.check("dual-smoothness-ratio", smooth, 0.0);
  c.check("weak-duality", weak, 1e-9);
  c.check("quadratic-lower-bound", quad, 0.0);
  c.check("gradient-estimator-error", grad_err, 0.0);
}

void oracle_suite(Checker& c, int instances) {
  double flow = 0, recover = 0, lp_vs_vi = 0, sandwich = 0, rollout = 0;
  Rng& rng = c.rng();
  for (int k = 0; k < instances; ++k) {
    const auto inst = gen_random_cmdp(rng.raw(), 4, 3, 1, 0.85);
    const TabularCMDP& m = inst.model;

    const OccupancyLpResult lp = occupancy_lp_solve(m);
    c.record("lp-feasible", lp.status == LpStatus::Optimal, "generated instances are feasible");
    if (lp.status == LpStatus::Optimal) {
      for (int s2 = 0; s2 < m.num_states; ++s2) {
        double lhs = lp.occupancy.mu.row(s2).sum();
        double rhs = (1.0 - m.gamma) * m.initial_dist[s2];
        for (int s = 0; s < m.num_states; ++s)
          for (int a = 0; a < m.num_actions; ++a)
            rhs += m.gamma * m.transition(m.sa_index(s, a), s2) * lp.occupancy.mu(s, a);
        flow = std::max(flow, std::abs(lhs - rhs));
      }
      const double re = value_at_dist(m, evaluate_value(m, lp.policy, m.reward));
      recover = std::max(recover, std::abs(re - lp.value));
    }

    TabularCMDP unconstrained = m;
    unconstrained.thresholds.setZero();
    const OccupancyLpResult lp_u = occupancy_lp_solve(unconstrained);
    const ViResult vi = value_iteration(m, m.reward, 1e-12);
    lp_vs_vi = std::max(lp_vs_vi, std::abs(lp_u.value - value_at_dist(m, vi.value)));

    const double tau = 0.1;
    const SoftViResult svi = soft_value_iteration(m, m.reward, tau, 1e-12);
    const double v_soft_pol = value_at_dist(m, evaluate_value(m, svi.policy, m.reward));
    const double v_star = value_at_dist(m, vi.value);
    sandwich = std::max({sandwich, v_soft_pol - v_star,
                         v_star - v_soft_pol - tau * std::log(3.0) / (1.0 - m.gamma)});

    const Policy pi = random_policy(rng, 4, 3);
    const double trunc = truncated_rollout_value(m, pi, m.reward, 400);
    const double exact = value_at_dist(m, evaluate_value(m, pi, m.reward));
    const double bound = std::pow(m.gamma, 400) / (1.0 - m.gamma);
    rollout = std::max(rollout, std::abs(trunc - exact) - bound);
  }
  c.check("lp-flow-constraints", flow, 1e-8);
  c.check("lp-value-recovery", recover, 1e-8);
  c.check("lp-matches-value-iteration", lp_vs_vi, 1e-8);
  c.check("sandwich-bound", sandwich, 1e-9);
  c.check("rollout-truncation-bound", rollout, 1e-12);
}

}  // namespace

std::vector<CheckResult> run_invariant_suite(const std::string& suite, std::uint64_t seed) {
  Checker c(seed);
  if (suite == "model" || suite == "all")
    model_suite(c, 8);
  if (suite == "npg" || suite == "all")
    npg_suite(c, 4);
  if (suite == "dual" || suite == "all")
    dual_suite(c, 3);
  if (suite == "oracles" || suite == "all")
    oracle_suite(c, 5);
  if (suite == "quick") {
    model_suite(c, 2);
    oracle_suite(c, 1);
  }
  auto results = c.take();
  if (results.empty())
    throw std::invalid_argument("unknown suite '" + suite +
                                "' (use model, npg, dual, oracles, quick or all)");
  return results;
}

}  // namespace ercmdp
