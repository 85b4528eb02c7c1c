#include "ercmdp/model.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace ercmdp {

namespace {

Matrix row_logsumexp_normalize(const Matrix& logits) {
  Matrix out = logits;
  for (Eigen::Index s = 0; s < logits.rows(); ++s) {
    const double m = logits.row(s).maxCoeff();
    const double lse = m + std::log((logits.row(s).array() - m).exp().sum());
    out.row(s).array() -= lse;
  }
  return out;
}

}  // namespace

Policy Policy::uniform(int num_states, int num_actions) {
  if (num_states < 1 || num_actions < 1)
    throw std::invalid_argument("Policy::uniform: sizes must be positive");
  return from_logits(Matrix::Zero(num_states, num_actions));
}

Policy Policy::from_logits(const Matrix& logits) {
  if (logits.rows() < 1 || logits.cols() < 1)
    throw std::invalid_argument("Policy::from_logits: empty table");
  if (!logits.allFinite())
    throw std::invalid_argument("Policy::from_logits: logits must be finite");
  Policy p;
  p.log_prob_ = row_logsumexp_normalize(logits);
  p.prob_ = p.log_prob_.array().exp();
  return p;
}

Policy Policy::from_probs(const Matrix& probs) {
  if (probs.rows() < 1 || probs.cols() < 1)
    throw std::invalid_argument("Policy::from_probs: empty table");
  for (Eigen::Index s = 0; s < probs.rows(); ++s) {
    const double row_sum = probs.row(s).sum();
    if (std::abs(row_sum - 1.0) > 1e-10) {
      std::ostringstream msg;
      msg << "Policy::from_probs: row " << s << " sums to " << row_sum;
      throw std::invalid_argument(msg.str());
    }
    for (Eigen::Index a = 0; a < probs.cols(); ++a) {
      if (!(probs(s, a) > 0.0)) {
        std::ostringstream msg;
        msg << "Policy::from_probs: entry (" << s << "," << a << ") = " << probs(s, a)
            << " is outside the soft-max class (must be > 0)";
        throw std::invalid_argument(msg.str());
      }
    }
  }
  return from_logits(probs.array().log());
}

std::string ValidationReport::to_string() const {
  if (ok()) return "pass";
  std::ostringstream out;
  for (const auto& v : violations) out << v << "\n";
  return out.str();
}

ValidationReport validate_model(const TabularCMDP& model) {
  ValidationReport report;
  auto add = [&report](const std::string& s) { report.violations.push_back(s); };

  const int ns = model.num_states;
  const int na = model.num_actions;
  if (ns < 1 || na < 1) {
    add("num_states and num_actions must be positive");
    return report;
  }
  if (!(model.gamma >= 0.0 && model.gamma < 1.0)) {
    std::ostringstream msg;
    msg << "gamma = " << model.gamma << " outside [0,1)";
    add(msg.str());
  }
  if (model.transition.rows() != ns * na || model.transition.cols() != ns)
    add("transition tensor has wrong shape");
  if (model.reward.rows() != ns || model.reward.cols() != na)
    add("reward table has wrong shape");
  if (model.initial_dist.size() != ns) add("initial_dist has wrong length");
  const int n = model.num_constraints();
  if (static_cast<int>(model.utilities.size()) != n)
    add("utilities count does not match thresholds length");
  if (!report.ok()) return report;  // shape errors make index checks meaningless

  for (int s = 0; s < ns; ++s) {
    for (int a = 0; a < na; ++a) {
      const auto row = model.transition.row(model.sa_index(s, a));
      const double sum = row.sum();
      if (std::abs(sum - 1.0) > 1e-12) {
        std::ostringstream msg;
        msg << "transition row (" << s << "," << a << ") sums to " << sum;
        add(msg.str());
      }
      if (row.minCoeff() < 0.0) {
        std::ostringstream msg;
        msg << "transition row (" << s << "," << a << ") has a negative entry "
            << row.minCoeff();
        add(msg.str());
      }
      const double r = model.reward(s, a);
      if (!(r >= 0.0 && r <= 1.0)) {
        std::ostringstream msg;
        msg << "reward(" << s << "," << a << ") = " << r << " outside [0,1]";
        add(msg.str());
      }
    }
  }
  for (int i = 0; i < n; ++i) {
    const Matrix& g = model.utilities[i];
    if (g.rows() != ns || g.cols() != na) {
      std::ostringstream msg;
      msg << "utility " << i << " has wrong shape";
      add(msg.str());
      continue;
    }
    for (int s = 0; s < ns; ++s)
      for (int a = 0; a < na; ++a)
        if (!(g(s, a) >= 0.0 && g(s, a) <= 1.0)) {
          std::ostringstream msg;
          msg << "utility " << i << " entry (" << s << "," << a << ") = " << g(s, a)
              << " outside [0,1]";
          add(msg.str());
        }
    const double hi = 1.0 / (1.0 - model.gamma);
    if (!(model.thresholds[i] >= 0.0 && model.thresholds[i] <= hi)) {
      std::ostringstream msg;
      msg << "threshold " << i << " = " << model.thresholds[i] << " outside [0," << hi << "]";
      add(msg.str());
    }
  }
  const double rho_sum = model.initial_dist.sum();
  if (std::abs(rho_sum - 1.0) > 1e-12) {
    std::ostringstream msg;
    msg << "initial_dist sums to " << rho_sum;
    add(msg.str());
  }
  if (model.initial_dist.minCoeff() < 0.0) add("initial_dist has a negative entry");
  return report;
}

void require_compatible(const TabularCMDP& model, const Policy& policy) {
  if (policy.num_states() != model.num_states || policy.num_actions() != model.num_actions)
    throw std::invalid_argument("policy shape does not match model");
}

Matrix policy_transition(const TabularCMDP& model, const Matrix& probs) {
  Matrix p_pi(model.num_states, model.num_states);
  for (int s = 0; s < model.num_states; ++s)
    p_pi.row(s) =
        probs.row(s) * model.transition.middleRows(s * model.num_actions, model.num_actions);
  return p_pi;
}

Vector policy_reward(const Matrix& probs, const Matrix& reward) {
  return (probs.array() * reward.array()).rowwise().sum();
}

namespace {

ValueTable solve_policy_value(const TabularCMDP& model, const Matrix& probs, const Vector& r_pi) {
  const Matrix a =
      Matrix::Identity(model.num_states, model.num_states) - model.gamma * policy_transition(model, probs);
  return a.partialPivLu().solve(r_pi);
}

}  // namespace

ValueTable evaluate_value(const TabularCMDP& model, const Matrix& probs, const Matrix& reward) {
  return solve_policy_value(model, probs, policy_reward(probs, reward));
}

ValueTable evaluate_value(const TabularCMDP& model, const Policy& policy, const Matrix& reward) {
  require_compatible(model, policy);
  return evaluate_value(model, policy.prob(), reward);
}

QTable evaluate_q(const TabularCMDP& model, const Policy& policy, const Matrix& reward) {
  const ValueTable v = evaluate_value(model, policy, reward);
  return soft_q_from_value(model, reward, v);
}

QTable soft_q_from_value(const TabularCMDP& model, const Matrix& reward, const ValueTable& v) {
  const Vector future = model.transition * v;  // (S*A) vector
  QTable q(model.num_states, model.num_actions);
  for (int s = 0; s < model.num_states; ++s)
    for (int a = 0; a < model.num_actions; ++a)
      q(s, a) = reward(s, a) + model.gamma * future[model.sa_index(s, a)];
  return q;
}

VisitationDistribution discounted_visitation(const TabularCMDP& model, const Matrix& probs) {
  const Matrix a = Matrix::Identity(model.num_states, model.num_states) -
                   model.gamma * policy_transition(model, probs).transpose();
  return a.partialPivLu().solve(((1.0 - model.gamma) * model.initial_dist).eval());
}

VisitationDistribution discounted_visitation(const TabularCMDP& model, const Policy& policy) {
  require_compatible(model, policy);
  return discounted_visitation(model, policy.prob());
}

double discounted_entropy(const TabularCMDP& model, const Policy& policy) {
  require_compatible(model, policy);
  const Matrix neg_log = -policy.log_prob();
  // r_pi with reward -log pi; pi * log pi -> 0 where pi underflows to 0.
  Vector r_pi(model.num_states);
  for (int s = 0; s < model.num_states; ++s) {
    double acc = 0.0;
    for (int a = 0; a < model.num_actions; ++a) {
      const double p = policy.prob()(s, a);
      if (p > 0.0) acc += p * neg_log(s, a);
    }
    r_pi[s] = acc;
  }
  const Matrix a = Matrix::Identity(model.num_states, model.num_states) -
                   model.gamma * policy_transition(model, policy.prob());
  const ValueTable h = a.partialPivLu().solve(r_pi);
  return value_at_dist(model, h);
}

ValueTable evaluate_soft_value(const TabularCMDP& model, const Policy& policy,
                               const Matrix& reward, double tau) {
  require_compatible(model, policy);
  if (tau < 0.0) throw std::invalid_argument("evaluate_soft_value: tau must be >= 0");
  Vector r_pi(model.num_states);
  for (int s = 0; s < model.num_states; ++s) {
    double acc = 0.0;
    for (int a = 0; a < model.num_actions; ++a) {
      const double p = policy.prob()(s, a);
      if (p > 0.0) acc += p * (reward(s, a) - tau * policy.log_prob()(s, a));
    }
    r_pi[s] = acc;
  }
  return solve_policy_value(model, policy.prob(), r_pi);
}

QTable evaluate_soft_q(const TabularCMDP& model, const Policy& policy, const Matrix& reward,
                       double tau) {
  return soft_q_from_value(model, reward, evaluate_soft_value(model, policy, reward, tau));
}

Vector utility_values(const TabularCMDP& model, const Matrix& probs) {
  Vector u(model.num_constraints());
  for (int i = 0; i < model.num_constraints(); ++i)
    u[i] = value_at_dist(model, evaluate_value(model, probs, model.utilities[i]));
  return u;
}

Vector utility_values(const TabularCMDP& model, const Policy& policy) {
  require_compatible(model, policy);
  return utility_values(model, policy.prob());
}

Matrix softmax_policy_gradient(const TabularCMDP& model, const Policy& policy,
                               const Matrix& reward) {
  const ValueTable v = evaluate_value(model, policy, reward);
  const QTable q = soft_q_from_value(model, reward, v);
  const VisitationDistribution d = discounted_visitation(model, policy);
  Matrix grad(model.num_states, model.num_actions);
  for (int s = 0; s < model.num_states; ++s)
    for (int a = 0; a < model.num_actions; ++a)
      grad(s, a) = d[s] * policy.prob()(s, a) * (q(s, a) - v[s]) / (1.0 - model.gamma);
  return grad;
}

double policy_distance(const Policy& a, const Policy& b) {
  return (a.prob() - b.prob()).norm();
}

}  // namespace ercmdp
