#include "ercmdp/gen.hpp"

#include "ercmdp/oracles.hpp"

#include <cmath>
#include <queue>
#include <stdexcept>

namespace ercmdp {

GeneratedInstance gen_random_cmdp(std::uint64_t seed, int num_states, int num_actions,
                                  int n_constraints, double gamma, double threshold_factor) {
  if (num_states < 1 || num_actions < 1 || n_constraints < 0)
    throw std::invalid_argument("gen_random_cmdp: sizes must be >= 1 (constraints >= 0)");
  if (!(gamma >= 0.0 && gamma < 1.0))
    throw std::invalid_argument("gen_random_cmdp: gamma must lie in [0,1)");
  if (!(threshold_factor >= 0.0 && threshold_factor < 1.0))
    throw std::invalid_argument("gen_random_cmdp: threshold_factor must lie in [0,1)");

  Rng rng(seed);
  GeneratedInstance inst;
  TabularCMDP& m = inst.model;
  m.num_states = num_states;
  m.num_actions = num_actions;
  m.gamma = gamma;
  m.transition.resize(num_states * num_actions, num_states);
  for (int s = 0; s < num_states; ++s)
    for (int a = 0; a < num_actions; ++a) {
      const int row = m.sa_index(s, a);
      double sum = 0.0;
      for (int s2 = 0; s2 < num_states; ++s2) {
        // Bounded away from zero so every policy keeps the chain mixing.
        const double w = 0.1 + rng.uniform();
        m.transition(row, s2) = w;
        sum += w;
      }
      m.transition.row(row) /= sum;
    }
  m.reward.resize(num_states, num_actions);
  for (int s = 0; s < num_states; ++s)
    for (int a = 0; a < num_actions; ++a) m.reward(s, a) = rng.uniform();
  for (int i = 0; i < n_constraints; ++i) {
    Matrix g(num_states, num_actions);
    for (int s = 0; s < num_states; ++s)
      for (int a = 0; a < num_actions; ++a) g(s, a) = rng.uniform();
    m.utilities.push_back(std::move(g));
  }
  m.initial_dist = Vector::Constant(num_states, 1.0 / num_states);

  inst.slater = Policy::uniform(num_states, num_actions);
  const Vector u = n_constraints > 0 ? utility_values(m, inst.slater) : Vector(0);
  m.thresholds = threshold_factor * u;
  inst.slack = u - m.thresholds;
  return inst;
}

GeneratedInstance make_constraint_active(const TabularCMDP& model, double tau, double share) {
  if (model.num_constraints() != 1)
    throw std::invalid_argument("make_constraint_active: requires exactly one constraint");
  if (!(share > 0.0 && share < 1.0))
    throw std::invalid_argument("make_constraint_active: share must lie in (0,1)");

  // Utility of the unconstrained regularized optimum vs. a utility-seeking
  // policy; a threshold strictly between the two makes the constraint bind.
  const SoftViResult reward_opt = soft_value_iteration(model, model.reward, tau);
  const double u_opt = utility_values(model, reward_opt.policy)[0];
  const SoftViResult util_opt = soft_value_iteration(model, model.utilities[0], tau);
  const double u_max = utility_values(model, util_opt.policy)[0];
  if (u_max - u_opt < 1e-6)
    throw std::invalid_argument(
        "make_constraint_active: utility range too flat for an active constraint");

  GeneratedInstance inst;
  inst.model = model;
  inst.model.thresholds[0] = u_opt + share * (u_max - u_opt);
  inst.slater = util_opt.policy;
  inst.slack = Vector::Constant(1, u_max - inst.model.thresholds[0]);
  return inst;
}

namespace {

constexpr int kDx[4] = {1, -1, 0, 0};  // right, left, up (y+1), down (y-1)
constexpr int kDy[4] = {0, 0, 1, -1};

int cell(int x, int y, int width) { return y * width + x; }

}  // namespace

GeneratedInstance gen_gridworld(int width, int height, double gamma,
                                std::optional<std::vector<int>> hazard_cells,
                                double threshold_factor) {
  if (width < 2 || height < 2)
    throw std::invalid_argument("gen_gridworld: width and height must be >= 2");
  if (!(gamma >= 0.0 && gamma < 1.0))
    throw std::invalid_argument("gen_gridworld: gamma must lie in [0,1)");

  const int ns = width * height;
  const int na = 4;
  const int goal = cell(width - 1, height - 1, width);

  std::vector<int> hazards;
  if (hazard_cells) {
    hazards = *hazard_cells;
    for (int h : hazards)
      if (h < 0 || h >= ns || h == goal)
        throw std::invalid_argument("gen_gridworld: hazard cell out of range or at the goal");
  } else if (width >= 3 && height >= 3) {
    hazards.push_back(cell(width / 2, height / 2, width));
  }
  std::vector<bool> is_hazard(ns, false);
  for (int h : hazards) is_hazard[h] = true;

  GeneratedInstance inst;
  TabularCMDP& m = inst.model;
  m.num_states = ns;
  m.num_actions = na;
  m.gamma = gamma;
  m.transition = Matrix::Zero(ns * na, ns);
  m.reward = Matrix::Zero(ns, na);
  m.initial_dist = Vector::Constant(ns, 1.0 / ns);

  // Slip model: intended move 0.8, stay 0.1, each perpendicular 0.05.
  // Moves off the grid stay in place. The goal is absorbing and pays 1.
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      const int s = cell(x, y, width);
      for (int a = 0; a < na; ++a) {
        const int row = m.sa_index(s, a);
        if (s == goal) {
          m.transition(row, s) = 1.0;
          m.reward(s, a) = 1.0;
          continue;
        }
        auto land = [&](int dir) {
          const int nx = x + kDx[dir];
          const int ny = y + kDy[dir];
          return (nx < 0 || nx >= width || ny < 0 || ny >= height) ? s : cell(nx, ny, width);
        };
        m.transition(row, land(a)) += 0.8;
        m.transition(row, s) += 0.1;
        const int perp0 = a < 2 ? 2 : 0;
        m.transition(row, land(perp0)) += 0.05;
        m.transition(row, land(perp0 + 1)) += 0.05;
      }
    }

  Matrix g(ns, na);
  for (int s = 0; s < ns; ++s) g.row(s).setConstant(is_hazard[s] ? 0.0 : 1.0);
  m.utilities.push_back(std::move(g));

  // Safe-path policy: shortest path to the goal on the hazard-free subgraph,
  // hazard cells escape to any safe neighbor. Smoothed into the soft-max class.
  std::vector<int> dist(ns, ns + 1);
  std::queue<int> frontier;
  dist[goal] = 0;
  frontier.push(goal);
  while (!frontier.empty()) {
    const int s = frontier.front();
    frontier.pop();
    const int x = s % width;
    const int y = s / width;
    for (int dir = 0; dir < 4; ++dir) {
      const int nx = x + kDx[dir];
      const int ny = y + kDy[dir];
      if (nx < 0 || nx >= width || ny < 0 || ny >= height) continue;
      const int s2 = cell(nx, ny, width);
      if (is_hazard[s2] || dist[s2] <= ns) continue;
      dist[s2] = dist[s] + 1;
      frontier.push(s2);
    }
  }
  Matrix logits = Matrix::Zero(ns, na);
  const double kSharp = std::log(0.94 * (na - 1) / 0.06);  // ~0.94 mass on the chosen action
  for (int s = 0; s < ns; ++s) {
    if (s == goal) continue;
    const int x = s % width;
    const int y = s / width;
    int best_dir = 0;
    int best = ns + 2;
    for (int dir = 0; dir < 4; ++dir) {
      const int nx = x + kDx[dir];
      const int ny = y + kDy[dir];
      if (nx < 0 || nx >= width || ny < 0 || ny >= height) continue;
      const int s2 = cell(nx, ny, width);
      if (is_hazard[s2]) continue;
      if (dist[s2] < best) {
        best = dist[s2];
        best_dir = dir;
      }
    }
    logits(s, best_dir) = kSharp;
  }
  inst.slater = Policy::from_logits(logits);

  const Vector u = utility_values(m, inst.slater);
  m.thresholds = threshold_factor * u;
  inst.slack = u - m.thresholds;
  return inst;
}

}  // namespace ercmdp
