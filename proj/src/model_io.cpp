#include "ercmdp/model_io.hpp"

#include <fstream>
#include <stdexcept>

namespace ercmdp {

using nlohmann::json;

namespace {

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const json& j, int rows, int cols, const std::string& name) {
  if (!j.is_array() || static_cast<int>(j.size()) != rows)
    throw std::runtime_error(name + ": expected " + std::to_string(rows) + " rows");
  Matrix m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    if (!j[r].is_array() || static_cast<int>(j[r].size()) != cols)
      throw std::runtime_error(name + " row " + std::to_string(r) + ": expected " +
                               std::to_string(cols) + " entries");
    for (int c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

Vector vector_from_json(const json& j, int len, const std::string& name) {
  if (!j.is_array() || static_cast<int>(j.size()) != len)
    throw std::runtime_error(name + ": expected " + std::to_string(len) + " entries");
  Vector v(len);
  for (int i = 0; i < len; ++i) v[i] = j[i].get<double>();
  return v;
}

}  // namespace

json cmdp_to_json(const TabularCMDP& model) {
  json j;
  j["num_states"] = model.num_states;
  j["num_actions"] = model.num_actions;
  j["gamma"] = model.gamma;
  json trans = json::array();
  for (int s = 0; s < model.num_states; ++s) {
    json per_action = json::array();
    for (int a = 0; a < model.num_actions; ++a) {
      json row = json::array();
      for (int s2 = 0; s2 < model.num_states; ++s2)
        row.push_back(model.transition(model.sa_index(s, a), s2));
      per_action.push_back(std::move(row));
    }
    trans.push_back(std::move(per_action));
  }
  j["transition"] = std::move(trans);
  j["reward"] = matrix_to_json(model.reward);
  json utils = json::array();
  for (const auto& g : model.utilities) utils.push_back(matrix_to_json(g));
  j["utilities"] = std::move(utils);
  json thr = json::array();
  for (int i = 0; i < model.num_constraints(); ++i) thr.push_back(model.thresholds[i]);
  j["thresholds"] = std::move(thr);
  json rho = json::array();
  for (int s = 0; s < model.num_states; ++s) rho.push_back(model.initial_dist[s]);
  j["initial_dist"] = std::move(rho);
  return j;
}

TabularCMDP cmdp_from_json(const json& j) {
  TabularCMDP model;
  for (const char* key :
       {"num_states", "num_actions", "gamma", "transition", "reward", "utilities",
        "thresholds", "initial_dist"})
    if (!j.contains(key)) throw std::runtime_error(std::string("missing key '") + key + "'");
  model.num_states = j["num_states"].get<int>();
  model.num_actions = j["num_actions"].get<int>();
  model.gamma = j["gamma"].get<double>();
  const int ns = model.num_states;
  const int na = model.num_actions;
  if (ns < 1 || na < 1) throw std::runtime_error("num_states/num_actions must be positive");

  const json& trans = j["transition"];
  if (!trans.is_array() || static_cast<int>(trans.size()) != ns)
    throw std::runtime_error("transition: expected " + std::to_string(ns) + " state entries");
  model.transition.resize(ns * na, ns);
  for (int s = 0; s < ns; ++s) {
    if (!trans[s].is_array() || static_cast<int>(trans[s].size()) != na)
      throw std::runtime_error("transition[" + std::to_string(s) + "]: expected " +
                               std::to_string(na) + " action entries");
    for (int a = 0; a < na; ++a) {
      const json& row = trans[s][a];
      if (!row.is_array() || static_cast<int>(row.size()) != ns)
        throw std::runtime_error("transition[" + std::to_string(s) + "][" + std::to_string(a) +
                                 "]: expected " + std::to_string(ns) + " entries");
      for (int s2 = 0; s2 < ns; ++s2)
        model.transition(model.sa_index(s, a), s2) = row[s2].get<double>();
    }
  }
  model.reward = matrix_from_json(j["reward"], ns, na, "reward");
  const json& utils = j["utilities"];
  if (!utils.is_array()) throw std::runtime_error("utilities: expected an array of tables");
  for (std::size_t i = 0; i < utils.size(); ++i)
    model.utilities.push_back(
        matrix_from_json(utils[i], ns, na, "utilities[" + std::to_string(i) + "]"));
  model.thresholds =
      vector_from_json(j["thresholds"], static_cast<int>(utils.size()), "thresholds");
  model.initial_dist = vector_from_json(j["initial_dist"], ns, "initial_dist");
  return model;
}

TabularCMDP load_cmdp(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
  TabularCMDP model = cmdp_from_json(j);
  const ValidationReport report = validate_model(model);
  if (!report.ok())
    throw std::runtime_error(path.string() + ": model validation failed:\n" + report.to_string());
  return model;
}

void save_cmdp(const TabularCMDP& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << cmdp_to_json(model).dump(2) << "\n";
}

json policy_to_json(const Policy& policy) {
  json j;
  j["log_prob"] = matrix_to_json(policy.log_prob());
  return j;
}

Policy policy_from_json(const json& j) {
  if (j.contains("log_prob")) {
    const json& table = j["log_prob"];
    const int rows = static_cast<int>(table.size());
    if (rows == 0) throw std::runtime_error("policy: empty log_prob table");
    const int cols = static_cast<int>(table[0].size());
    return Policy::from_logits(matrix_from_json(table, rows, cols, "log_prob"));
  }
  if (j.contains("prob")) {
    const json& table = j["prob"];
    const int rows = static_cast<int>(table.size());
    if (rows == 0) throw std::runtime_error("policy: empty prob table");
    const int cols = static_cast<int>(table[0].size());
    return Policy::from_probs(matrix_from_json(table, rows, cols, "prob"));
  }
  throw std::runtime_error("policy: expected key 'log_prob' or 'prob'");
}

Policy load_policy(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
  return policy_from_json(j);
}

void save_policy(const Policy& policy, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << policy_to_json(policy).dump(2) << "\n";
}

}  // namespace ercmdp
