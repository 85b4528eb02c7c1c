#include "ercmdp/bisection.hpp"
#include "ercmdp/dual.hpp"
#include "ercmdp/fit.hpp"
#include "ercmdp/gen.hpp"
#include "ercmdp/model.hpp"
#include "ercmdp/model_io.hpp"
#include "ercmdp/npg.hpp"
#include "ercmdp/oracles.hpp"

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

namespace py = pybind11;
using namespace ercmdp;

namespace {

TabularCMDP make_model(py::array_t<double, py::array::c_style | py::array::forcecast> transition,
                       const Matrix& reward, const std::vector<Matrix>& utilities,
                       const Vector& thresholds, double gamma, const Vector& initial_dist) {
  if (transition.ndim() != 3)
    throw std::invalid_argument("transition must have shape (S, A, S)");
  const int ns = static_cast<int>(transition.shape(0));
  const int na = static_cast<int>(transition.shape(1));
  if (static_cast<int>(transition.shape(2)) != ns)
    throw std::invalid_argument("transition must have shape (S, A, S)");
  TabularCMDP model;
  model.num_states = ns;
  model.num_actions = na;
  model.transition.resize(ns * na, ns);
  auto view = transition.unchecked<3>();
  for (int s = 0; s < ns; ++s)
    for (int a = 0; a < na; ++a)
      for (int s2 = 0; s2 < ns; ++s2) model.transition(model.sa_index(s, a), s2) = view(s, a, s2);
  model.reward = reward;
  model.utilities = utilities;
  model.thresholds = thresholds;
  model.gamma = gamma;
  model.initial_dist = initial_dist;
  return model;
}

py::array_t<double> transition_array(const TabularCMDP& model) {
  py::array_t<double> out({model.num_states, model.num_actions, model.num_states});
  auto view = out.mutable_unchecked<3>();
  for (int s = 0; s < model.num_states; ++s)
    for (int a = 0; a < model.num_actions; ++a)
      for (int s2 = 0; s2 < model.num_states; ++s2)
        view(s, a, s2) = model.transition(model.sa_index(s, a), s2);
  return out;
}

std::string trace_csv(const SolveTrace& trace) {
  std::ostringstream out;
  trace.write_csv(out);
  return out.str();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Entropy-regularized constrained MDP solvers, oracles and generators";

  py::class_<TabularCMDP>(m, "TabularCMDP")
      .def(py::init(&make_model), py::arg("transition"), py::arg("reward"), py::arg("utilities"),
           py::arg("thresholds"), py::arg("gamma"), py::arg("initial_dist"))
      .def_readonly("num_states", &TabularCMDP::num_states)
      .def_readonly("num_actions", &TabularCMDP::num_actions)
      .def_readonly("reward", &TabularCMDP::reward)
      .def_readonly("utilities", &TabularCMDP::utilities)
      .def_readonly("thresholds", &TabularCMDP::thresholds)
      .def_readonly("gamma", &TabularCMDP::gamma)
      .def_readonly("initial_dist", &TabularCMDP::initial_dist)
      .def_property_readonly("transition", &transition_array)
      .def("num_constraints", &TabularCMDP::num_constraints);

  py::class_<Policy>(m, "Policy")
      .def_static("uniform", &Policy::uniform)
      .def_static("from_logits", &Policy::from_logits)
      .def_static("from_probs", &Policy::from_probs)
      .def_property_readonly("prob", &Policy::prob)
      .def_property_readonly("log_prob", &Policy::log_prob)
      .def_property_readonly("num_states", &Policy::num_states)
      .def_property_readonly("num_actions", &Policy::num_actions);

  py::class_<ValidationReport>(m, "ValidationReport")
      .def_readonly("violations", &ValidationReport::violations)
      .def("ok", &ValidationReport::ok)
      .def("__str__", &ValidationReport::to_string);

  m.def("validate_model", &validate_model);
  m.def("evaluate_value",
        py::overload_cast<const TabularCMDP&, const Policy&, const Matrix&>(&evaluate_value));
  m.def("evaluate_q", &evaluate_q);
  m.def("discounted_visitation",
        py::overload_cast<const TabularCMDP&, const Policy&>(&discounted_visitation));
  m.def("discounted_entropy", &discounted_entropy);
  m.def("evaluate_soft_value", &evaluate_soft_value);
  m.def("evaluate_soft_q", &evaluate_soft_q);
  m.def("utility_values",
        py::overload_cast<const TabularCMDP&, const Policy&>(&utility_values));
  m.def("softmax_policy_gradient", &softmax_policy_gradient);
  m.def("policy_distance", &policy_distance);
  m.def("lagrangian_reward", &lagrangian_reward);
  m.def("lagrangian_value", &lagrangian_value);

  py::class_<NpgConfig>(m, "NpgConfig")
      .def(py::init([](double tau, double eta, int max_iters, std::optional<double> stop_tol) {
             return NpgConfig{tau, eta, max_iters, stop_tol};
           }),
           py::arg("tau"), py::arg("eta"), py::arg("max_iters"),
           py::arg("stop_tol") = std::nullopt)
      .def_readwrite("tau", &NpgConfig::tau)
      .def_readwrite("eta", &NpgConfig::eta)
      .def_readwrite("max_iters", &NpgConfig::max_iters)
      .def_readwrite("stop_tol", &NpgConfig::stop_tol);

  py::class_<NpgTrace>(m, "NpgTrace")
      .def("iterations", &NpgTrace::iterations)
      .def_readonly("non_monotone", &NpgTrace::non_monotone)
      .def_property_readonly("soft_values",
                             [](const NpgTrace& t) {
                               std::vector<double> out;
                               for (const auto& r : t.records) out.push_back(r.soft_value);
                               return out;
                             })
      .def_property_readonly("log_changes",
                             [](const NpgTrace& t) {
                               std::vector<double> out;
                               for (const auto& r : t.records) out.push_back(r.log_change);
                               return out;
                             })
      .def_property_readonly("log_errors", [](const NpgTrace& t) {
        std::vector<double> out;
        for (const auto& r : t.records) out.push_back(r.log_error);
        return out;
      });

  m.def("default_npg_step_size", &default_npg_step_size);
  m.def("npg_step", &npg_step);
  m.def(
      "npg_run",
      [](const TabularCMDP& model, const Policy& init, const Vector& lambda,
         const NpgConfig& config, std::optional<Policy> reference) {
        return npg_run(model, init, lambda, config, reference ? &*reference : nullptr);
      },
      py::arg("model"), py::arg("init_policy"), py::arg("lambda_"), py::arg("config"),
      py::arg("reference") = std::nullopt);
  m.def("npg_iteration_budget", &npg_iteration_budget);
  m.def("lagrangian_q_gap_bound", &lagrangian_q_gap_bound);

  py::class_<Constants>(m, "Constants")
      .def_readonly("ell", &Constants::ell)
      .def_readonly("ell_c", &Constants::ell_c)
      .def_readonly("c1", &Constants::c1)
      .def_readonly("c2", &Constants::c2)
      .def_readonly("c2_sum", &Constants::c2_sum)
      .def_readonly("d_hat", &Constants::d_hat)
      .def_readonly("xi", &Constants::xi);

  py::class_<DualBox>(m, "DualBox")
      .def(py::init([](const Vector& upper) { return DualBox{upper}; }))
      .def_readonly("upper", &DualBox::upper);

  m.def("compute_constants", &compute_constants);
  m.def("make_dual_box", &make_dual_box);
  m.def("project_dual", &project_dual);

  py::class_<DualEval>(m, "DualEval")
      .def_readonly("value", &DualEval::value)
      .def_readonly("gradient", &DualEval::gradient)
      .def_readonly("policy", &DualEval::policy)
      .def_readonly("utilities", &DualEval::utilities)
      .def_readonly("soft_objective", &DualEval::soft_objective)
      .def_readonly("inner_iters", &DualEval::inner_iters)
      .def_readonly("cert_log_error", &DualEval::cert_log_error);

  m.def("dual_value_and_gradient", &dual_value_and_gradient, py::arg("model"), py::arg("lambda_"),
        py::arg("tau"), py::arg("warm_start_policy"), py::arg("inner_budget"),
        py::arg("c2_sum") = 0.0, py::arg("stop_tol") = std::nullopt);

  py::class_<SolveTrace>(m, "SolveTrace")
      .def_readonly("dual_increase_flags", &SolveTrace::dual_increase_flags)
      .def("to_csv", &trace_csv)
      .def_property_readonly("dual_values",
                             [](const SolveTrace& t) {
                               std::vector<double> out;
                               for (const auto& r : t.rows) out.push_back(r.dual_value);
                               return out;
                             })
      .def_property_readonly("lambdas", [](const SolveTrace& t) {
        std::vector<Vector> out;
        for (const auto& r : t.rows) out.push_back(r.lambda);
        return out;
      });

  py::class_<DualDescentResult>(m, "DualDescentResult")
      .def_readonly("policy", &DualDescentResult::policy)
      .def_readonly("lambda_", &DualDescentResult::lambda)
      .def_readonly("trace", &DualDescentResult::trace)
      .def_readonly("dual_value", &DualDescentResult::dual_value)
      .def_readonly("gradient", &DualDescentResult::gradient)
      .def_readonly("utilities", &DualDescentResult::utilities)
      .def_readonly("alpha_used", &DualDescentResult::alpha_used)
      .def_readonly("outer_iters", &DualDescentResult::outer_iters);

  m.def(
      "accelerated_dual_descent",
      [](const TabularCMDP& model, double tau, const DualBox& box, const Constants& constants,
         int n1, int inner_budget, int recover_budget, std::optional<double> step_size,
         std::optional<Policy> init_policy, bool adaptive_backtracking,
         std::optional<double> stop_grad_tol) {
        DualDescentOptions options;
        options.step_size = step_size;
        if (init_policy) options.init_policy = *init_policy;
        options.adaptive_backtracking = adaptive_backtracking;
        options.stop_grad_tol = stop_grad_tol;
        return accelerated_dual_descent(model, tau, box, constants, n1, inner_budget,
                                        recover_budget, options);
      },
      py::arg("model"), py::arg("tau"), py::arg("box"), py::arg("constants"), py::arg("n1"),
      py::arg("inner_budget"), py::arg("recover_budget"), py::arg("step_size") = std::nullopt,
      py::arg("init_policy") = std::nullopt, py::arg("adaptive_backtracking") = false,
      py::arg("stop_grad_tol") = std::nullopt);

  py::class_<StandardSolveReport>(m, "StandardSolveReport")
      .def_readonly("policy", &StandardSolveReport::policy)
      .def_readonly("lambda_", &StandardSolveReport::lambda)
      .def_readonly("value", &StandardSolveReport::value)
      .def_readonly("utilities", &StandardSolveReport::utilities)
      .def_readonly("max_violation", &StandardSolveReport::max_violation)
      .def_readonly("tau", &StandardSolveReport::tau)
      .def_readonly("gap_allowance", &StandardSolveReport::gap_allowance)
      .def_readonly("outer_iters", &StandardSolveReport::outer_iters);

  m.def(
      "standard_cmdp_solve",
      [](const TabularCMDP& model, double epsilon, const Policy& slater, int max_outer) {
        StandardSolveOptions options;
        options.max_outer = max_outer;
        return standard_cmdp_solve(model, epsilon, slater, options);
      },
      py::arg("model"), py::arg("epsilon"), py::arg("slater_policy"), py::arg("max_outer") = 400);

  py::class_<BisectionConfig>(m, "BisectionConfig")
      .def(py::init([](double epsilon, int n1, int n2, double lo, double hi) {
             return BisectionConfig{epsilon, n1, n2, lo, hi};
           }),
           py::arg("epsilon"), py::arg("inner_budget_n1"), py::arg("recover_budget_n2"),
           py::arg("interval_lo") = 0.0, py::arg("interval_hi") = 0.0);

  py::class_<BisectionResult>(m, "BisectionResult")
      .def_readonly("policy", &BisectionResult::policy)
      .def_readonly("lambda_", &BisectionResult::lambda)
      .def_readonly("final_gradient", &BisectionResult::final_gradient)
      .def_readonly("dual_value", &BisectionResult::dual_value)
      .def_readonly("outer_iters", &BisectionResult::outer_iters)
      .def_readonly("short_circuit_low", &BisectionResult::short_circuit_low)
      .def_readonly("short_circuit_high", &BisectionResult::short_circuit_high);

  m.def("grad_sub", &grad_sub);
  m.def(
      "bisection_solve",
      [](const TabularCMDP& model, double tau, const BisectionConfig& config,
         std::optional<Policy> init) { return bisection_solve(model, tau, config, init); },
      py::arg("model"), py::arg("tau"), py::arg("config"), py::arg("init_policy") = std::nullopt);

  py::class_<SoftViResult>(m, "SoftViResult")
      .def_readonly("value", &SoftViResult::value)
      .def_readonly("q", &SoftViResult::q)
      .def_readonly("policy", &SoftViResult::policy)
      .def_readonly("iterations", &SoftViResult::iterations);

  py::class_<ViResult>(m, "ViResult")
      .def_readonly("value", &ViResult::value)
      .def_readonly("policy", &ViResult::policy)
      .def_readonly("iterations", &ViResult::iterations);

  py::class_<GridSearchResult>(m, "GridSearchResult")
      .def_readonly("lambda_star", &GridSearchResult::lambda_star)
      .def_readonly("d_star", &GridSearchResult::d_star)
      .def_readonly("grid", &GridSearchResult::grid)
      .def_readonly("values", &GridSearchResult::values);

  py::class_<OccupancyMeasure>(m, "OccupancyMeasure").def_readonly("mu", &OccupancyMeasure::mu);

  py::enum_<LpStatus>(m, "LpStatus")
      .value("Optimal", LpStatus::Optimal)
      .value("Infeasible", LpStatus::Infeasible);

  py::class_<OccupancyLpResult>(m, "OccupancyLpResult")
      .def_readonly("status", &OccupancyLpResult::status)
      .def_readonly("occupancy", &OccupancyLpResult::occupancy)
      .def_readonly("policy", &OccupancyLpResult::policy)
      .def_readonly("value", &OccupancyLpResult::value);

  m.def("truncated_rollout_value", &truncated_rollout_value);
  m.def("soft_value_iteration", &soft_value_iteration, py::arg("model"), py::arg("reward"),
        py::arg("tau"), py::arg("tol") = 1e-12);
  m.def("value_iteration", &value_iteration, py::arg("model"), py::arg("reward"),
        py::arg("tol") = 1e-12);
  m.def("dual_grid_search", &dual_grid_search, py::arg("model"), py::arg("tau"), py::arg("box"),
        py::arg("resolution"), py::arg("smoothness_for_certificate") = 0.0);
  m.def("occupancy_lp_solve", &occupancy_lp_solve);

  py::class_<GeneratedInstance>(m, "GeneratedInstance")
      .def_readonly("model", &GeneratedInstance::model)
      .def_readonly("slater", &GeneratedInstance::slater)
      .def_readonly("slack", &GeneratedInstance::slack);

  m.def("gen_random_cmdp", &gen_random_cmdp, py::arg("seed"), py::arg("num_states"),
        py::arg("num_actions"), py::arg("n_constraints"), py::arg("gamma"),
        py::arg("threshold_factor") = 0.9);
  m.def("gen_gridworld", &gen_gridworld, py::arg("width"), py::arg("height"), py::arg("gamma"),
        py::arg("hazard_cells") = std::nullopt, py::arg("threshold_factor") = 0.9);
  m.def("make_constraint_active", &make_constraint_active, py::arg("model"), py::arg("tau"),
        py::arg("share") = 0.5);

  py::class_<RateFit>(m, "RateFit")
      .def_readonly("slope", &RateFit::slope)
      .def_readonly("intercept", &RateFit::intercept)
      .def_readonly("residual_rms", &RateFit::residual_rms)
      .def_readonly("slope_stderr", &RateFit::slope_stderr)
      .def_readonly("points_used", &RateFit::points_used);

  m.def(
      "fit_rate",
      [](const std::vector<double>& iters, const std::vector<double>& values,
         const std::string& model_name) {
        return fit_rate(iters, values, rate_model_from_string(model_name));
      },
      py::arg("iters"), py::arg("values"), py::arg("model") = "power");

  m.def("load_cmdp", &load_cmdp);
  m.def("save_cmdp", &save_cmdp);
  m.def("load_policy", &load_policy);
  m.def("save_policy", &save_policy);
}
