#pragma once

#include "ercmdp/model.hpp"
#include "ercmdp/npg.hpp"

#include <cstdint>
#include <optional>
#include <ostream>

namespace ercmdp {

/// Feasible box for the multipliers; lower bounds are 0. Built from the
/// computable enlargement upper_i = (2 + 2 tau log|A|) / ((1-gamma) xi_i),
/// which contains the optimal multiplier whenever the Slater slack xi is
/// measured from a strictly feasible policy.
struct DualBox {
  Vector upper;
  int size() const { return static_cast<int>(upper.size()); }
};

/// Problem constants of the convergence analysis. d_hat is the certified
/// visitation floor (1-gamma) min_s rho(s); ell and c1 use it in place of the
/// unobservable uniform bound over all policies.
struct Constants {
  double ell = 0.0;     // dual smoothness factor
  double ell_c = 0.0;   // value Lipschitz constant sqrt(|A|)/(1-gamma)^2
  double c1 = 0.0;      // sqrt(2 (1-gamma) ln2 / (tau d_hat))
  double c2 = 0.0;      // multiplier bound proxy (2 + 2 tau log|A|)/((1-gamma) min_i xi_i)
  double c2_sum = 0.0;  // sum over i of the per-coordinate bounds; bounds sum_i lambda_i
  double d_hat = 0.0;
  Vector xi;            // measured Slater slack U_g(slater) - b
};

/// Measures the Slater slack of `slater_policy` and assembles every constant.
/// Throws std::invalid_argument when the policy is not strictly feasible or
/// the initial distribution is not interior.
Constants compute_constants(const TabularCMDP& model, const Policy& slater_policy, double tau);

DualBox make_dual_box(const TabularCMDP& model, const Constants& constants, double tau);

/// Coordinate-wise median{0, upper_i, lambda_i}.
Vector project_dual(const Vector& lambda, const DualBox& box);

struct DualEval {
  double value = 0.0;        // inexact dual value D~(lambda)
  Vector gradient;           // U_g(pi~) - b
  Policy policy;             // inner-loop solution pi~_lambda
  Vector utilities;
  double soft_objective = 0.0;   // V_tau at rho under the base reward
  int inner_iters = 0;
  double cert_log_error = 0.0;   // budget-based bound on ||log pi~ - log pi_lambda||_inf
};

/// Runs the NPG subroutine under r_lambda from the warm start and evaluates
/// the dual value and gradient at lambda. With inner log-error eps the
/// gradient error is at most sqrt(n) |A| eps / (1-gamma)^2. The `c2_sum`
/// argument feeds the Q-gap bound used for the error certificate.
DualEval dual_value_and_gradient(const TabularCMDP& model, const Vector& lambda, double tau,
                                 const Policy& warm_start_policy, int inner_budget,
                                 double c2_sum = 0.0, std::optional<double> stop_tol = {});

/// Gradient error allowance delta(eps) = sqrt(n) |A| eps / (1-gamma)^2.
double gradient_error_allowance(int n_constraints, int num_actions, double gamma,
                                double inner_log_error);

struct SolveTraceRow {
  int iter = 0;
  Vector lambda;
  double dual_value = 0.0;
  double grad_norm = 0.0;
  double max_violation = 0.0;
  double soft_objective = 0.0;
  int inner_iters = 0;
  double wall_ms = 0.0;
};

struct SolveTrace {
  int n_constraints = 0;
  std::vector<SolveTraceRow> rows;
  int dual_increase_flags = 0;  // iterations where D~ rose beyond the allowance
  void write_csv(std::ostream& out) const;
};

struct DualDescentOptions {
  std::optional<Vector> lambda0;          // default: zeros (lambda^{-1} = lambda^0)
  std::optional<std::uint64_t> random_init_seed;  // draw lambda0 uniformly in the box
  std::optional<double> step_size;        // override for alpha; default 1/constants.ell
  std::optional<Policy> init_policy;      // default: uniform
  // Doubles the working smoothness estimate (halving alpha) whenever a step
  // fails the inexact descent test; used by the practical mode only.
  bool adaptive_backtracking = false;
  std::optional<double> stop_grad_tol;    // early exit on the projected-gradient residual
  bool record_timing = true;
};

struct DualDescentResult {
  Policy policy;            // recovered at lambda_final with the recover budget
  Vector lambda;
  SolveTrace trace;
  double dual_value = 0.0;  // D~ at lambda_final from the recovery evaluation
  Vector gradient;
  Vector utilities;
  double cert_log_error = 0.0;
  double soft_objective = 0.0;
  double alpha_used = 0.0;
  int outer_iters = 0;
  int backtrack_count = 0;
};

/// Accelerated projected descent on the dual: extrapolation
/// mu = lambda_t + beta_t (lambda_t - lambda_{t-1}) with beta_t = (t-1)/(t+2),
/// NPG inner evaluation at mu warm-started from the previous inner solution,
/// then lambda_{t+1} = project(mu - alpha grad~D(mu)). After n1 iterations the
/// policy is recovered by a final inner run at lambda_{n1}.
DualDescentResult accelerated_dual_descent(const TabularCMDP& model, double tau,
                                           const DualBox& box, const Constants& constants,
                                           int n1, int inner_budget, int recover_budget,
                                           const DualDescentOptions& options = {});

/// Max pairwise gradient-difference ratio over sampled box points, doubled as
/// a safety factor. A practical stand-in for ell when 1/ell is too small to
/// make progress.
double estimate_dual_smoothness(const TabularCMDP& model, double tau, const DualBox& box,
                                int samples, int inner_budget, std::uint64_t seed);

struct StandardSolveOptions {
  bool theoretical_step = false;  // use alpha = 1/ell and the Corollary-sized T
  int max_outer = 400;
  std::optional<double> step_size;
  bool record_timing = true;
};

struct StandardSolveReport {
  Policy policy;
  Vector lambda;
  double value = 0.0;          // unregularized V^pi(rho)
  Vector utilities;
  double max_violation = 0.0;
  double tau = 0.0;
  double gap_allowance = 0.0;  // tau log|A| / (1-gamma)
  Constants constants;
  double alpha = 0.0;
  int outer_iters = 0;
  bool practical_step = true;
  SolveTrace trace;
};

/// Near-optimal policy for the standard (unregularized) CMDP: sets
/// tau = (1-gamma) eps / (4 log|A|) and runs the accelerated dual descent.
/// The default practical mode replaces alpha = 1/ell by an empirical
/// smoothness estimate; the theoretical mode follows the corollary exactly
/// and is only tractable at toy scale.
StandardSolveReport standard_cmdp_solve(const TabularCMDP& model, double epsilon,
                                        const Policy& slater_policy,
                                        const StandardSolveOptions& options = {});

}  // namespace ercmdp
