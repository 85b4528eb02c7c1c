#pragma once

#include "ercmdp/dual.hpp"

#include <optional>
#include <ostream>

namespace ercmdp {

struct BisectionConfig {
  double epsilon = 0.0;        // gradient threshold
  int inner_budget_n1 = 0;     // NPG iterations per gradient estimate
  int recover_budget_n2 = 0;   // NPG iterations for the final policy recovery
  double interval_lo = 0.0;
  double interval_hi = 0.0;    // typically C2
};

struct GradSubResult {
  double gradient = 0.0;  // U_g(pi~_lambda) - b
  Policy policy;          // passed forward as the next warm start
  int inner_iters = 0;
  double cert_log_error = 0.0;
};

/// Single-constraint gradient estimator: runs the NPG subroutine at lambda
/// from the supplied warm start and returns U_g(pi~) - b. Rejects n != 1.
GradSubResult grad_sub(const TabularCMDP& model, double lambda, const Policy& warm_policy,
                       double tau, int inner_budget);

struct BisectionRow {
  int iter = 0;
  double p = 0.0;
  double q = 0.0;
  double midpoint = 0.0;
  double grad_estimate = 0.0;
  int inner_iters = 0;
};

struct BisectionResult {
  Policy policy;
  double lambda = 0.0;
  std::vector<BisectionRow> rows;
  double final_gradient = 0.0;
  double dual_value = 0.0;
  int outer_iters = 0;
  bool short_circuit_low = false;   // grad~D(lo) >= 0: endpoint optimum at lo
  bool short_circuit_high = false;  // grad~D(hi) <= 0: endpoint optimum at hi
  double interval_lo = 0.0;
  double interval_hi = 0.0;
  void write_csv(std::ostream& out) const;
};

/// Dual bisection for n = 1: halves [p,q] toward the side indicated by the
/// gradient sign while |grad~D| >= epsilon, terminating at an approximate
/// stationary point. Endpoint optima short-circuit before any halving.
BisectionResult bisection_solve(const TabularCMDP& model, double tau,
                                const BisectionConfig& config,
                                std::optional<Policy> init_policy = {});

}  // namespace ercmdp
