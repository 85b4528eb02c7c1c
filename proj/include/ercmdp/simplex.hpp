#pragma once

#include "ercmdp/types.hpp"

namespace ercmdp {

enum class LpStatus { Optimal, Infeasible };

/// min c^T x  subject to  a_eq x = b_eq,  a_ge x >= b_ge,  x >= 0.
struct LpProblem {
  Vector c;
  Matrix a_eq;
  Vector b_eq;
  Matrix a_ge;
  Vector b_ge;
};

struct LpSolution {
  LpStatus status = LpStatus::Infeasible;
  Vector x;
  double objective = 0.0;
};

/// Two-phase dense tableau simplex with Bland's anti-cycling rule. Intended
/// for the desk-scale problems in this repository (tens of variables).
/// Throws std::runtime_error on an unbounded problem, which the occupancy
/// polytope cannot produce.
LpSolution simplex_solve(const LpProblem& problem);

}  // namespace ercmdp
