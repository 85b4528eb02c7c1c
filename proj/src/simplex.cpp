#include "ercmdp/simplex.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace ercmdp {

namespace {

constexpr double kPivotTol = 1e-9;
constexpr double kFeasTol = 1e-8;

// Tableau rows: one per constraint, last row holds reduced costs. The basis
// is tracked by column index; Bland's rule picks the lowest-index entering
// and leaving candidates, which rules out cycling.
class Tableau {
 public:
  Tableau(Matrix t, std::vector<int> basis) : t_(std::move(t)), basis_(std::move(basis)) {}

  // Returns false when the current basis is optimal for the phase objective.
  bool pivot_once() {
    const Eigen::Index cost_row = t_.rows() - 1;
    const Eigen::Index num_cols = t_.cols() - 1;
    Eigen::Index entering = -1;
    for (Eigen::Index j = 0; j < num_cols; ++j) {
      if (t_(cost_row, j) < -kPivotTol) {
        entering = j;
        break;
      }
    }
    if (entering < 0) return false;

    Eigen::Index leaving = -1;
    double best_ratio = 0.0;
    for (Eigen::Index i = 0; i + 1 < t_.rows(); ++i) {
      const double a = t_(i, entering);
      if (a > kPivotTol) {
        const double ratio = t_(i, t_.cols() - 1) / a;
        if (leaving < 0 || ratio < best_ratio - 1e-12 ||
            (std::abs(ratio - best_ratio) <= 1e-12 && basis_[i] < basis_[leaving])) {
          leaving = i;
          best_ratio = ratio;
        }
      }
    }
    if (leaving < 0) throw std::runtime_error("simplex: unbounded problem");

    const double pivot = t_(leaving, entering);
    t_.row(leaving) /= pivot;
    for (Eigen::Index i = 0; i < t_.rows(); ++i) {
      if (i == leaving) continue;
      const double factor = t_(i, entering);
      if (factor != 0.0) t_.row(i) -= factor * t_.row(leaving);
    }
    basis_[leaving] = static_cast<int>(entering);
    return true;
  }

  void run() {
    while (pivot_once()) {
    }
  }

  Matrix& data() { return t_; }
  std::vector<int>& basis() { return basis_; }

 private:
  Matrix t_;
  std::vector<int> basis_;
};

}  // namespace

LpSolution simplex_solve(const LpProblem& problem) {
  const int n = static_cast<int>(problem.c.size());
  const int m_eq = static_cast<int>(problem.b_eq.size());
  const int m_ge = static_cast<int>(problem.b_ge.size());
  const int m = m_eq + m_ge;
  const int num_surplus = m_ge;
  const int num_struct = n + num_surplus;

  // Rows: [A_eq 0; A_ge -I] x' = b with b >= 0 after sign flips.
  Matrix a = Matrix::Zero(m, num_struct);
  Vector b(m);
  if (m_eq > 0) {
    a.topLeftCorner(m_eq, n) = problem.a_eq;
    b.head(m_eq) = problem.b_eq;
  }
  for (int i = 0; i < m_ge; ++i) {
    a.row(m_eq + i).head(n) = problem.a_ge.row(i);
    a(m_eq + i, n + i) = -1.0;
    b[m_eq + i] = problem.b_ge[i];
  }
  for (int i = 0; i < m; ++i) {
    if (b[i] < 0.0) {
      a.row(i) = -a.row(i);
      b[i] = -b[i];
    }
  }

  // Phase 1: artificial variable per row, minimize their sum.
  const int total = num_struct + m;
  Matrix t = Matrix::Zero(m + 1, total + 1);
  t.topLeftCorner(m, num_struct) = a;
  t.block(0, num_struct, m, m) = Matrix::Identity(m, m);
  t.col(total).head(m) = b;
  std::vector<int> basis(m);
  for (int i = 0; i < m; ++i) basis[i] = num_struct + i;
  // Reduced costs of the phase-1 objective under the artificial basis.
  for (int j = 0; j <= total; ++j) {
    double s = 0.0;
    for (int i = 0; i < m; ++i) s += t(i, j);
    t(m, j) = (j >= num_struct && j < total ? 1.0 : 0.0) - s;
  }

  Tableau phase1(std::move(t), std::move(basis));
  phase1.run();
  const double phase1_obj = -phase1.data()(m, total);
  if (phase1_obj > kFeasTol) return {LpStatus::Infeasible, Vector(), 0.0};

  // Drive any artificial variable still basic (at zero) out of the basis.
  Matrix& t1 = phase1.data();
  std::vector<int>& basis1 = phase1.basis();
  for (int i = 0; i < m; ++i) {
    if (basis1[i] < num_struct) continue;
    int replacement = -1;
    for (int j = 0; j < num_struct; ++j) {
      if (std::abs(t1(i, j)) > kPivotTol) {
        replacement = j;
        break;
      }
    }
    if (replacement < 0) continue;  // redundant row
    const double pivot = t1(i, replacement);
    t1.row(i) /= pivot;
    for (int r = 0; r <= m; ++r) {
      if (r == i) continue;
      const double factor = t1(r, replacement);
      if (factor != 0.0) t1.row(r) -= factor * t1.row(i);
    }
    basis1[i] = replacement;
  }

  // Phase 2 over the structural columns only.
  Matrix t2 = Matrix::Zero(m + 1, num_struct + 1);
  t2.topLeftCorner(m, num_struct) = t1.topLeftCorner(m, num_struct);
  t2.col(num_struct).head(m) = t1.col(total).head(m);
  Vector cost = Vector::Zero(num_struct);
  cost.head(n) = problem.c;
  t2.row(m).head(num_struct) = cost.transpose();
  for (int i = 0; i < m; ++i) {
    if (basis1[i] < num_struct && cost[basis1[i]] != 0.0)
      t2.row(m) -= cost[basis1[i]] * t2.row(i);
  }

  Tableau phase2(std::move(t2), std::move(basis1));
  phase2.run();

  LpSolution solution;
  solution.status = LpStatus::Optimal;
  solution.x = Vector::Zero(n);
  const Matrix& tf = phase2.data();
  for (int i = 0; i < m; ++i) {
    const int col = phase2.basis()[i];
    if (col < n) solution.x[col] = tf(i, num_struct);
  }
  solution.objective = problem.c.dot(solution.x);
  return solution;
}

}  // namespace ercmdp
