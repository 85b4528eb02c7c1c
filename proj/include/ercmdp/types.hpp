#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>

namespace ercmdp {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// State-value table V(s).
using ValueTable = Eigen::VectorXd;
/// Action-value table Q(s,a), one row per state.
using QTable = Eigen::MatrixXd;
/// Discounted state visitation distribution d(s).
using VisitationDistribution = Eigen::VectorXd;

/// Deterministic random source. Doubles are derived from the raw 64-bit
/// stream so that identical seeds give identical values on any platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  /// Uniform double in [0, 1).
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [lo, hi], inclusive.
  int uniform_int(int lo, int hi) {
    return lo + static_cast<int>(gen_() % static_cast<std::uint64_t>(hi - lo + 1));
  }

  std::uint64_t raw() { return gen_(); }

 private:
  std::mt19937_64 gen_;
};

}  // namespace ercmdp
