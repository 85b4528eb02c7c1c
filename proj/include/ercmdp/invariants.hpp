#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace ercmdp {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

/// Property sweeps over seeded random instances. Suites: "model", "npg",
/// "dual", "oracles", "all", "quick". Tolerances are the documented test
/// tolerances; details report the worst residual observed.
std::vector<CheckResult> run_invariant_suite(const std::string& suite, std::uint64_t seed = 7);

}  // namespace ercmdp
