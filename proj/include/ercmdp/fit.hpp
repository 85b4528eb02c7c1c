#pragma once

#include <string>
#include <vector>

namespace ercmdp {

enum class RateModel { Power, LinearLog };

struct RateFit {
  double slope = 0.0;       // power: d log(value)/d log(iter); linear-log: d log(value)/d iter
  double intercept = 0.0;
  double residual_rms = 0.0;
  double slope_stderr = 0.0;  // one-sigma confidence band for the slope
  int points_used = 0;
};

/// Least-squares slope of log(value) against log(iter) (power law) or against
/// iter (geometric decay). Requires at least 10 rows with positive values and
/// positive iterations; rejects degenerate all-equal columns.
RateFit fit_rate(const std::vector<double>& iters, const std::vector<double>& values,
                 RateModel model);

RateModel rate_model_from_string(const std::string& name);

}  // namespace ercmdp
