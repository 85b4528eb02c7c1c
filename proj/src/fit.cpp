#include "ercmdp/fit.hpp"

#include <cmath>
#include <stdexcept>

namespace ercmdp {

RateFit fit_rate(const std::vector<double>& iters, const std::vector<double>& values,
                 RateModel model) {
  if (iters.size() != values.size()) throw std::invalid_argument("fit_rate: length mismatch");
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < iters.size(); ++i) {
    if (values[i] > 0.0 && iters[i] > 0.0) {
      xs.push_back(model == RateModel::Power ? std::log(iters[i]) : iters[i]);
      ys.push_back(std::log(values[i]));
    }
  }
  const int n = static_cast<int>(xs.size());
  if (n < 10) throw std::invalid_argument("fit_rate: needs at least 10 positive rows");

  double mx = 0.0, my = 0.0;
  for (int i = 0; i < n; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (int i = 0; i < n; ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (sxx < 1e-14) throw std::invalid_argument("fit_rate: degenerate column");

  RateFit fit;
  fit.points_used = n;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0.0;
  for (int i = 0; i < n; ++i) {
    const double r = ys[i] - (fit.intercept + fit.slope * xs[i]);
    ss_res += r * r;
  }
  fit.residual_rms = std::sqrt(ss_res / n);
  fit.slope_stderr = n > 2 ? std::sqrt(ss_res / (n - 2) / sxx) : 0.0;
  return fit;
}

RateModel rate_model_from_string(const std::string& name) {
  if (name == "power") return RateModel::Power;
  if (name == "linear-log") return RateModel::LinearLog;
  throw std::invalid_argument("unknown rate model '" + name + "' (use power or linear-log)");
}

}  // namespace ercmdp
