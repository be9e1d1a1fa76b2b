#include "svyqif/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "svyqif/errors.hpp"

namespace svyqif {

const char* toString(Selection s) {
  switch (s) {
    case Selection::Correct: return "C";
    case Selection::Over: return "O";
    case Selection::Under: return "U";
  }
  return "?";
}

Selection classifySelection(const Vector& estimate, int d1, double threshold) {
  if (d1 < 0 || d1 > estimate.size()) throw ContractError("classifySelection: d1 out of range");
  auto active = [&](int k) {
    const double a = std::abs(estimate[k]);
    return threshold > 0.0 ? a >= threshold : a > 0.0;
  };
  for (int k = 0; k < d1; ++k) {
    if (!active(k)) return Selection::Under;
  }
  for (int k = d1; k < estimate.size(); ++k) {
    if (active(k)) return Selection::Over;
  }
  return Selection::Correct;
}

double computeMse(const std::vector<Vector>& estimates, const Vector& beta0) {
  if (estimates.empty()) throw ContractError("computeMse: no estimates");
  double total = 0.0;
  for (const auto& e : estimates) total += (e - beta0).squaredNorm();
  return total / static_cast<double>(estimates.size());
}

double computeArb(const std::vector<Vector>& estimates, const Vector& beta0, int k) {
  if (estimates.empty()) throw ContractError("computeArb: no estimates");
  if (beta0[k] == 0.0) throw ContractError("computeArb: true coefficient is zero");
  double mean = 0.0;
  for (const auto& e : estimates) mean += e[k];
  mean /= static_cast<double>(estimates.size());
  return std::abs(mean - beta0[k]) / std::abs(beta0[k]) * 100.0;
}

double median(std::vector<double> values) {
  if (values.empty()) throw ContractError("median of an empty set");
  const auto n = values.size();
  const auto mid = values.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(values.begin(), mid, values.end());
  if (n % 2 == 1) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(values.begin(), mid);
  return 0.5 * (lower + upper);
}

double medianAbsoluteDeviation(const std::vector<double>& values) {
  const double center = median(values);
  std::vector<double> dev(values.size());
  std::transform(values.begin(), values.end(), dev.begin(),
                 [center](double v) { return std::abs(v - center); });
  return median(std::move(dev));
}

RobustSd robustSdSuite(const std::vector<Vector>& estimates,
                       const std::vector<Vector>& bootstrap_sds, int k) {
  if (estimates.size() < 2) throw ContractError("robustSdSuite: needs at least two replicates");
  std::vector<double> coord;
  coord.reserve(estimates.size());
  for (const auto& e : estimates) coord.push_back(e[k]);
  RobustSd out;
  out.sd = medianAbsoluteDeviation(coord) / kMadScale;
  std::vector<double> boot;
  for (const auto& s : bootstrap_sds) {
    if (std::isfinite(s[k])) boot.push_back(s[k]);
  }
  if (!boot.empty()) {
    out.sd_m = median(boot);
    std::vector<double> dev;
    dev.reserve(boot.size());
    for (double s : boot) dev.push_back(std::abs(s - out.sd));
    out.sd_mad = median(std::move(dev)) / kMadScale;
  }
  return out;
}

}  // namespace svyqif
