#include "backreact/statistics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "backreact/errors.hpp"

namespace backreact {

double ks_one_sample(std::vector<double> samples, const std::function<double(double)>& cdf) {
  if (samples.empty()) throw InvalidArgument("ks_one_sample: no samples");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    d = std::max({d, std::abs(f - static_cast<double>(i) / n),
                  std::abs(static_cast<double>(i + 1) / n - f)});
  }
  return d;
}

double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw InvalidArgument("ks_two_sample: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == v) ++i;
    while (j < b.size() && b[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

double ks_threshold_one_sample(std::size_t n) { return 1.63 / std::sqrt(static_cast<double>(n)); }

double ks_threshold_two_sample(std::size_t n, std::size_t m) {
  const double dn = static_cast<double>(n);
  const double dm = static_cast<double>(m);
  return 1.63 * std::sqrt((dn + dm) / (dn * dm));
}

double z_score(const Estimate& a, const Estimate& b) {
  const double diff = a.mean - b.mean;
  if (diff == 0.0) return 0.0;
  const double floor = 16.0 * std::numeric_limits<double>::epsilon() *
                       std::max({std::abs(a.mean), std::abs(b.mean), std::numeric_limits<double>::min()});
  const double se = std::max(std::hypot(a.standard_error, b.standard_error), floor);
  const double z = diff / se;
  return std::isfinite(z) ? z : std::copysign(std::numeric_limits<double>::max(), diff);
}

}  // namespace backreact
