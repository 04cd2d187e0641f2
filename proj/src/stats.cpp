#include "hgd/stats.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include <boost/math/distributions/normal.hpp>

#include "hgd/errors.hpp"

namespace hgd {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double normal_upper_quantile(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw Error(ErrorKind::InvalidInput, "alpha must lie in (0, 1)");
  return boost::math::quantile(boost::math::complement(boost::math::normal(), alpha));
}

double chisq2_cdf(double x) { return x <= 0.0 ? 0.0 : -std::expm1(-0.5 * x); }

double chisq2_upper_quantile(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw Error(ErrorKind::InvalidInput, "alpha must lie in (0, 1)");
  return -2.0 * std::log(alpha);
}

double kolmogorov_survival(double x) {
  if (x <= 0.0)
    return 1.0;
  if (x < 1.0) {
    // Theta-function form converges fast for small x.
    const double pi = 3.14159265358979323846;
    const double f = -pi * pi / (8.0 * x * x);
    double s = 0.0;
    for (int k = 1; k <= 41; k += 2)
      s += std::exp(k * k * f);
    return 1.0 - std::sqrt(2.0 * pi) / x * s;
  }
  double s = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * x * x);
    s += (k % 2 == 1 ? term : -term);
    if (term < 1e-18)
      break;
  }
  return std::clamp(2.0 * s, 0.0, 1.0);
}

KsResult ks_test(std::span<const double> sample, const std::function<double(double)> &cdf) {
  if (sample.empty())
    throw Error(ErrorKind::EmptySample, "KS test on an empty sample");
  std::vector<double> v(sample.begin(), sample.end());
  std::sort(v.begin(), v.end());
  const double n = static_cast<double>(v.size());
  double D = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double F = cdf(v[i]);
    D = std::max({D, (i + 1) / n - F, F - i / n});
  }
  const double rn = std::sqrt(n);
  return {D, kolmogorov_survival((rn + 0.12 + 0.11 / rn) * D), static_cast<long>(v.size())};
}

double mean(std::span<const double> v) {
  double s = 0.0;
  for (double x : v)
    s += x;
  return v.empty() ? 0.0 : s / v.size();
}

double variance(std::span<const double> v) {
  if (v.size() < 2)
    return 0.0;
  const double m = mean(v);
  double s = 0.0;
  for (double x : v)
    s += (x - m) * (x - m);
  return s / (v.size() - 1);
}

} // namespace hgd
