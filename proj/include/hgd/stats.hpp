#pragma once

#include <functional>
#include <span>

namespace hgd {

double normal_cdf(double x);
/// Upper-alpha point z with P(Z >= z) = alpha.
double normal_upper_quantile(double alpha);
double chisq2_cdf(double x);
/// Upper-alpha point of chi^2 with two degrees of freedom, -2 log(alpha).
double chisq2_upper_quantile(double alpha);

/// E|Z| for a standard normal Z.
inline constexpr double kMeanAbsNormal = 0.79788456080286535588; // sqrt(2/pi)

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
  long n = 0;
};

/// One-sample Kolmogorov-Smirnov test. The p-value uses Stephens' finite-n
/// modification (sqrt(n) + 0.12 + 0.11/sqrt(n)) D of the Kolmogorov limit law.
KsResult ks_test(std::span<const double> sample, const std::function<double(double)> &cdf);

/// P(K > x) for the Kolmogorov distribution.
double kolmogorov_survival(double x);

double mean(std::span<const double> v);
double variance(std::span<const double> v);

} // namespace hgd
