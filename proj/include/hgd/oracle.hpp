#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "hgd/domain.hpp"
#include "hgd/polyalg.hpp"

namespace hgd {

// Independent reference computations: direct quadrature, closed forms, and
// sampling. Nothing in here uses the holonomic engines.

struct QuadOptions {
  double rel_tol = 1e-12;
  double abs_tol = 0.0;
  /// Integrand is truncated where it falls below exp(tail_log_ratio) of its peak.
  double tail_log_ratio = -41.446531673892822; // log(1e-18)
  unsigned max_depth = 18;
};

/// Integral of x^m exp(theta_1 x + ... + theta_d x^d) over the support.
double quad_moment_uni(const ThetaUni &theta, int m, const QuadOptions &opts = {});

/// Integral of x^s y^t h(theta, x, y) over the positive quadrant (nested 1-D).
double quad_A_bi(const ThetaBi &theta, int s, int t, const QuadOptions &opts = {});

/// d = 1: -1/theta_1; half-line d = 2: erfc form; real-line order 2: Gaussian.
double closed_form_A(const ThetaUni &theta);

/// Seed splitter (splitmix64 finaliser of seed + index). Replication r of a
/// run with seed s uses derive_seed(s, r).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

/// 64-bit Mersenne Twister with the uniform mapping used everywhere in the
/// project: u = (top 53 bits + 1/2) * 2^-53, so u never hits 0 or 1.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}
  double uniform() { return (static_cast<double>(eng_() >> 11) + 0.5) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

private:
  std::mt19937_64 eng_;
};

/// Inverse-CDF sampler: the CDF is integrated cell by cell on an adaptively
/// refined grid over the truncated support and interpolated by a monotone
/// cubic Hermite spline with the density as slope.
class UniSampler {
public:
  explicit UniSampler(const ThetaUni &theta, const QuadOptions &opts = {});

  double cdf(double x) const;
  double quantile(double u) const;
  /// n draws from a 64-bit Mersenne Twister seeded with `seed`.
  std::vector<double> draw(long n, std::uint64_t seed) const;

  double lower() const { return nodes_.front(); }
  double upper() const { return nodes_.back(); }
  std::size_t cells() const { return nodes_.size() - 1; }

private:
  double slope(std::size_t cell, bool right) const;
  double hermite(std::size_t cell, double x) const;

  ThetaUni theta_;
  double log_shift_ = 0.0;
  std::vector<double> nodes_;
  std::vector<double> density_;    // unnormalised, shifted density at nodes
  std::vector<double> cumulative_; // normalised CDF at nodes
  double total_ = 0.0;
};

std::vector<double> sample_uni(const ThetaUni &theta, long n, std::uint64_t seed);

/// Number of real roots in (lo, hi] from the eigenvalues of the companion
/// matrix; a root counts as real when |Im| <= imag_tol * (1 + |Re|).
int companion_real_root_count(const Poly<double> &p, Interval<double> iv = {},
                              double imag_tol = 1e-7);

} // namespace hgd
