#include <algorithm>
#include <cmath>
#include <complex>
#include <string>

#include <boost/math/special_functions/gamma.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/eigen.hpp>

#include "hgd/errors.hpp"
#include "hgd/holo_uni.hpp"
#include "hgd/ode.hpp"

namespace hgd {

double precision_loss(const ThetaUni &theta, int max_order) {
  const int d = theta.order();
  if (d < 2 || !(theta.leading_coeff() < 0.0))
    return 0.0;
  // Companion matrix of p'(z) / (d theta_d).
  const int n = d - 1;
  const double lead = d * theta.leading_coeff();
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(n, n);
  for (int i = 1; i < n; ++i)
    C(i, i - 1) = 1.0;
  for (int i = 0; i < n; ++i)
    C(i, n - 1) = -(i + 1) * theta[i + 1] / lead;
  const Eigen::VectorXcd z = C.eigenvalues();

  auto p = [&](std::complex<double> x) {
    std::complex<double> acc = 0.0;
    for (int k = d; k >= 1; --k)
      acc = (acc + theta[k]) * x;
    return acc;
  };
  const bool half = theta.support() == Support::HalfLine;
  double pmax = half ? 0.0 : -INFINITY, xmax = 0.0;
  for (const auto &r : z) {
    if (std::abs(r.imag()) > 1e-7 * (1.0 + std::abs(r)) || (half && r.real() < 0.0))
      continue;
    const double v = p(r.real()).real();
    if (v > pmax) {
      pmax = v;
      xmax = r.real();
    }
  }
  if (!std::isfinite(pmax))
    pmax = 0.0;
  const double scale = std::max(std::abs(xmax), std::pow(-theta.leading_coeff(), -1.0 / d));
  double loss = 0.0;
  for (const auto &r : z) {
    const double growth = max_order * std::log(std::max(1.0, std::abs(r) / scale));
    loss = std::max(loss, p(r).real() - pmax + growth);
  }
  return loss;
}

double path_precision_loss(const ThetaUni &a, const ThetaUni &b, int max_order) {
  constexpr int kSamples = 16;
  const Eigen::VectorXd h = b.coeffs() - a.coeffs();
  double loss = precision_loss(b, max_order);
  for (int i = 0; i < kSamples; ++i)
    loss = std::max(loss, precision_loss(ThetaUni(Eigen::VectorXd(a.coeffs() + (double(i) / kSamples) * h),
                                                  b.support()),
                                         0));
  return loss;
}

namespace {

namespace mp = boost::multiprecision;
template <unsigned Digits>
using Float = mp::number<mp::cpp_bin_float<Digits>, mp::et_off>;

template <typename R>
Eigen::VectorXd derivs_in(const ThetaUni &theta, int max_order, int digits) {
  using Vec = Eigen::Matrix<R, Eigen::Dynamic, 1>;
  const int d = theta.order();
  const int L = state_length(d);
  const bool half = theta.support() == Support::HalfLine;
  Vec coef(d);
  for (int k = 0; k < d; ++k)
    coef[k] = R(theta[k + 1]);
  const R inv = R(-1) / (d * coef[d - 1]);

  auto extend = [&](const Vec &th, const Vec &F, int top) {
    top = std::max(top, L - 1);
    Vec v(top + 1);
    v.head(L) = F;
    for (int n = L; n <= top; ++n) {
      const int m = n - (d - 1);
      R acc = (half && m == 0) ? R(1) : R(0);
      if (m > 0)
        acc += m * v[m - 1];
      for (int k = 1; k < d; ++k)
        acc += k * th[k - 1] * v[k - 1 + m];
      v[n] = inv * acc;
    }
    return v;
  };

  const R c = -coef[d - 1];
  Vec F(L);
  for (int m = 0; m < L; ++m) {
    if (!half && m % 2 == 1) {
      F[m] = 0;
      continue;
    }
    const R a = R(1 + m) / d;
    F[m] = R(half ? 1 : 2) / d * pow(c, -a) * boost::math::tgamma(a);
  }

  Vec h = coef;
  h[d - 1] = 0;
  auto rhs = [&](const R &s, const Vec &y) {
    Vec th = s * h;
    th[d - 1] = coef[d - 1];
    const Vec v = extend(th, y, d + L - 1);
    Vec out = Vec::Zero(L);
    for (int j = 1; j < d; ++j)
      if (h[j - 1] != 0)
        out += h[j - 1] * v.segment(j, L);
    return out;
  };
  F = extrapolated_midpoint<R>(rhs, std::move(F), pow(R(10), -digits));
  const Vec v = extend(coef, F, max_order);
  Eigen::VectorXd out(max_order + 1);
  for (int m = 0; m <= max_order; ++m)
    out[m] = static_cast<double>(v[m]);
  if (!out.allFinite())
    throw Error(ErrorKind::OdeDivergence, "extended-precision values overflow double");
  return out;
}

} // namespace

Eigen::VectorXd norm_const_and_derivs_extended(const ThetaUni &theta, int max_order, int digits) {
  if (!(theta.leading_coeff() < 0.0))
    throw Error(ErrorKind::OutsideDomain, "norm_const_and_derivs_extended: leading coefficient must be negative");
  if (digits + 6 <= 50)
    return derivs_in<Float<50>>(theta, max_order, digits);
  if (digits + 6 <= 100)
    return derivs_in<Float<100>>(theta, max_order, digits);
  if (digits + 6 <= 200)
    return derivs_in<Float<200>>(theta, max_order, digits);
  if (digits + 6 <= 400)
    return derivs_in<Float<400>>(theta, max_order, digits);
  throw Error(ErrorKind::OdeDivergence,
              "conditioning needs " + std::to_string(digits) + " digits, more than 394 are not supported");
}

} // namespace hgd
