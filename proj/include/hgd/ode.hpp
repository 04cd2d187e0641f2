#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hgd/errors.hpp"

namespace hgd {

struct OdeOptions {
  enum class Method { Rk4Fixed, Adaptive };

  Method method = Method::Adaptive;
  /// Rk4Fixed: number of steps per unit Euclidean length of the parameter path.
  double steps_per_unit = 1000.0;
  /// Adaptive: local error relative to the sup-norm of the state.
  double rel_tol = 1e-10;
  long max_steps = 1'000'000;
  /// Rk4Fixed: also run the half-resolution solve to get a Richardson estimate.
  bool estimate_error = true;
  /// Univariate engine: points whose precision_loss exceeds this are refused
  /// (OdeDivergence) rather than computed in ever wider arithmetic.
  double max_precision_loss = 150.0;
};

struct OdeResult {
  Eigen::VectorXd y;
  double error_estimate = 0.0; // relative to |y|_inf
  long steps = 0;
};

namespace detail {

inline bool all_finite(const Eigen::VectorXd &v) { return v.allFinite(); }

inline double sup_norm(const Eigen::VectorXd &v) {
  return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
}

template <typename Rhs, typename Monitor>
Eigen::VectorXd rk4(Rhs &f, Eigen::VectorXd y, long n, Monitor &monitor) {
  const double h = 1.0 / static_cast<double>(n);
  for (long k = 0; k < n; ++k) {
    const double s = k * h;
    const Eigen::VectorXd k1 = f(s, y);
    const Eigen::VectorXd k2 = f(s + 0.5 * h, Eigen::VectorXd(y + 0.5 * h * k1));
    const Eigen::VectorXd k3 = f(s + 0.5 * h, Eigen::VectorXd(y + 0.5 * h * k2));
    const Eigen::VectorXd k4 = f(s + h, Eigen::VectorXd(y + h * k3));
    y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!all_finite(y))
      throw Error(ErrorKind::OdeDivergence, "non-finite state during RK4 step");
    monitor(s + h, y);
  }
  return y;
}

// Dormand-Prince 5(4) with FSAL and a standard step-size controller.
template <typename Rhs, typename Monitor>
OdeResult dopri5(Rhs &f, Eigen::VectorXd y, double path_length, const OdeOptions &opts,
                 Monitor &monitor) {
  constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  constexpr double a21 = 1.0 / 5;
  constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                   a54 = -212.0 / 729;
  constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                   a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                   b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                   e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

  OdeResult out;
  double s = 0.0;
  double h = std::min(1.0, 0.05 / std::max(path_length, 1e-300));
  Eigen::VectorXd k1 = f(s, y);
  long attempts = 0;
  while (s < 1.0) {
    if (++attempts > opts.max_steps)
      throw Error(ErrorKind::OdeDivergence, "exceeded max_steps");
    h = std::min(h, 1.0 - s);
    if (h < 1e-14)
      throw Error(ErrorKind::OdeDivergence, "step size underflow at s = " + std::to_string(s));
    const Eigen::VectorXd k2 = f(s + c2 * h, Eigen::VectorXd(y + h * a21 * k1));
    const Eigen::VectorXd k3 = f(s + c3 * h, Eigen::VectorXd(y + h * (a31 * k1 + a32 * k2)));
    const Eigen::VectorXd k4 =
        f(s + c4 * h, Eigen::VectorXd(y + h * (a41 * k1 + a42 * k2 + a43 * k3)));
    const Eigen::VectorXd k5 =
        f(s + c5 * h, Eigen::VectorXd(y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4)));
    const Eigen::VectorXd k6 = f(
        s + h, Eigen::VectorXd(y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5)));
    Eigen::VectorXd ynew = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    if (!all_finite(ynew)) {
      h *= 0.25;
      continue;
    }
    const Eigen::VectorXd k7 = f(s + h, ynew);
    const Eigen::VectorXd errv = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    const double scale = std::max(sup_norm(y), sup_norm(ynew));
    const double local = scale > 0.0 ? sup_norm(errv) / scale : sup_norm(errv);
    const double ratio = local / opts.rel_tol;
    if (ratio <= 1.0) {
      s += h;
      y = std::move(ynew);
      k1 = k7;
      out.error_estimate += local;
      ++out.steps;
      monitor(s, y);
    }
    const double fac = ratio > 0.0 ? 0.9 * std::pow(ratio, -0.2) : 5.0;
    h *= std::clamp(fac, 0.2, 5.0);
  }
  out.y = std::move(y);
  return out;
}

} // namespace detail

/// Integrates dy/ds = f(s, y) over s in [0, 1]. `path_length` is the Euclidean
/// length of the parameter segment (sets the fixed step count and the first
/// adaptive step). `monitor(s, y)` runs after each accepted step and may throw.
template <typename Rhs, typename Monitor>
OdeResult integrate_unit(Rhs &&f, Eigen::VectorXd y0, double path_length,
                         const OdeOptions &opts, Monitor &&monitor) {
  if (y0.size() == 0 || path_length == 0.0)
    return OdeResult{std::move(y0), 0.0, 0};
  if (opts.method == OdeOptions::Method::Adaptive) {
    if (!(opts.rel_tol > 0.0))
      throw Error(ErrorKind::InvalidInput, "ODE tolerance must be positive");
    return detail::dopri5(f, std::move(y0), path_length, opts, monitor);
  }
  if (!(opts.steps_per_unit > 0.0))
    throw Error(ErrorKind::InvalidInput, "steps_per_unit must be positive");
  long n = std::max(1L, static_cast<long>(std::ceil(opts.steps_per_unit * path_length)));
  if (opts.estimate_error)
    n += n % 2;
  if (n > opts.max_steps)
    throw Error(ErrorKind::OdeDivergence, "fixed step count exceeds max_steps");
  OdeResult out;
  out.y = detail::rk4(f, y0, n, monitor);
  out.steps = n;
  if (opts.estimate_error && n >= 2) {
    auto quiet = [](double, const Eigen::VectorXd &) {};
    const Eigen::VectorXd coarse = detail::rk4(f, std::move(y0), n / 2, quiet);
    const double scale = detail::sup_norm(out.y);
    out.error_estimate = detail::sup_norm(out.y - coarse) / 15.0 / (scale > 0 ? scale : 1.0);
  }
  return out;
}

template <typename Rhs>
OdeResult integrate_unit(Rhs &&f, Eigen::VectorXd y0, double path_length,
                         const OdeOptions &opts) {
  return integrate_unit(std::forward<Rhs>(f), std::move(y0), path_length, opts,
                        [](double, const Eigen::VectorXd &) {});
}

/// Gragg-Bulirsch-Stoer extrapolation over s in [0, 1], generic in the scalar
/// type so it can run in extended precision. Error is measured componentwise
/// relative to max(|y_i|, 1e-20 |y|_inf).
template <typename Scalar, typename Rhs>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1>
extrapolated_midpoint(Rhs &&f, Eigen::Matrix<Scalar, Eigen::Dynamic, 1> y, const Scalar &tol,
                      long max_steps = 100'000) {
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  if (y.size() == 0)
    return y;
  // Deeper tables for tighter tolerances keep the step count moderate.
  const int kRows = std::clamp(static_cast<int>(-std::log10(static_cast<double>(tol)) / 3) + 6, 12, 40);
  const int kTarget = 2 * kRows / 3;
  auto rel_err = [](const Vec &a, const Vec &b) {
    using std::abs;
    const Scalar floor = a.cwiseAbs().maxCoeff() * Scalar(1e-20);
    Scalar worst = 0;
    for (Eigen::Index i = 0; i < a.size(); ++i) {
      const Scalar scale = std::max(Scalar(abs(a[i])), floor);
      if (scale > 0)
        worst = std::max(worst, Scalar(abs(a[i] - b[i]) / scale));
    }
    return worst;
  };
  Scalar s = 0, H = Scalar(1) / 8;
  long steps = 0;
  std::vector<Vec> prev, cur;
  while (s < 1) {
    if (++steps > max_steps)
      throw Error(ErrorKind::OdeDivergence, "extrapolation exceeded max_steps");
    if (H > 1 - s)
      H = 1 - s;
    if (H < Scalar(1e-12))
      throw Error(ErrorKind::OdeDivergence, "extrapolation step size underflow");
    const Vec f0 = f(s, y);
    int accepted = -1;
    prev.clear();
    for (int j = 0; j < kRows; ++j) {
      const int n = 2 * (j + 1);
      const Scalar h = H / n;
      Vec z0 = y, z1 = y + h * f0;
      for (int m = 1; m < n; ++m) {
        Vec z2 = z0 + Scalar(2) * h * f(s + m * h, z1);
        z0 = std::move(z1);
        z1 = std::move(z2);
      }
      cur.assign(1, (z0 + z1 + h * f(s + H, z1)) / Scalar(2));
      for (int k = 1; k <= j; ++k) {
        const Scalar r = Scalar(n) / (2 * (j - k + 1));
        cur.push_back(cur[k - 1] + (cur[k - 1] - prev[k - 1]) / (r * r - 1));
      }
      if (!cur[j].array().isFinite().all())
        break;
      if (j >= 2 && rel_err(cur[j], cur[j - 1]) <= tol) {
        accepted = j;
        break;
      }
      std::swap(prev, cur);
    }
    if (accepted < 0) {
      H /= 3;
      continue;
    }
    s += H;
    y = cur[accepted];
    if (accepted < kTarget - 1)
      H *= Scalar(3) / 2;
    else if (accepted > kTarget)
      H *= Scalar(7) / 10;
  }
  return y;
}

} // namespace hgd
