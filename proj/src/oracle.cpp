#include "hgd/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <random>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "hgd/errors.hpp"

namespace hgd {

namespace {

using boost::math::quadrature::gauss_kronrod;

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// log of x^m exp(a_0 + a_1 x + ... + a_d x^d) on x >= 0.
struct LogIntegrand {
  Eigen::VectorXd a; // ascending, a[d] < 0
  int m = 0;

  int degree() const { return static_cast<int>(a.size()) - 1; }

  double operator()(double x) const {
    double acc = 0.0;
    for (Eigen::Index k = a.size() - 1; k >= 0; --k)
      acc = acc * x + a[k];
    if (m > 0)
      acc += x > 0.0 ? m * std::log(x) : kNegInf;
    return acc;
  }
};

struct Window {
  double peak_x = 0.0;
  double log_peak = 0.0;
  double end = 0.0;
};

// Past `bound` the exponent is strictly decreasing, so the peak lies in
// [0, bound] and the tail cut is found by doubling + bisection.
Window find_window(const LogIntegrand &g, double log_ratio) {
  const int d = g.degree();
  const double lead = std::abs(g.a[d]);
  double spread = g.m;
  for (int k = 1; k < d; ++k)
    spread += k * std::abs(g.a[k]);
  const double bound = std::max(1.0, spread / (d * lead));

  constexpr int kScan = 400;
  Window w;
  w.log_peak = kNegInf;
  int best = 0;
  for (int i = 0; i <= kScan; ++i) {
    const double x = bound * i / kScan;
    const double v = g(x);
    if (v > w.log_peak) {
      w.log_peak = v;
      best = i;
    }
  }
  // Golden-section refinement around the best grid point.
  double lo = bound * std::max(0, best - 1) / kScan;
  double hi = bound * std::min(kScan, best + 1) / kScan;
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int it = 0; it < 80 && hi - lo > 1e-15 * (1.0 + hi); ++it) {
    const double x1 = hi - phi * (hi - lo);
    const double x2 = lo + phi * (hi - lo);
    if (g(x1) >= g(x2))
      hi = x2;
    else
      lo = x1;
  }
  const double xr = 0.5 * (lo + hi);
  if (g(xr) > w.log_peak) {
    w.log_peak = g(xr);
    w.peak_x = xr;
  } else {
    w.peak_x = bound * best / kScan;
  }

  const double cut = w.log_peak + log_ratio;
  if (g(bound) <= cut) {
    w.end = bound;
    return w;
  }
  double a = bound;
  double b = 2.0 * bound;
  while (g(b) > cut) {
    a = b;
    b *= 2.0;
  }
  for (int it = 0; it < 100 && b - a > 1e-12 * b; ++it) {
    const double mid = 0.5 * (a + b);
    (g(mid) > cut ? a : b) = mid;
  }
  w.end = b;
  return w;
}

std::string fmt_g(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

struct Scaled {
  double log_scale = 0.0;
  double value = 0.0; // integral of exp(g - log_scale)
  double error = 0.0;
  double l1 = 0.0;
};

template <typename F>
void integrate_pieces(F &&f, std::vector<double> cuts, const QuadOptions &opts, Scaled &out) {
  std::sort(cuts.begin(), cuts.end());
  // Slivers next to a cut upset the Kronrod error estimate; merge them.
  const double sliver = 0.05 * (cuts.back() - cuts.front()) / static_cast<double>(cuts.size());
  std::vector<double> kept{cuts.front()};
  for (std::size_t k = 1; k < cuts.size(); ++k) {
    if (cuts[k] - kept.back() > sliver)
      kept.push_back(cuts[k]);
    else if (k + 1 == cuts.size())
      kept.back() = cuts[k];
  }
  cuts = std::move(kept);
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    double err = 0.0;
    double l1 = 0.0;
    out.value += gauss_kronrod<double, 61>::integrate(f, cuts[k], cuts[k + 1], opts.max_depth,
                                                      opts.rel_tol, &err, &l1);
    out.error += err;
    out.l1 += l1;
  }
}

std::vector<double> even_cuts(double a, double b, int pieces) {
  std::vector<double> c;
  for (int i = 0; i <= pieces; ++i)
    c.push_back(a + (b - a) * i / pieces);
  return c;
}

Scaled integrate_half(const LogIntegrand &g, const QuadOptions &opts) {
  const Window w = find_window(g, opts.tail_log_ratio);
  Scaled out;
  out.log_scale = w.log_peak;
  auto f = [&](double x) { return std::exp(g(x) - w.log_peak); };
  std::vector<double> cuts = even_cuts(0.0, w.end, 8);
  if (w.peak_x > 0.0 && w.peak_x < w.end)
    cuts.push_back(w.peak_x);
  integrate_pieces(f, std::move(cuts), opts, out);
  return out;
}

void check_tolerance(const Scaled &s, const QuadOptions &opts, const char *what = "quadrature") {
  const double allowed = std::max(opts.abs_tol * std::exp(-s.log_scale), 10.0 * opts.rel_tol * s.l1);
  if (!(s.error <= allowed))
    throw Error(ErrorKind::ToleranceNotMet,
                std::string(what) + " error estimate " + fmt_g(s.error / std::max(s.l1, 1e-300)) +
                    " exceeds tolerance");
}

ThetaUni effective_theta(const ThetaUni &theta) {
  const Membership mem = classify_theta_uni(theta);
  if (mem.region == Region::Outside)
    throw Error(ErrorKind::DivergentIntegral,
                "last non-zero coefficient does not make the integral converge");
  return theta.truncated(mem.effective_order);
}

LogIntegrand side_integrand(const ThetaUni &theta, int m, bool mirrored) {
  LogIntegrand g;
  g.a = Eigen::VectorXd::Zero(theta.order() + 1);
  for (int k = 1; k <= theta.order(); ++k)
    g.a[k] = (mirrored && k % 2 == 1) ? -theta[k] : theta[k];
  g.m = m;
  return g;
}

} // namespace

double quad_moment_uni(const ThetaUni &theta_in, int m, const QuadOptions &opts) {
  if (m < 0)
    throw Error(ErrorKind::InvalidInput, "moment order must be non-negative");
  const ThetaUni theta = effective_theta(theta_in);
  const Scaled right = integrate_half(side_integrand(theta, m, false), opts);
  check_tolerance(right, opts);
  double total = std::exp(right.log_scale) * right.value;
  if (theta.support() == Support::RealLine) {
    const Scaled left = integrate_half(side_integrand(theta, m, true), opts);
    check_tolerance(left, opts);
    const double sign = m % 2 == 0 ? 1.0 : -1.0;
    total += sign * std::exp(left.log_scale) * left.value;
  }
  return total;
}

double quad_A_bi(const ThetaBi &theta, int s, int t, const QuadOptions &opts) {
  const int d = theta.degree();
  if (!in_proper_bivariate_space(theta))
    throw Error(ErrorKind::DivergentIntegral, "theta is not in the proper bivariate space");

  // log of the inner integral over x at fixed y, including y^t.
  auto inner_log = [&](double y) {
    LogIntegrand g;
    g.a = Eigen::VectorXd::Zero(d + 1);
    for (int i = 0; i <= d; ++i) {
      double acc = 0.0;
      for (int j = d - i; j >= 0; --j)
        acc = acc * y + theta(i, j);
      g.a[i] = acc;
    }
    g.m = s;
    const Scaled in = integrate_half(g, opts);
    check_tolerance(in, opts, "inner quadrature");
    double v = in.log_scale + std::log(in.value);
    if (t > 0)
      v += y > 0.0 ? t * std::log(y) : kNegInf;
    return v;
  };

  // Outer window by scanning: double the range until the far end is negligible.
  constexpr int kScan = 64;
  double reach = 1.0;
  double log_peak = kNegInf;
  double peak_y = 0.0;
  std::vector<double> grid(kScan + 1);
  for (int round = 0; round < 40; ++round) {
    log_peak = kNegInf;
    for (int i = 0; i <= kScan; ++i) {
      const double y = reach * i / kScan;
      grid[i] = inner_log(y);
      if (grid[i] > log_peak) {
        log_peak = grid[i];
        peak_y = y;
      }
    }
    if (grid[kScan] < log_peak + opts.tail_log_ratio)
      break;
    reach *= 2.0;
  }
  int last = kScan;
  while (last > 0 && grid[last - 1] < log_peak + opts.tail_log_ratio)
    --last;
  const double end = reach * last / kScan;

  Scaled out;
  out.log_scale = log_peak;
  auto f = [&](double y) { return std::exp(inner_log(y) - log_peak); };
  std::vector<double> cuts = even_cuts(0.0, end, 4);
  if (peak_y > 0.0 && peak_y < end)
    cuts.push_back(peak_y);
  QuadOptions outer = opts;
  outer.rel_tol = std::max(opts.rel_tol, 1e-11);
  integrate_pieces(f, std::move(cuts), outer, out);
  check_tolerance(out, outer, "outer quadrature");
  return std::exp(out.log_scale) * out.value;
}

double closed_form_A(const ThetaUni &theta_in) {
  const ThetaUni theta = effective_theta(theta_in);
  const int k = theta.order();
  if (k == 1 && theta.support() == Support::HalfLine)
    return -1.0 / theta[1];
  if (k == 2) {
    const double a = -theta[2];
    const double b = theta[1];
    const double gauss = std::exp(b * b / (4.0 * a));
    if (theta.support() == Support::RealLine)
      return std::sqrt(std::numbers::pi / a) * gauss;
    return std::sqrt(std::numbers::pi) / (2.0 * std::sqrt(a)) * gauss *
           std::erfc(-b / (2.0 * std::sqrt(a)));
  }
  throw Error(ErrorKind::UnsupportedOrder,
              "no closed form for order " + std::to_string(k) + " on this support");
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

UniSampler::UniSampler(const ThetaUni &theta_in, const QuadOptions &opts)
    : theta_(effective_theta(theta_in)) {
  const LogIntegrand right = side_integrand(theta_, 0, false);
  const Window wr = find_window(right, opts.tail_log_ratio + 4.6); // 1e-16 of the peak
  double lo = 0.0;
  log_shift_ = wr.log_peak;
  if (theta_.support() == Support::RealLine) {
    const LogIntegrand left = side_integrand(theta_, 0, true);
    const Window wl = find_window(left, opts.tail_log_ratio + 4.6);
    lo = -wl.end;
    log_shift_ = std::max(log_shift_, wl.log_peak);
  }
  const double hi = wr.end;
  auto dens = [&](double x) {
    double acc = 0.0;
    for (int k = theta_.order(); k >= 1; --k)
      acc = (acc + theta_[k]) * x;
    return std::exp(acc - log_shift_);
  };

  struct Cell {
    double a, b, fa, fb, mass;
  };
  auto mass_of = [&](double a, double b) {
    return gauss_kronrod<double, 21>::integrate(dens, a, b, 0, 0.0);
  };
  std::vector<Cell> work;
  constexpr int kInitial = 256;
  for (int i = kInitial - 1; i >= 0; --i) {
    const double a = lo + (hi - lo) * i / kInitial;
    const double b = lo + (hi - lo) * (i + 1) / kInitial;
    work.push_back({a, b, dens(a), dens(b), mass_of(a, b)});
  }
  double rough_total = 0.0;
  for (const auto &c : work)
    rough_total += c.mass;

  // Split a cell while the Hermite cubic misses the true half-cell mass.
  nodes_.push_back(lo);
  density_.push_back(dens(lo));
  cumulative_.push_back(0.0);
  while (!work.empty()) {
    Cell c = work.back();
    work.pop_back();
    const double mid = 0.5 * (c.a + c.b);
    const double left = mass_of(c.a, mid);
    const double w = c.b - c.a;
    double m0 = c.fa, m1 = c.fb;
    const double slope = c.mass / w;
    if (slope > 0.0) {
      const double al = m0 / slope, be = m1 / slope;
      const double r = al * al + be * be;
      if (r > 9.0) {
        const double tau = 3.0 / std::sqrt(r);
        m0 *= tau;
        m1 *= tau;
      }
    }
    // Hermite basis at t = 1/2: h00 = h01 = 1/2, h10 = 1/8, h11 = -1/8.
    const double predicted = 0.5 * c.mass + w * (m0 - m1) / 8.0;
    if (std::abs(predicted - left) > 1e-12 * rough_total && w > 1e-9 * (hi - lo)) {
      const double fm = dens(mid);
      work.push_back({mid, c.b, fm, c.fb, c.mass - left});
      work.push_back({c.a, mid, c.fa, fm, left});
      continue;
    }
    nodes_.push_back(c.b);
    density_.push_back(c.fb);
    cumulative_.push_back(cumulative_.back() + c.mass);
  }
  total_ = cumulative_.back();
}

double UniSampler::slope(std::size_t cell, bool right) const {
  const double w = nodes_[cell + 1] - nodes_[cell];
  const double mass = cumulative_[cell + 1] - cumulative_[cell];
  double m0 = density_[cell], m1 = density_[cell + 1];
  const double s = mass / w;
  if (s > 0.0) {
    const double al = m0 / s, be = m1 / s;
    const double r = al * al + be * be;
    if (r > 9.0) {
      const double tau = 3.0 / std::sqrt(r);
      m0 *= tau;
      m1 *= tau;
    }
  }
  return right ? m1 : m0;
}

double UniSampler::hermite(std::size_t cell, double x) const {
  const double a = nodes_[cell];
  const double w = nodes_[cell + 1] - a;
  const double t = (x - a) / w;
  const double t2 = t * t, t3 = t2 * t;
  const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t;
  const double h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
  return h00 * cumulative_[cell] + h10 * w * slope(cell, false) + h01 * cumulative_[cell + 1] +
         h11 * w * slope(cell, true);
}

double UniSampler::cdf(double x) const {
  if (x <= nodes_.front())
    return 0.0;
  if (x >= nodes_.back())
    return 1.0;
  const auto it = std::upper_bound(nodes_.begin(), nodes_.end(), x);
  const std::size_t cell = static_cast<std::size_t>(it - nodes_.begin()) - 1;
  return std::clamp(hermite(cell, x) / total_, 0.0, 1.0);
}

double UniSampler::quantile(double u) const {
  if (!(u > 0.0 && u < 1.0))
    throw Error(ErrorKind::InvalidInput, "quantile level must lie in (0, 1)");
  const double target = u * total_;
  const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), target);
  std::size_t cell = static_cast<std::size_t>(it - cumulative_.begin());
  cell = std::clamp<std::size_t>(cell, 1, nodes_.size() - 1) - 1;
  double a = nodes_[cell], b = nodes_[cell + 1];
  double x = a + (b - a) * (target - cumulative_[cell]) /
                     std::max(cumulative_[cell + 1] - cumulative_[cell], 1e-300);
  // Safeguarded Newton on the monotone cubic.
  for (int it2 = 0; it2 < 60; ++it2) {
    const double r = hermite(cell, x) - target;
    if (r > 0.0)
      b = x;
    else
      a = x;
    const double w = nodes_[cell + 1] - nodes_[cell];
    const double t = (x - nodes_[cell]) / w;
    const double dh00 = 6 * t * t - 6 * t, dh10 = 3 * t * t - 4 * t + 1;
    const double dh01 = -dh00, dh11 = 3 * t * t - 2 * t;
    const double deriv = (dh00 * cumulative_[cell] + dh01 * cumulative_[cell + 1]) / w +
                         dh10 * slope(cell, false) + dh11 * slope(cell, true);
    double next = deriv > 0.0 ? x - r / deriv : 0.5 * (a + b);
    if (!(next > a && next < b))
      next = 0.5 * (a + b);
    if (std::abs(next - x) <= 1e-15 * (1.0 + std::abs(x)))
      return next;
    x = next;
  }
  return x;
}

std::vector<double> UniSampler::draw(long n, std::uint64_t seed) const {
  Rng rng(seed);
  std::vector<double> out(static_cast<std::size_t>(std::max(0L, n)));
  for (auto &x : out)
    x = quantile(rng.uniform());
  return out;
}

std::vector<double> sample_uni(const ThetaUni &theta, long n, std::uint64_t seed) {
  return UniSampler(theta).draw(n, seed);
}

int companion_real_root_count(const Poly<double> &p, Interval<double> iv, double imag_tol) {
  const int n = p.degree();
  if (n == 0)
    return 0;
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(n, n);
  for (int i = 1; i < n; ++i)
    C(i, i - 1) = 1.0;
  for (int i = 0; i < n; ++i)
    C(i, n - 1) = -p[i] / p.lead();
  const Eigen::VectorXcd ev = Eigen::EigenSolver<Eigen::MatrixXd>(C, false).eigenvalues();
  int count = 0;
  for (const auto &z : ev) {
    if (std::abs(z.imag()) <= imag_tol * (1.0 + std::abs(z.real())) && z.real() > iv.lo &&
        z.real() <= iv.hi)
      ++count;
  }
  return count;
}

} // namespace hgd
