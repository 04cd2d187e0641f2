#include "hgd/domain.hpp"

#include <limits>
#include <string>

#include "hgd/errors.hpp"
#include "hgd/polyalg.hpp"

namespace hgd {

ThetaUni::ThetaUni(Eigen::VectorXd coeffs, Support support)
    : coeffs_(std::move(coeffs)), support_(support) {
  if (coeffs_.size() < 1)
    throw Error(ErrorKind::InvalidOrder, "order must be at least 1");
  if (support_ == Support::RealLine && coeffs_.size() % 2 != 0)
    throw Error(ErrorKind::InvalidOrder,
                "real-line order must be even, got " + std::to_string(coeffs_.size()));
}

ThetaUni::ThetaUni(std::initializer_list<double> coeffs, Support support)
    : ThetaUni(Eigen::Map<const Eigen::VectorXd>(coeffs.begin(),
                                                 static_cast<Eigen::Index>(coeffs.size())),
               support) {}

ThetaUni ThetaUni::leading(int order, double c, Support support) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(order);
  if (order >= 1)
    v[order - 1] = -c;
  return ThetaUni(std::move(v), support);
}

ThetaUni ThetaUni::embedded(int order) const {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(order);
  const int k = std::min(order, this->order());
  v.head(k) = coeffs_.head(k);
  return ThetaUni(std::move(v), support_);
}

ThetaUni ThetaUni::truncated(int order) const {
  return ThetaUni(Eigen::VectorXd(coeffs_.head(order)), support_);
}

ThetaBi::ThetaBi(int d) : d_(d), c_(Eigen::MatrixXd::Zero(d + 1, d + 1)) {
  if (d < 1)
    throw Error(ErrorKind::InvalidOrder, "bivariate degree must be at least 1");
}

ThetaBi::ThetaBi(int d, std::span<const double> flat) : ThetaBi(d) {
  if (static_cast<int>(flat.size()) != size_for(d))
    throw Error(ErrorKind::InvalidInput,
                "expected " + std::to_string(size_for(d)) + " bivariate coefficients, got " +
                    std::to_string(flat.size()));
  for (int k = 0; k < size_for(d); ++k) {
    const auto [i, j] = flat_pair(k);
    c_(i, j) = flat[k];
  }
}

ThetaBi::ThetaBi(int d, std::initializer_list<double> flat)
    : ThetaBi(d, std::span<const double>(flat.begin(), flat.size())) {}

ThetaBi ThetaBi::product_point(int d, double c1, double c2) {
  ThetaBi t(d);
  t(d, 0) = -c1;
  t(0, d) = -c2;
  return t;
}

int ThetaBi::flat_index(int i, int j) {
  const int k = i + j;
  // k(k+1)/2 - 1 entries precede total degree k; within it x-power descends.
  return k * (k + 1) / 2 - 1 + (k - i);
}

std::pair<int, int> ThetaBi::flat_pair(int index) {
  int k = 1;
  while ((k + 1) * (k + 2) / 2 - 1 <= index)
    ++k;
  const int offset = index - (k * (k + 1) / 2 - 1);
  return {k - offset, offset};
}

Eigen::VectorXd ThetaBi::flat() const {
  Eigen::VectorXd v(size());
  for (int k = 0; k < size(); ++k) {
    const auto [i, j] = flat_pair(k);
    v[k] = c_(i, j);
  }
  return v;
}

Eigen::VectorXd ThetaBi::top_poly() const {
  Eigen::VectorXd a(d_ + 1);
  for (int k = 0; k <= d_; ++k)
    a[k] = c_(k, d_ - k);
  return a;
}

ThetaBi ThetaBi::transposed() const {
  ThetaBi t(d_);
  t.c_ = c_.transpose();
  return t;
}

ThetaUni ThetaBi::axis_x() const {
  Eigen::VectorXd v(d_);
  for (int i = 1; i <= d_; ++i)
    v[i - 1] = c_(i, 0);
  return ThetaUni(std::move(v), Support::HalfLine);
}

ThetaUni ThetaBi::axis_y() const {
  Eigen::VectorXd v(d_);
  for (int j = 1; j <= d_; ++j)
    v[j - 1] = c_(0, j);
  return ThetaUni(std::move(v), Support::HalfLine);
}

Membership classify_theta_uni(const ThetaUni &theta) {
  int k = theta.order();
  while (k > 0 && theta[k] == 0.0)
    --k;
  Membership m;
  m.effective_order = k;
  if (k == 0 || theta[k] > 0.0) {
    m.region = Region::Outside;
  } else if (theta.support() == Support::RealLine && k % 2 != 0) {
    // An odd leading power diverges on one of the two tails.
    m.region = Region::Outside;
  } else {
    m.region = k == theta.order() ? Region::Interior : Region::Boundary;
  }
  return m;
}

bool in_proper_bivariate_space(const ThetaBi &theta) {
  const int d = theta.degree();
  if (!(theta(d, 0) < 0.0) || !(theta(0, d) < 0.0))
    return false;
  const Poly<double> p(theta.top_poly());
  const double inf = std::numeric_limits<double>::infinity();
  // A multiple root on the positive axis touches zero, so it is not proper
  // either; the chain ending at gcd(p, p') counts it like a simple one.
  return count_real_roots(p, Interval<double>{0.0, inf}, /*allow_multiple=*/true) == 0;
}

SuffStatsUni suff_stats(std::span<const double> sample, int order, Support support) {
  if (sample.empty())
    throw Error(ErrorKind::EmptySample, "sample has no observations");
  if (order < 1)
    throw Error(ErrorKind::InvalidOrder, "moment order must be at least 1");
  SuffStatsUni s;
  s.n = static_cast<long>(sample.size());
  s.moments = Eigen::VectorXd::Zero(order);
  for (double x : sample) {
    if (support == Support::HalfLine && x < 0.0)
      throw Error(ErrorKind::NegativeDatum, "half-line sample contains " + std::to_string(x));
    double p = 1.0;
    for (int m = 0; m < order; ++m) {
      p *= x;
      s.moments[m] += p;
    }
  }
  s.moments /= static_cast<double>(s.n);
  return s;
}

SuffStatsBi suff_stats(std::span<const std::array<double, 2>> sample, int d) {
  if (sample.empty())
    throw Error(ErrorKind::EmptySample, "sample has no observations");
  if (d < 1)
    throw Error(ErrorKind::InvalidOrder, "moment order must be at least 1");
  SuffStatsBi s;
  s.n = static_cast<long>(sample.size());
  s.d = d;
  s.means = Eigen::MatrixXd::Zero(d + 1, d + 1);
  for (const auto &[x, y] : sample) {
    if (x < 0.0 || y < 0.0)
      throw Error(ErrorKind::NegativeDatum, "orthant sample has a negative coordinate");
    double px = 1.0;
    for (int s_ = 0; s_ <= d; ++s_) {
      double py = 1.0;
      for (int t = 0; s_ + t <= d; ++t) {
        s.means(s_, t) += px * py;
        py *= y;
      }
      px *= x;
    }
  }
  s.means /= static_cast<double>(s.n);
  return s;
}

} // namespace hgd
