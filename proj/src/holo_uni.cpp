#include "hgd/holo_uni.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

#include "hgd/errors.hpp"

namespace hgd {

namespace {

void require_interior(const ThetaUni &theta, const char *what) {
  const double lead = theta.leading_coeff();
  if (lead == 0.0)
    throw Error(ErrorKind::SingularLeadingCoefficient,
                std::string(what) + ": theta_" + std::to_string(theta.order()) + " = 0");
  if (lead > 0.0)
    throw Error(ErrorKind::OutsideDomain, std::string(what) + ": theta_" +
                                              std::to_string(theta.order()) + " = " +
                                              std::to_string(lead) + " must be negative");
}

} // namespace

HoloStateUni initial_state(int order, double c, Support support) {
  if (!(c > 0.0))
    throw Error(ErrorKind::NonPositiveScale, "initial scale c must be positive");
  HoloStateUni st{ThetaUni::leading(order, c, support), Eigen::VectorXd(state_length(order)), 0.0};
  const double d = order;
  for (int m = 0; m < state_length(order); ++m) {
    if (support == Support::RealLine && m % 2 == 1) {
      st.F[m] = 0.0;
      continue;
    }
    const double a = (1.0 + m) / d;
    // Whole line doubles the half-line integral of the even moment.
    const double factor = support == Support::RealLine ? 2.0 : 1.0;
    st.F[m] = factor / d * std::pow(c, -a) * std::tgamma(a);
  }
  return st;
}

Eigen::VectorXd extend_derivatives(const ThetaUni &theta, const Eigen::Ref<const Eigen::VectorXd> &F,
                                   int max_order) {
  require_interior(theta, "extend_derivatives");
  const int d = theta.order();
  const int L = state_length(d);
  if (F.size() != L)
    throw Error(ErrorKind::InvalidInput, "state length does not match order");
  const int top = std::max(max_order, L - 1);
  Eigen::VectorXd v(top + 1);
  v.head(L) = F;
  const double inv = -1.0 / (d * theta.leading_coeff());
  const bool half = theta.support() == Support::HalfLine;
  for (int n = L; n <= top; ++n) {
    const int m = n - (d - 1);
    double acc = (half && m == 0) ? 1.0 : 0.0;
    if (m > 0)
      acc += m * v[m - 1];
    for (int k = 1; k < d; ++k)
      acc += k * theta[k] * v[k - 1 + m];
    v[n] = inv * acc;
  }
  return v.head(max_order + 1);
}

Eigen::VectorXd extend_derivatives(const HoloStateUni &state, int max_order) {
  return extend_derivatives(state.theta, state.F, max_order);
}

Eigen::VectorXd pfaffian_rhs(const ThetaUni &theta, const Eigen::Ref<const Eigen::VectorXd> &F,
                             const Eigen::Ref<const Eigen::VectorXd> &direction) {
  const int d = theta.order();
  const int L = state_length(d);
  const Eigen::VectorXd v = extend_derivatives(theta, F, d + L - 1);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(L);
  for (int j = 1; j <= d; ++j) {
    if (direction[j - 1] != 0.0)
      out += direction[j - 1] * v.segment(j, L);
  }
  return out;
}

namespace {

// Low-order Hankel (and, on the half-line, shifted Hankel) matrices of a true
// moment sequence are positive definite. Parasitic solutions of the
// differential system break this long before they dominate A itself.
bool looks_like_moments(const HoloStateUni &st) {
  if (st.F.size() == 0)
    return true;
  if (!st.F.allFinite() || !(st.F[0] > 0.0))
    return false;
  const int k = std::min(st.theta.order(), 2);
  const Eigen::VectorXd D = extend_derivatives(st, 2 * k + 1);
  auto pd = [&](int shift, int n) {
    Eigen::MatrixXd H(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        H(i, j) = D[i + j + shift];
    const Eigen::VectorXd s = H.diagonal().cwiseAbs().cwiseSqrt().cwiseInverse();
    if (!s.allFinite())
      return false;
    H = s.asDiagonal() * H * s.asDiagonal();
    return H.llt().info() == Eigen::Success;
  };
  if (!pd(0, k + 1))
    return false;
  return st.theta.support() == Support::RealLine || pd(1, k + 1);
}

} // namespace

HoloStateUni transport(const HoloStateUni &state, const ThetaUni &target, const OdeOptions &opts) {
  if (state.theta.order() != target.order() || state.theta.support() != target.support())
    throw Error(ErrorKind::InvalidInput, "transport endpoints differ in order or support");
  require_interior(state.theta, "transport source");
  require_interior(target, "transport target");
  const Eigen::VectorXd origin = state.theta.coeffs();
  const Eigen::VectorXd h = target.coeffs() - origin;
  const double length = h.norm();
  if (length == 0.0)
    return state;
  const Support support = target.support();
  const int d = target.order();
  auto rhs = [&](double s, const Eigen::VectorXd &F) {
    const ThetaUni at(Eigen::VectorXd(origin + s * h), support);
    if (!(at.leading_coeff() < 0.0))
      throw Error(ErrorKind::PathSingularity,
                  "theta_" + std::to_string(d) + " reaches 0 along the segment");
    return pfaffian_rhs(at, F, h);
  };
  OdeResult res = integrate_unit(rhs, state.F, length, opts);
  HoloStateUni out{target, std::move(res.y), res.error_estimate};
  if (!looks_like_moments(out))
    throw Error(ErrorKind::OdeDivergence,
                "transported values are not a moment sequence (solution lost to round-off growth)");
  return out;
}

Eigen::VectorXd norm_const_and_derivs(const ThetaUni &theta, int max_order, const OdeOptions &opts) {
  require_interior(theta, "norm_const_and_derivs");
  const HoloStateUni start =
      initial_state(theta.order(), std::abs(theta.leading_coeff()), theta.support());
  const double loss = path_precision_loss(start.theta, theta, max_order);
  if (loss <= kDoubleLossLimit) {
    try {
      return extend_derivatives(transport(start, theta, opts), max_order);
    } catch (const Error &e) {
      if (e.kind() != ErrorKind::OdeDivergence)
        throw;
    }
  }
  if (loss > opts.max_precision_loss)
    throw Error(ErrorKind::OdeDivergence, "ill-conditioned point: estimated precision loss e^" +
                                              std::to_string(loss) + " exceeds the limit");
  return norm_const_and_derivs_extended(theta, max_order, extended_digits(loss));
}

double prefactor_norm_const(std::span<const double> eta, const ThetaUni &theta,
                            const OdeOptions &opts) {
  if (eta.empty())
    throw Error(ErrorKind::InvalidInput, "prefactor polynomial has no coefficients");
  const int h = static_cast<int>(eta.size()) - 1;
  const Eigen::VectorXd v = norm_const_and_derivs(theta, h, opts);
  double acc = 0.0;
  for (int i = 0; i <= h; ++i)
    acc += eta[i] * v[i];
  return acc;
}

Eigen::VectorXd UniEngine::derivs(const ThetaUni &theta, int max_order) {
  require_interior(theta, "UniEngine");
  const bool compatible = state_ && state_->theta.order() == theta.order() &&
                          state_->theta.support() == theta.support();
  if (compatible && path_precision_loss(state_->theta, theta, max_order) <= kDoubleLossLimit) {
    try {
      state_ = transport(*state_, theta, opts_);
      return extend_derivatives(*state_, max_order);
    } catch (const Error &e) {
      if (e.kind() != ErrorKind::OdeDivergence)
        throw;
    }
  }
  const int L = state_length(theta.order());
  const Eigen::VectorXd v = norm_const_and_derivs(theta, std::max(max_order, L - 1), opts_);
  state_ = HoloStateUni{theta, v.head(L), 0.0};
  return v.head(max_order + 1);
}

} // namespace hgd
