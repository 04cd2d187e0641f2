#pragma once

#include <optional>
#include <span>

#include <Eigen/Dense>

#include "hgd/domain.hpp"
#include "hgd/ode.hpp"

namespace hgd {

/// Point theta together with F = [A, d1 A, ..., d1^{L-1} A], L = order - 1,
/// where d1 is the derivative with respect to theta_1. Every mixed partial
/// of A reduces to a power of d1, so F determines all derivatives at theta.
struct HoloStateUni {
  ThetaUni theta;
  Eigen::VectorXd F;
  double last_transport_error = 0.0;
};

inline int state_length(int order) { return order - 1; }

/// State at (0, ..., 0, -c) from the Gamma-function moments.
HoloStateUni initial_state(int order, double c, Support support = Support::HalfLine);

/// d1^m A for m = 0..max_order at the state's point, by repeated use of
///   m d1^{m-1} A + sum_k k theta_k d1^{k-1+m} A = -[m == 0]   (half-line)
/// solved for the highest term. On the real line the right-hand side is 0.
Eigen::VectorXd extend_derivatives(const HoloStateUni &state, int max_order);

/// Same recursion for an arbitrary (theta, F) pair; used by the ODE right-hand side.
Eigen::VectorXd extend_derivatives(const ThetaUni &theta, const Eigen::Ref<const Eigen::VectorXd> &F,
                                   int max_order);

/// d/ds F(theta + s h) = sum_j h_j [d1^j A, ..., d1^{j+L-1} A].
Eigen::VectorXd pfaffian_rhs(const ThetaUni &theta, const Eigen::Ref<const Eigen::VectorXd> &F,
                             const Eigen::Ref<const Eigen::VectorXd> &direction);

/// Integrates the Pfaffian system along the segment from state.theta to target.
HoloStateUni transport(const HoloStateUni &state, const ThetaUni &target,
                       const OdeOptions &opts = {});

/// Natural log of the factor by which rounding errors can grow relative to the
/// true values at theta: homogeneous solutions of the system live on contours
/// through the complex critical points z of p, so they outgrow the integral by
/// about exp(Re p(z) - max over the support of p), times (|z| / scale)^m for
/// the order-m derivative reached by the recursion. Zero when nothing outgrows.
double precision_loss(const ThetaUni &theta, int max_order);

/// Largest precision_loss along the segment from a to b (sampled), with the
/// recursion to max_order counted at b only.
double path_precision_loss(const ThetaUni &a, const ThetaUni &b, int max_order);

/// Above this loss the double-precision transport is not trusted.
inline constexpr double kDoubleLossLimit = 9.0;

/// d1^m A(theta) computed from the closed-form point in binary floating point
/// of 50, 100, 200 or 400 decimal digits (the smallest with 6 to spare),
/// integrating by extrapolation to a local tolerance of 10^-digits. Throws
/// OdeDivergence when more than 394 digits are asked for.
Eigen::VectorXd norm_const_and_derivs_extended(const ThetaUni &theta, int max_order, int digits);

/// Working digits for a given loss: 20 correct digits survive.
inline int extended_digits(double loss) { return 20 + static_cast<int>(loss / 2.302585092994046) + 1; }

/// d1^m A(theta), m = 0..max_order, starting from the closed-form point with
/// c = |theta_d|. Runs in double when path_precision_loss stays below
/// kDoubleLossLimit, otherwise in extended precision sized from the loss.
Eigen::VectorXd norm_const_and_derivs(const ThetaUni &theta, int max_order,
                                      const OdeOptions &opts = {});

/// Integral of (eta_0 + eta_1 x + ... + eta_h x^h) exp(theta . x^k).
double prefactor_norm_const(std::span<const double> eta, const ThetaUni &theta,
                            const OdeOptions &opts = {});

/// Holds a state and moves it to wherever derivatives are requested next.
/// Used by the optimiser so consecutive iterates reuse the previous point.
class UniEngine {
public:
  explicit UniEngine(OdeOptions opts = {}) : opts_(opts) {}

  /// d1^m A(theta) for m = 0..max_order.
  Eigen::VectorXd derivs(const ThetaUni &theta, int max_order);
  /// Drops the cached state; the next call restarts from the closed-form point.
  void reset() { state_.reset(); }
  const OdeOptions &options() const { return opts_; }
  double last_error() const { return state_ ? state_->last_transport_error : 0.0; }

private:
  OdeOptions opts_;
  std::optional<HoloStateUni> state_;
};

} // namespace hgd
