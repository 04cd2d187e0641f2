#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hgd/domain.hpp"
#include "hgd/holo_bi.hpp"
#include "hgd/holo_uni.hpp"

namespace hgd {

struct FitOptions {
  int max_iterations = 200;
  double grad_tol = 1e-8;
  /// Smallest step fraction tried by step halving; the univariate damping gives up once its multiplier passes the inverse.
  double min_step = 1.0 / 1048576.0;
  /// Consecutive iterations whose full scoring step leaves the domain before
  /// the fit is declared to sit on the boundary.
  int boundary_patience = 8;
  OdeOptions ode = tight_ode();

  static OdeOptions tight_ode() {
    OdeOptions o;
    o.rel_tol = 1e-12;
    o.max_precision_loss = 45.0;
    return o;
  }
};

struct FitResult {
  ThetaUni theta_hat;
  double loglik_bar = 0.0;
  Eigen::VectorXd grad;
  double grad_norm = 0.0;
  Eigen::MatrixXd fisher;
  int iterations = 0;
  bool converged = false;
  bool hit_boundary = false;
  std::string message;
};

struct FitResultBi {
  ThetaBi theta_hat;
  double loglik_bar = 0.0;
  Eigen::VectorXd grad; // flat ordering of ThetaBi
  double grad_norm = 0.0;
  Eigen::MatrixXd fisher;
  int iterations = 0;
  bool converged = false;
  bool hit_boundary = false;
  std::string message;
};

enum class NullDist { StdNormalLowerTail, ChiSq2UpperTail };

struct TestResult {
  double statistic = 0.0;
  NullDist null = NullDist::StdNormalLowerTail;
  double alpha = 0.05;
  double threshold = 0.0;
  bool reject = false;
  /// Null fit embedded at the tested order (trailing zeros).
  ThetaUni theta_hat_null;
  int tested_order = 0;
  /// Effective order of the null fit after any boundary recursion.
  int null_order = 0;
};

struct LogLik {
  double value = 0.0;
  Eigen::VectorXd grad;
};

/// mu_m = d1^m A / A = E[X^m] for m = 0..max_order, computed with the engine of
/// the effective order (so parameters with trailing zeros are fine).
Eigen::VectorXd model_moments(const ThetaUni &theta, int max_order, UniEngine &engine);

/// Per-observation log-likelihood and its gradient in all theta.order() coordinates.
LogLik loglik_and_grad(const ThetaUni &theta, const SuffStatsUni &stats, UniEngine &engine);
LogLik loglik_and_grad(const ThetaBi &theta, const SuffStatsBi &stats, BiEngine &engine);

/// I_lm = mu_{l+m} - mu_l mu_m for l, m = 1..theta.order().
Eigen::MatrixXd fisher_info(const ThetaUni &theta, UniEngine &engine);
Eigen::MatrixXd fisher_info(const ThetaBi &theta, BiEngine &engine);

/// Fisher scoring from (0, ..., 0, -c), c = 1 / (d * mean of x^d).
/// Never throws on non-convergence; inspect `converged` and `hit_boundary`.
FitResult fit_mle(const SuffStatsUni &stats, int d, Support support, const FitOptions &opts = {});
FitResultBi fit_mle(const SuffStatsBi &stats, const FitOptions &opts = {});

/// True iff the order-d score d_d l at the embedded lower fit is negative.
bool mle_existence_check(const ThetaUni &theta_hat_lower, const SuffStatsUni &stats,
                         const OdeOptions &opts = {});

/// One-sided test of order d - 1 against d on the half-line; rejects for T <= -z_alpha.
TestResult score_test_halfline(const SuffStatsUni &stats, int d, double alpha,
                               const FitOptions &opts = {});
/// Test of order D - 2 against D on the real line; rejects for T >= chi^2_2(alpha).
TestResult score_test_realline(const SuffStatsUni &stats, int order, double alpha,
                               const FitOptions &opts = {});

struct OrderSelection {
  int order = 1;
  std::vector<TestResult> trail;
};

/// Forward testing from order 1 (half-line) or 2 (real line); stops at the
/// first non-rejection.
OrderSelection select_order(std::span<const double> sample, int d_max, double alpha,
                            Support support, const FitOptions &opts = {});

} // namespace hgd
