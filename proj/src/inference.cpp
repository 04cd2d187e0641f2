#include "hgd/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "hgd/errors.hpp"
#include "hgd/stats.hpp"

namespace hgd {

namespace {

bool recoverable(const Error &e) {
  switch (e.kind()) {
  case ErrorKind::OdeDivergence:
  case ErrorKind::PathSingularity:
  case ErrorKind::PathCrossesSingularity:
  case ErrorKind::SingularSystem:
  case ErrorKind::InconsistentExtension:
  case ErrorKind::OutsideDomain:
  case ErrorKind::AxisOutsideDomain:
    return true;
  default:
    return false;
  }
}

// Trial points of a fit are refused early when ill-conditioned; the final
// estimate is evaluated with the full budget.
OdeOptions final_ode(OdeOptions o) {
  o.max_precision_loss = std::max(o.max_precision_loss, OdeOptions{}.max_precision_loss);
  return o;
}

double sup_norm(const Eigen::VectorXd &v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

Eigen::MatrixXd info_from_moments(const Eigen::VectorXd &mu, int d) {
  Eigen::MatrixXd I(d, d);
  for (int l = 1; l <= d; ++l)
    for (int m = 1; m <= d; ++m)
      I(l - 1, m - 1) = mu[l + m] - mu[l] * mu[m];
  return I;
}

struct UniEval {
  double loglik;
  Eigen::VectorXd grad;
  Eigen::MatrixXd info;
};

UniEval evaluate(const ThetaUni &theta, const SuffStatsUni &stats, UniEngine &engine) {
  const int d = theta.order();
  const Membership mem = classify_theta_uni(theta);
  if (mem.region == Region::Outside)
    throw Error(ErrorKind::OutsideDomain, "normalising constant diverges at this theta");
  const Eigen::VectorXd D = engine.derivs(theta.truncated(mem.effective_order), 2 * d);
  const Eigen::VectorXd mu = D / D[0];
  UniEval ev;
  ev.loglik = -std::log(D[0]);
  ev.grad.resize(d);
  for (int m = 1; m <= d; ++m) {
    ev.loglik += theta[m] * stats.moment(m);
    ev.grad[m - 1] = stats.moment(m) - mu[m];
  }
  ev.info = info_from_moments(mu, d);
  if (!std::isfinite(ev.loglik) || ev.info.llt().info() != Eigen::Success)
    throw Error(ErrorKind::OdeDivergence, "engine values do not form a valid information matrix");
  return ev;
}

double schur_scalar(const Eigen::MatrixXd &I) {
  const int n = static_cast<int>(I.rows());
  if (n == 1)
    return I(0, 0);
  const Eigen::MatrixXd Iaa = I.topLeftCorner(n - 1, n - 1);
  const Eigen::VectorXd Iab = I.topRightCorner(n - 1, 1);
  return I(n - 1, n - 1) - Iab.dot(Iaa.ldlt().solve(Iab));
}

} // namespace

Eigen::VectorXd model_moments(const ThetaUni &theta, int max_order, UniEngine &engine) {
  const Membership mem = classify_theta_uni(theta);
  if (mem.region == Region::Outside)
    throw Error(ErrorKind::OutsideDomain, "normalising constant diverges at this theta");
  const ThetaUni eff = theta.truncated(mem.effective_order);
  const Eigen::VectorXd D = engine.derivs(eff, max_order);
  return D / D[0];
}

LogLik loglik_and_grad(const ThetaUni &theta, const SuffStatsUni &stats, UniEngine &engine) {
  const int d = theta.order();
  if (stats.max_order() < d)
    throw Error(ErrorKind::InvalidInput, "sufficient statistics do not reach the model order");
  const Membership mem = classify_theta_uni(theta);
  if (mem.region == Region::Outside)
    throw Error(ErrorKind::OutsideDomain, "normalising constant diverges at this theta");
  const Eigen::VectorXd D = engine.derivs(theta.truncated(mem.effective_order), d);
  LogLik out;
  out.value = -std::log(D[0]);
  out.grad.resize(d);
  for (int m = 1; m <= d; ++m) {
    out.value += theta[m] * stats.moment(m);
    out.grad[m - 1] = stats.moment(m) - D[m] / D[0];
  }
  return out;
}

Eigen::MatrixXd fisher_info(const ThetaUni &theta, UniEngine &engine) {
  const int d = theta.order();
  return info_from_moments(model_moments(theta, 2 * d, engine), d);
}

namespace {

Eigen::MatrixXd bi_moments(const DerivTableBi &tab) { return tab.T / tab.A(); }

} // namespace

LogLik loglik_and_grad(const ThetaBi &theta, const SuffStatsBi &stats, BiEngine &engine) {
  const int d = theta.degree();
  if (stats.d < d)
    throw Error(ErrorKind::InvalidInput, "sufficient statistics do not reach the model degree");
  const DerivTableBi tab = engine.derivs(theta, d);
  const Eigen::MatrixXd mu = bi_moments(tab);
  LogLik out;
  out.value = -std::log(tab.A());
  out.grad.resize(theta.size());
  for (int idx = 0; idx < theta.size(); ++idx) {
    const auto [i, j] = ThetaBi::flat_pair(idx);
    out.value += theta(i, j) * stats.moment(i, j);
    out.grad[idx] = stats.moment(i, j) - mu(i, j);
  }
  return out;
}

Eigen::MatrixXd fisher_info(const ThetaBi &theta, BiEngine &engine) {
  const int d = theta.degree();
  const Eigen::MatrixXd mu = bi_moments(engine.derivs(theta, 2 * d));
  const int n = theta.size();
  Eigen::MatrixXd I(n, n);
  for (int a = 0; a < n; ++a) {
    const auto [i1, j1] = ThetaBi::flat_pair(a);
    for (int b = 0; b < n; ++b) {
      const auto [i2, j2] = ThetaBi::flat_pair(b);
      I(a, b) = mu(i1 + i2, j1 + j2) - mu(i1, j1) * mu(i2, j2);
    }
  }
  return I;
}

FitResult fit_mle(const SuffStatsUni &stats, int d, Support support, const FitOptions &opts) {
  if (d < 1 || (support == Support::RealLine && d % 2 != 0))
    throw Error(ErrorKind::InvalidOrder, "model order " + std::to_string(d) + " not allowed");
  if (stats.max_order() < d)
    throw Error(ErrorKind::InvalidInput, "sufficient statistics do not reach the model order");
  const double md = stats.moment(d);
  if (!(md > 0.0))
    throw Error(ErrorKind::InvalidInput, "degenerate sample: mean of x^d is not positive");

  ThetaUni theta = ThetaUni::leading(d, 1.0 / (d * md), support);
  UniEngine engine(opts.ode);
  FitResult res;

  auto try_eval = [&](const ThetaUni &th) -> std::optional<UniEval> {
    try {
      return evaluate(th, stats, engine);
    } catch (const Error &e) {
      if (!recoverable(e))
        throw;
      return std::nullopt;
    }
  };

  std::optional<UniEval> cur = try_eval(theta);
  if (!cur)
    throw Error(ErrorKind::OdeDivergence, "engine failed at the starting point");

  auto finish = [&](const ThetaUni &th, const UniEval &ev) {
    res.theta_hat = th;
    res.loglik_bar = ev.loglik;
    res.grad = ev.grad;
    res.grad_norm = sup_norm(ev.grad);
    res.fisher = ev.info;
  };

  int outside_streak = 0;
  double damping = 0.0;
  bool restarted = false;
  bool boundary_ruled_out = d == 1 || (support == Support::RealLine && d == 2);
  int it = 0;
  for (; it < opts.max_iterations; ++it) {
    if (sup_norm(cur->grad) <= opts.grad_tol) {
      res.converged = true;
      break;
    }
    const Eigen::VectorXd delta = cur->info.ldlt().solve(cur->grad);
    const bool full_outside = !(theta[d] + delta[d - 1] < 0.0);
    outside_streak = full_outside ? outside_streak + 1 : 0;

    if (!boundary_ruled_out && outside_streak >= opts.boundary_patience) {
      // The iterates keep pushing against theta_d = 0. Compare with the best
      // boundary model to decide whether the supremum is attained inside.
      const int lower = support == Support::HalfLine ? d - 1 : d - 2;
      FitResult low = fit_mle(stats, lower, support, opts);
      bool on_boundary;
      if (support == Support::HalfLine && !low.hit_boundary)
        on_boundary = !mle_existence_check(low.theta_hat.embedded(d), stats, opts.ode);
      else
        on_boundary = !(cur->loglik > low.loglik_bar);
      if (on_boundary) {
        UniEngine fresh(final_ode(opts.ode));
        const ThetaUni emb = low.theta_hat.embedded(d);
        const UniEval ev = evaluate(emb, stats, fresh);
        finish(emb, ev);
        res.iterations = it + low.iterations;
        res.hit_boundary = true;
        res.converged = false;
        res.message = "supremum on the boundary theta_" + std::to_string(d) + " = 0";
        return res;
      }
      boundary_ruled_out = true;
    }

    // Damped scoring: the multiplier on diag(I) grows after each rejected
    // candidate and shrinks after an accepted one, so the iterates bend around
    // regions where the engine cannot be evaluated.
    bool accepted = false;
    const double lambda_max = 1.0 / opts.min_step;
    for (double lambda = damping;; lambda = lambda == 0.0 ? 1e-2 : 4.0 * lambda) {
      if (lambda > lambda_max)
        break;
      Eigen::MatrixXd J = cur->info;
      J.diagonal() *= 1.0 + lambda;
      const Eigen::VectorXd c = theta.coeffs() + J.ldlt().solve(cur->grad);
      if (!(c[d - 1] < 0.0))
        continue;
      ThetaUni cand(c, support);
      std::optional<UniEval> ev = try_eval(cand);
      if (!ev)
        continue;
      if (ev->loglik >= cur->loglik - 1e-12 * (1.0 + std::abs(cur->loglik))) {
        theta = cand;
        cur = std::move(ev);
        accepted = true;
        damping = lambda < 1e-3 ? 0.0 : lambda / 4.0;
        break;
      }
    }
    if (!accepted && !restarted) {
      // The incrementally transported state may have picked up error on the
      // way here; start over from the closed-form point and retry once.
      engine.reset();
      std::optional<UniEval> again = try_eval(theta);
      if (again) {
        cur = std::move(again);
        restarted = true;
        continue;
      }
    }
    if (!accepted) {
      res.message = "step control failed";
      res.hit_boundary = full_outside;
      break;
    }
    restarted = false;
  }
  finish(theta, *cur);
  res.iterations = it;
  if (!res.converged && res.message.empty())
    res.message = "iteration limit reached";
  return res;
}

FitResultBi fit_mle(const SuffStatsBi &stats, const FitOptions &opts) {
  const int d = stats.d;
  if (d < 2)
    throw Error(ErrorKind::InvalidOrder, "bivariate fit needs degree >= 2");
  const double mx = stats.moment(d, 0), my = stats.moment(0, d);
  if (!(mx > 0.0) || !(my > 0.0))
    throw Error(ErrorKind::InvalidInput, "degenerate sample: a top axis moment is not positive");
  ThetaBi theta = ThetaBi::product_point(d, 1.0 / (d * mx), 1.0 / (d * my));
  BiEngine engine(opts.ode);
  const int n = theta.size();

  struct BiEval {
    double loglik;
    Eigen::VectorXd grad;
    Eigen::MatrixXd info;
  };
  auto eval = [&](const ThetaBi &th) -> std::optional<BiEval> {
    try {
      const DerivTableBi tab = engine.derivs(th, 2 * d);
      const Eigen::MatrixXd mu = bi_moments(tab);
      BiEval ev{-std::log(tab.A()), Eigen::VectorXd(n), Eigen::MatrixXd(n, n)};
      for (int a = 0; a < n; ++a) {
        const auto [i1, j1] = ThetaBi::flat_pair(a);
        ev.loglik += th(i1, j1) * stats.moment(i1, j1);
        ev.grad[a] = stats.moment(i1, j1) - mu(i1, j1);
        for (int b = 0; b < n; ++b) {
          const auto [i2, j2] = ThetaBi::flat_pair(b);
          ev.info(a, b) = mu(i1 + i2, j1 + j2) - mu(i1, j1) * mu(i2, j2);
        }
      }
      return ev;
    } catch (const Error &e) {
      if (!recoverable(e))
        throw;
      return std::nullopt;
    }
  };

  std::optional<BiEval> cur = eval(theta);
  if (!cur)
    throw Error(ErrorKind::OdeDivergence, "engine failed at the starting point");
  FitResultBi res;
  int it = 0;
  for (; it < opts.max_iterations; ++it) {
    if (sup_norm(cur->grad) <= opts.grad_tol) {
      res.converged = true;
      break;
    }
    const Eigen::VectorXd delta = cur->info.ldlt().solve(cur->grad);
    const Eigen::VectorXd base = theta.flat();
    bool accepted = false, constrained = false;
    for (double t = 1.0; t >= opts.min_step; t *= 0.5) {
      const Eigen::VectorXd c = base + t * delta;
      ThetaBi cand(d, std::span<const double>(c.data(), c.size()));
      if (!in_proper_bivariate_space(cand)) {
        constrained = true;
        continue;
      }
      std::optional<BiEval> ev = eval(cand);
      if (!ev)
        continue;
      if (ev->loglik >= cur->loglik - 1e-12 * (1.0 + std::abs(cur->loglik))) {
        theta = cand;
        cur = std::move(ev);
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      res.message = "step halving failed";
      res.hit_boundary = constrained;
      break;
    }
  }
  res.theta_hat = theta;
  res.loglik_bar = cur->loglik;
  res.grad = cur->grad;
  res.grad_norm = sup_norm(cur->grad);
  res.fisher = cur->info;
  res.iterations = it;
  if (!res.converged && res.message.empty())
    res.message = "iteration limit reached";
  return res;
}

bool mle_existence_check(const ThetaUni &theta_hat_lower, const SuffStatsUni &stats,
                         const OdeOptions &opts) {
  const int d = theta_hat_lower.order();
  if (stats.max_order() < d)
    throw Error(ErrorKind::InvalidInput, "sufficient statistics do not reach the model order");
  UniEngine engine(final_ode(opts));
  const Eigen::VectorXd mu = model_moments(theta_hat_lower, d, engine);
  return stats.moment(d) - mu[d] < 0.0;
}

namespace {

// Fits the null model, dropping to lower orders while the fit sits on its boundary.
FitResult null_fit(const SuffStatsUni &stats, int order, int step, int floor, Support support,
                   const FitOptions &opts) {
  FitResult fit = fit_mle(stats, order, support, opts);
  while (fit.hit_boundary && order - step >= floor) {
    order -= step;
    fit = fit_mle(stats, order, support, opts);
  }
  if (!fit.converged && !fit.hit_boundary)
    throw Error(ErrorKind::NotConverged, "null fit did not converge: " + fit.message);
  return fit;
}

} // namespace

TestResult score_test_halfline(const SuffStatsUni &stats, int d, double alpha,
                               const FitOptions &opts) {
  if (d < 2)
    throw Error(ErrorKind::InvalidOrder, "half-line score test needs d >= 2");
  if (!(alpha > 0.0 && alpha < 0.5))
    throw Error(ErrorKind::InvalidInput, "alpha must lie in (0, 1/2)");
  if (stats.max_order() < d)
    throw Error(ErrorKind::InvalidInput, "sufficient statistics do not reach the tested order");
  const FitResult fit = null_fit(stats, d - 1, 1, 1, Support::HalfLine, opts);
  const ThetaUni emb = fit.theta_hat.embedded(d);
  UniEngine engine(final_ode(opts.ode));
  const Eigen::VectorXd mu = model_moments(emb, 2 * d, engine);
  const double score = stats.moment(d) - mu[d];
  const double schur = schur_scalar(info_from_moments(mu, d));
  if (!(schur > 0.0))
    throw Error(ErrorKind::SingularInformation, "conditional information is not positive");

  TestResult out;
  out.statistic = std::sqrt(static_cast<double>(stats.n)) * score / std::sqrt(schur);
  out.null = NullDist::StdNormalLowerTail;
  out.alpha = alpha;
  out.threshold = -normal_upper_quantile(alpha);
  out.reject = out.statistic <= out.threshold;
  out.theta_hat_null = emb;
  out.tested_order = d;
  out.null_order = classify_theta_uni(emb).effective_order;
  return out;
}

TestResult score_test_realline(const SuffStatsUni &stats, int order, double alpha,
                               const FitOptions &opts) {
  if (order < 4 || order % 2 != 0)
    throw Error(ErrorKind::InvalidOrder, "real-line score test needs an even order >= 4");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw Error(ErrorKind::InvalidInput, "alpha must lie in (0, 1)");
  if (stats.max_order() < order)
    throw Error(ErrorKind::InvalidInput, "sufficient statistics do not reach the tested order");
  const FitResult fit = null_fit(stats, order - 2, 2, 2, Support::RealLine, opts);
  const ThetaUni emb = fit.theta_hat.embedded(order);
  UniEngine engine(final_ode(opts.ode));
  const Eigen::VectorXd mu = model_moments(emb, 2 * order, engine);
  const Eigen::MatrixXd I = info_from_moments(mu, order);
  const int a = order - 2;
  const Eigen::MatrixXd Iaa = I.topLeftCorner(a, a);
  const Eigen::MatrixXd Iab = I.topRightCorner(a, 2);
  const Eigen::Matrix2d cond = I.bottomRightCorner(2, 2) - Iab.transpose() * Iaa.ldlt().solve(Iab);
  const Eigen::Vector2d s(stats.moment(order - 1) - mu[order - 1], stats.moment(order) - mu[order]);
  const Eigen::LDLT<Eigen::Matrix2d> ldlt(cond);
  if (!(ldlt.isPositive() && cond.determinant() > 0.0))
    throw Error(ErrorKind::SingularInformation, "conditional information is not positive definite");

  TestResult out;
  out.statistic = static_cast<double>(stats.n) * s.dot(ldlt.solve(s));
  out.null = NullDist::ChiSq2UpperTail;
  out.alpha = alpha;
  out.threshold = chisq2_upper_quantile(alpha);
  out.reject = out.statistic >= out.threshold;
  out.theta_hat_null = emb;
  out.tested_order = order;
  out.null_order = classify_theta_uni(emb).effective_order;
  return out;
}

OrderSelection select_order(std::span<const double> sample, int d_max, double alpha,
                            Support support, const FitOptions &opts) {
  const int start = support == Support::HalfLine ? 1 : 2;
  const int step = support == Support::HalfLine ? 1 : 2;
  if (d_max < start || (support == Support::RealLine && d_max % 2 != 0))
    throw Error(ErrorKind::InvalidOrder, "d_max " + std::to_string(d_max) + " not allowed");
  const SuffStatsUni stats = suff_stats(sample, d_max, support);
  OrderSelection sel;
  sel.order = start;
  while (sel.order + step <= d_max) {
    const int next = sel.order + step;
    TestResult t = support == Support::HalfLine ? score_test_halfline(stats, next, alpha, opts)
                                                : score_test_realline(stats, next, alpha, opts);
    const bool reject = t.reject;
    sel.trail.push_back(std::move(t));
    if (!reject)
      break;
    sel.order = next;
  }
  return sel;
}

} // namespace hgd
