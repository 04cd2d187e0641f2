#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "hgd/inference.hpp"
#include "hgd/oracle.hpp"
#include "hgd/stats.hpp"

using namespace hgd;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

constexpr double kPi = std::numbers::pi;

SuffStatsUni stats_of(std::initializer_list<double> moments, long n = 1000) {
  SuffStatsUni s;
  s.n = n;
  s.moments = Eigen::Map<const Eigen::VectorXd>(moments.begin(),
                                                static_cast<Eigen::Index>(moments.size()));
  return s;
}

SuffStatsUni population(const ThetaUni &th, int order, long n = 1000) {
  SuffStatsUni s;
  s.n = n;
  s.moments.resize(order);
  const double A = quad_moment_uni(th, 0);
  for (int m = 1; m <= order; ++m)
    s.moments[m - 1] = quad_moment_uni(th, m) / A;
  return s;
}

} // namespace

TEST_CASE("log-likelihood and score", "[inference]") {
  UniEngine eng;
  const LogLik a = loglik_and_grad(ThetaUni{-1.0}, stats_of({1.0}), eng);
  CHECK_THAT(a.value, WithinAbs(-1.0, 1e-14));
  CHECK_THAT(a.grad[0], WithinAbs(0.0, 1e-14));

  const LogLik b = loglik_and_grad(ThetaUni{-0.5}, stats_of({2.0}), eng);
  CHECK_THAT(b.grad[0], WithinAbs(0.0, 1e-14));

  const LogLik c = loglik_and_grad(ThetaUni{0.0, -1.0}, stats_of({1.0 / std::sqrt(kPi), 0.5}), eng);
  CHECK_THAT(c.grad[0], WithinAbs(0.0, 1e-12));
  CHECK_THAT(c.grad[1], WithinAbs(0.0, 1e-12));
}

TEST_CASE("Fisher information", "[inference]") {
  UniEngine eng;
  CHECK_THAT(fisher_info(ThetaUni{-1.0}, eng)(0, 0), WithinRel(1.0, 1e-14));
  CHECK_THAT(fisher_info(ThetaUni{-2.0}, eng)(0, 0), WithinRel(0.25, 1e-14));

  const ThetaUni hn{0.0, -1.0};
  const Eigen::MatrixXd I = fisher_info(hn, eng);
  CHECK_THAT(I(0, 0), WithinRel(0.5 - 1.0 / kPi, 1e-12));
  const double A = quad_moment_uni(hn, 0);
  const double m1 = quad_moment_uni(hn, 1) / A, m2 = quad_moment_uni(hn, 2) / A;
  const double m3 = quad_moment_uni(hn, 3) / A, m4 = quad_moment_uni(hn, 4) / A;
  CHECK_THAT(I(0, 1), WithinRel(m3 - m1 * m2, 1e-10));
  CHECK_THAT(I(1, 0), WithinRel(I(0, 1), 1e-15));
  CHECK_THAT(I(1, 1), WithinRel(m4 - m2 * m2, 1e-10));
}

TEST_CASE("score and information match finite differences", "[inference][property]") {
  std::mt19937_64 gen(51);
  std::uniform_real_distribution<double> lead(-2.0, -0.5), rest(-1.5, 1.5);
  OdeOptions o;
  o.rel_tol = 1e-13;
  for (int d = 3; d <= 4; ++d) {
    for (int rep = 0; rep < 5; ++rep) {
      Eigen::VectorXd c(d);
      for (int k = 0; k < d - 1; ++k)
        c[k] = rest(gen);
      c[d - 1] = lead(gen);
      const ThetaUni th(c);
      UniEngine eng(o);
      const Eigen::VectorXd mu = model_moments(th, 2 * d, eng);
      const Eigen::MatrixXd I = fisher_info(th, eng);
      const double h = 1e-4;
      for (int j = 0; j < d; ++j) {
        Eigen::VectorXd up = c, dn = c;
        up[j] += h;
        dn[j] -= h;
        UniEngine e1(o), e2(o);
        const double lp = std::log(e1.derivs(ThetaUni(up), 0)[0]);
        const double lm = std::log(e2.derivs(ThetaUni(dn), 0)[0]);
        CHECK_THAT((lp - lm) / (2 * h), WithinRel(mu[j + 1], 1e-5));
        const Eigen::VectorXd mp = model_moments(ThetaUni(up), d, e1);
        const Eigen::VectorXd mm = model_moments(ThetaUni(dn), d, e2);
        for (int k = 0; k < d; ++k)
          CHECK_THAT((mp[k + 1] - mm[k + 1]) / (2 * h),
                     WithinAbs(I(k, j), 1e-4 * std::max(1.0, std::abs(I(k, j)))));
      }
    }
  }
}

TEST_CASE("maximum likelihood fits", "[inference]") {
  const FitResult e = fit_mle(stats_of({2.0}), 1, Support::HalfLine);
  REQUIRE(e.converged);
  CHECK_THAT(e.theta_hat[1], WithinRel(-0.5, 1e-12));

  const FitResult h = fit_mle(population(ThetaUni{0.0, -1.0}, 2), 2, Support::HalfLine);
  REQUIRE(h.converged);
  CHECK_THAT(h.theta_hat[1], WithinAbs(0.0, 1e-6));
  CHECK_THAT(h.theta_hat[2], WithinAbs(-1.0, 1e-6));

  const ThetaUni star{-1.0, 3.0, -2.0};
  const std::vector<double> x = sample_uni(star, 1000, 20141);
  const FitResult f = fit_mle(suff_stats(x, 3, Support::HalfLine), 3, Support::HalfLine);
  REQUIRE(f.converged);
  UniEngine eng;
  const Eigen::MatrixXd cov = fisher_info(star, eng).inverse() / 1000.0;
  for (int k = 1; k <= 3; ++k)
    CHECK(std::abs(f.theta_hat[k] - star[k]) < 3.0 * std::sqrt(cov(k - 1, k - 1)));
  CHECK(f.grad_norm <= 1e-8);
}

TEST_CASE("fits recover the population parameter", "[inference][property]") {
  const ThetaUni cases[] = {ThetaUni{-1.49532, 1.8809, 1.75015, -1.21663},
                            ThetaUni{1.50805, 0.559326, 1.81659, -1.59275},
                            ThetaUni({1.0, 4.0, -2.0, -3.0}, Support::RealLine),
                            ThetaUni{-1.0, 3.0, -2.0}};
  for (const ThetaUni &th : cases) {
    const FitResult f = fit_mle(population(th, th.order()), th.order(), th.support());
    REQUIRE(f.converged);
    CHECK((f.theta_hat.coeffs() - th.coeffs()).norm() < 1e-5);
  }
}

TEST_CASE("fit reports the boundary", "[inference]") {
  // Exact exponential moments: the order-2 supremum sits at theta_2 = 0.
  const FitResult f = fit_mle(stats_of({1.0, 2.0}), 2, Support::HalfLine);
  CHECK_FALSE(f.converged);
  CHECK(f.hit_boundary);
  CHECK_THAT(f.theta_hat[1], WithinRel(-1.0, 1e-8));
  CHECK(f.theta_hat[2] == 0.0);
}

TEST_CASE("fit input errors", "[inference]") {
  CHECK_THROWS_AS(fit_mle(stats_of({1.0, 2.0, 3.0}), 3, Support::RealLine), Error);
  CHECK_THROWS_AS(fit_mle(stats_of({1.0}), 2, Support::HalfLine), Error);
}

TEST_CASE("existence of the interior maximum", "[inference]") {
  const ThetaUni lower{-1.0, 0.0};
  CHECK_FALSE(mle_existence_check(lower, stats_of({1.0, 2.0})));
  CHECK(mle_existence_check(lower, stats_of({1.0, 1.5})));
  CHECK_FALSE(mle_existence_check(lower, stats_of({1.0, 2.5})));
}

TEST_CASE("half-line score test", "[inference]") {
  const TestResult zero = score_test_halfline(stats_of({1.0, 2.0}), 2, 0.05);
  CHECK_THAT(zero.statistic, WithinAbs(0.0, 1e-9));
  CHECK_FALSE(zero.reject);
  CHECK(zero.null == NullDist::StdNormalLowerTail);
  CHECK_THAT(zero.threshold, WithinAbs(-1.6448536269514722, 1e-12));

  const TestResult neg = score_test_halfline(stats_of({1.0, 1.5}), 2, 0.05);
  CHECK(neg.statistic < 0.0);
  // At theta = (-1, 0): I = [[1, 4], [4, 20]], conditional information 20 - 16 = 4.
  CHECK_THAT(neg.statistic, WithinRel(std::sqrt(1000.0) * -0.5 / 2.0, 1e-9));
  CHECK(neg.reject);
  CHECK(neg.tested_order == 2);
  CHECK(neg.null_order == 1);
}

TEST_CASE("real-line score test", "[inference]") {
  // N(0, 1/2): mean 0, second moment 1/2, fourth moment 3/4.
  const TestResult zero = score_test_realline(stats_of({0.0, 0.5, 0.0, 0.75}), 4, 0.05);
  CHECK_THAT(zero.statistic, WithinAbs(0.0, 1e-9));
  CHECK(zero.null == NullDist::ChiSq2UpperTail);
  CHECK_THAT(zero.threshold, WithinRel(-2.0 * std::log(0.05), 1e-14));

  double last = 0.0;
  for (double delta : {0.01, 0.02, 0.05}) {
    const TestResult t = score_test_realline(stats_of({0.0, 0.5, 0.0, 0.75 + delta}), 4, 0.05);
    CHECK(t.statistic > last);
    last = t.statistic;
  }
}

TEST_CASE("existence check agrees with the sign of the statistic", "[inference][property]") {
  const UniSampler s(ThetaUni{-1.0, 3.0, -2.0});
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const std::vector<double> x = s.draw(300, seed);
    const SuffStatsUni st = suff_stats(x, 3, Support::HalfLine);
    const TestResult t = score_test_halfline(st, 3, 0.05);
    CHECK(mle_existence_check(t.theta_hat_null, st) == (t.statistic < 0.0));
  }
}

TEST_CASE("order selection", "[inference]") {
  const std::vector<double> x = sample_uni(ThetaUni{-1.0, 3.0, -2.0}, 2000, 7);
  const OrderSelection one = select_order(x, 1, 0.05, Support::HalfLine);
  CHECK(one.order == 1);
  CHECK(one.trail.empty());

  const OrderSelection sel = select_order(x, 4, 0.05, Support::HalfLine);
  CHECK(sel.order == 3);
  REQUIRE(sel.trail.size() == 3);
  CHECK(sel.trail[0].reject);
  CHECK(sel.trail[1].reject);
  CHECK_FALSE(sel.trail[2].reject);

  int chose_one = 0;
  const UniSampler ex(ThetaUni{-1.0});
  for (std::uint64_t seed = 0; seed < 40; ++seed)
    chose_one += select_order(ex.draw(2000, seed), 3, 0.05, Support::HalfLine).order == 1;
  // Binomial(40, 0.95): at least 33 with probability above 0.99.
  CHECK(chose_one >= 33);
}

TEST_CASE("bivariate fit", "[inference]") {
  const ThetaBi th(2, {0.2, 0.1, -1.0, -0.3, -0.8});
  SuffStatsBi st;
  st.n = 1000;
  st.d = 2;
  st.means = Eigen::MatrixXd::Zero(3, 3);
  const double A = quad_A_bi(th, 0, 0);
  for (int i = 0; i <= 2; ++i)
    for (int j = 0; i + j <= 2; ++j)
      st.means(i, j) = quad_A_bi(th, i, j) / A;
  const FitResultBi f = fit_mle(st);
  REQUIRE(f.converged);
  CHECK((f.theta_hat.flat() - th.flat()).norm() < 1e-5);
}
