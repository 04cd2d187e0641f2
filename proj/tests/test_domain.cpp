#include <catch_amalgamated.hpp>

#include <array>
#include <random>
#include <vector>

#include "hgd/domain.hpp"
#include "hgd/errors.hpp"

using namespace hgd;
using Catch::Matchers::WithinRel;

TEST_CASE("classify_theta_uni on the documented points", "[domain]") {
  const Membership b = classify_theta_uni(ThetaUni{3.0, -2.0, 0.0});
  CHECK(b.region == Region::Boundary);
  CHECK(b.effective_order == 2);

  const Membership in = classify_theta_uni(ThetaUni{-1.0, 3.0, -2.0});
  CHECK(in.region == Region::Interior);
  CHECK(in.effective_order == 3);

  CHECK(classify_theta_uni(ThetaUni{0.0, 0.0, 1.0}).region == Region::Outside);
  CHECK(classify_theta_uni(ThetaUni{0.0, 0.0, 0.0}).region == Region::Outside);
}

TEST_CASE("real line needs an even effective order", "[domain]") {
  CHECK(classify_theta_uni(ThetaUni({1.0, -1.0}, Support::RealLine)).region == Region::Interior);
  CHECK(classify_theta_uni(ThetaUni({2.0, -1.0, 0.0, 0.0}, Support::RealLine)).region ==
        Region::Boundary);
  CHECK(classify_theta_uni(ThetaUni({1.0, 3.0, -1.0, 0.0}, Support::RealLine)).region ==
        Region::Outside);
}

TEST_CASE("classification ignores trailing zeros", "[domain][property]") {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int rep = 0; rep < 200; ++rep) {
    const int d = 1 + rep % 5;
    Eigen::VectorXd c(d);
    for (int k = 0; k < d; ++k)
      c[k] = u(gen);
    if (rep % 3 == 0)
      c[d - 1] = 0.0;
    const ThetaUni th(c);
    const Membership a = classify_theta_uni(th);
    const Membership b = classify_theta_uni(th.embedded(d + 1));
    CHECK(a.effective_order == b.effective_order);
    if (a.region == Region::Interior)
      CHECK(b.region == Region::Boundary);
    else
      CHECK(a.region == b.region);
  }
}

TEST_CASE("proper bivariate space", "[domain]") {
  ThetaBi t3(3);
  t3(3, 0) = -1.0;
  t3(0, 3) = -1.0;
  t3(1, 0) = 0.7;
  t3(0, 1) = -2.0;
  CHECK(in_proper_bivariate_space(t3));

  t3(1, 2) = -0.5;
  t3(2, 1) = 2.5;
  CHECK_FALSE(in_proper_bivariate_space(t3));

  CHECK(in_proper_bivariate_space(ThetaBi(2, {0.0, 0.0, -1.0, 0.0, -1.0})));
  CHECK_FALSE(in_proper_bivariate_space(ThetaBi(2, {0.0, 0.0, 0.0, 0.0, -1.0})));
}

TEST_CASE("proper space is symmetric under swapping x and y", "[domain][property]") {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int rep = 0; rep < 300; ++rep) {
    const int d = 2 + rep % 3;
    std::vector<double> flat(ThetaBi::size_for(d));
    for (double &v : flat)
      v = u(gen);
    const ThetaBi th(d, flat);
    CHECK(in_proper_bivariate_space(th) == in_proper_bivariate_space(th.transposed()));
  }
}

TEST_CASE("flat ordering of bivariate coefficients", "[domain]") {
  CHECK(ThetaBi::flat_index(1, 0) == 0);
  CHECK(ThetaBi::flat_index(0, 1) == 1);
  CHECK(ThetaBi::flat_index(2, 0) == 2);
  CHECK(ThetaBi::flat_index(1, 1) == 3);
  CHECK(ThetaBi::flat_index(0, 2) == 4);
  for (int k = 0; k < ThetaBi::size_for(5); ++k) {
    const auto [i, j] = ThetaBi::flat_pair(k);
    CHECK(ThetaBi::flat_index(i, j) == k);
  }
  const ThetaBi th(2, {1.0, 2.0, 3.0, 4.0, 5.0});
  CHECK(th(0, 2) == 5.0);
  CHECK(th.flat() == Eigen::VectorXd((Eigen::VectorXd(5) << 1, 2, 3, 4, 5).finished()));
}

TEST_CASE("suff_stats", "[domain]") {
  const std::vector<double> x{1.0, 2.0, 3.0};
  const SuffStatsUni s = suff_stats(x, 2, Support::HalfLine);
  CHECK(s.n == 3);
  CHECK_THAT(s.moment(1), WithinRel(2.0, 1e-15));
  CHECK_THAT(s.moment(2), WithinRel(14.0 / 3.0, 1e-15));

  const std::vector<double> two{2.0};
  const SuffStatsUni t = suff_stats(two, 3, Support::HalfLine);
  CHECK(t.moment(1) == 2.0);
  CHECK(t.moment(2) == 4.0);
  CHECK(t.moment(3) == 8.0);

  const std::vector<std::array<double, 2>> xy{{1.0, 1.0}};
  const SuffStatsBi b = suff_stats(xy, 2);
  for (int i = 0; i <= 2; ++i)
    for (int j = 0; i + j <= 2; ++j)
      CHECK(b.moment(i, j) == 1.0);
}

TEST_CASE("suff_stats rejects bad samples", "[domain]") {
  const std::vector<double> empty;
  CHECK_THROWS_MATCHES(suff_stats(empty, 2, Support::HalfLine), Error,
                       Catch::Matchers::Predicate<Error>(
                           [](const Error &e) { return e.kind() == ErrorKind::EmptySample; }));
  const std::vector<double> neg{1.0, -0.5};
  CHECK_THROWS_MATCHES(suff_stats(neg, 2, Support::HalfLine), Error,
                       Catch::Matchers::Predicate<Error>(
                           [](const Error &e) { return e.kind() == ErrorKind::NegativeDatum; }));
  CHECK_NOTHROW(suff_stats(neg, 2, Support::RealLine));
}
