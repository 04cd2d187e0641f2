#include <catch_amalgamated.hpp>

#include <random>

#include "hgd/oracle.hpp"
#include "hgd/polyalg.hpp"

using namespace hgd;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// Ascending coefficients of lead * prod (x - r).
Poly<double> from_roots(double lead, std::initializer_list<double> roots) {
  Eigen::VectorXd c(1);
  c[0] = lead;
  for (double r : roots) {
    Eigen::VectorXd n = Eigen::VectorXd::Zero(c.size() + 1);
    n.tail(c.size()) += c;
    n.head(c.size()) -= r * c;
    c = n;
  }
  return Poly<double>(c);
}

bool kind_is(const Error &e, ErrorKind k) { return e.kind() == k; }

} // namespace

TEST_CASE("Sylvester resultant by hand", "[polyalg]") {
  CHECK_THAT(sylvester_resultant(Poly<double>{-1.0, 0.0, 1.0}, Poly<double>{-1.0, 1.0}),
             WithinAbs(0.0, 1e-14));
  const Poly<double> f{-1.0, 0.0, 0.0, -1.0};
  CHECK_THAT(sylvester_resultant(f, f.derivative()), WithinRel(-27.0, 1e-13));
  const Poly<double> q{-1.0, 0.0, -1.0};
  CHECK_THAT(sylvester_resultant(q, q.derivative()), WithinRel(-4.0, 1e-13));
}

TEST_CASE("discriminant sign conventions", "[polyalg]") {
  const Poly<double> cubic{-1.0, 0.0, 0.0, -1.0};
  CHECK_THAT(discriminant(cubic), WithinRel(27.0, 1e-13));
  CHECK_THAT(textbook_discriminant(cubic), WithinRel(-27.0, 1e-13));
  CHECK_THAT(discriminant(Poly<double>{-1.0, 0.0, -1.0}), WithinRel(4.0, 1e-13));

  // theta_12^2 theta_21^2 + 4 theta_12^3 + 4 theta_21^3 + 18 theta_12 theta_21 - 27
  // on theta_30 = theta_03 = -1 is the textbook discriminant.
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(-4.0, 4.0);
  for (int rep = 0; rep < 100; ++rep) {
    const double a = u(gen), b = u(gen);
    const double printed = a * a * b * b + 4 * a * a * a + 4 * b * b * b + 18 * a * b - 27;
    const Poly<double> p{-1.0, a, b, -1.0};
    CHECK_THAT(textbook_discriminant(p), WithinAbs(printed, 1e-10 * (1 + std::abs(printed))));
  }
  CHECK_THAT(textbook_discriminant(Poly<double>{-1.0, 1.0, 1.0, -1.0}), WithinAbs(0.0, 1e-12));
}

TEST_CASE("discriminant on ascending coefficients", "[polyalg]") {
  CHECK_THROWS_MATCHES(discriminant(Eigen::VectorXd((Eigen::VectorXd(3) << 1, 2, 0).finished())),
                       Error, Catch::Matchers::Predicate<Error>([](const Error &e) {
                         return kind_is(e, ErrorKind::LeadingCoefficientZero);
                       }));
  CHECK_THROWS_AS(Poly<double>({0.0, 0.0}), Error);
}

TEST_CASE("resultant vanishes exactly with a common root", "[polyalg][property]") {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int rep = 0; rep < 200; ++rep) {
    const double r = u(gen);
    const Poly<double> f = from_roots(1.0, {r, u(gen), u(gen)});
    const Poly<double> g = from_roots(-2.0, {r, u(gen)});
    CHECK(std::abs(sylvester_resultant(f, g)) < 1e-10);
    const Poly<double> h = from_roots(1.0, {u(gen) + 10.0, u(gen) + 10.0});
    CHECK(std::abs(sylvester_resultant(f, h)) > 1e-3);
  }
}

TEST_CASE("planted double roots give a vanishing discriminant", "[polyalg][property]") {
  std::mt19937_64 gen(9);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int rep = 0; rep < 200; ++rep) {
    const double r = u(gen);
    const Poly<double> p = from_roots(-1.0, {r, r, u(gen), u(gen)});
    CHECK(std::abs(discriminant(p)) <= 1e-10 * discriminant_scale(p));
  }
}

TEST_CASE("Sturm root counts", "[polyalg]") {
  const double inf = std::numeric_limits<double>::infinity();
  const Interval<double> pos{0.0, inf};
  CHECK(count_real_roots(Poly<double>{-1.0, 0.0, 0.0, -1.0}, pos) == 0);
  CHECK(count_real_roots(from_roots(-1.0, {1.0, 2.0, -0.5}), pos) == 2);
  CHECK(count_real_roots(from_roots(-1.0, {-1.0, -2.0, -0.5}), pos) == 0);
  CHECK(count_real_roots(from_roots(-1.0, {-1.0, -2.0, -0.5})) == 3);
  CHECK_THROWS_AS(count_real_roots(from_roots(1.0, {1.0, 1.0, 3.0})), Error);
  CHECK(count_real_roots(from_roots(1.0, {1.0, 1.0, 3.0}), {}, true) == 2);
}

TEST_CASE("Sturm agrees with companion eigenvalues", "[polyalg][property]") {
  std::mt19937_64 gen(13);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int rep = 0; rep < 300; ++rep) {
    const int m = 2 + rep % 5;
    Eigen::VectorXd c(m + 1);
    for (int k = 0; k <= m; ++k)
      c[k] = u(gen);
    const Poly<double> p(c);
    const Interval<double> pos{0.0, std::numeric_limits<double>::infinity()};
    CHECK(count_real_roots(p) == companion_real_root_count(p));
    CHECK(count_real_roots(p, pos) == companion_real_root_count(p, pos));
  }
}

TEST_CASE("chamber labels on the d = 3 slice", "[polyalg]") {
  // p(x) = theta_03 + theta_12 x + theta_21 x^2 + theta_30 x^3
  const ChamberLabel a = classify_chamber(Poly<double>{-1.0, -0.5, 2.5, -1.0});
  CHECK(a == ChamberLabel{2, 1, 0, false});
  const ChamberLabel b = classify_chamber(Poly<double>{-1.0, 0.0, 0.0, -1.0});
  CHECK(b == ChamberLabel{0, 1, 1, true});
  const ChamberLabel c = classify_chamber(Poly<double>{-1.0, -3.5, -3.5, -1.0});
  CHECK(c == ChamberLabel{0, 3, 0, true});
  CHECK_THROWS_AS(classify_chamber(Poly<double>{-1.0, 1.0, 1.0, -1.0}), Error);
  CHECK_THROWS_AS(classify_chamber(Poly<double>{1.0, 0.0, 0.0, -1.0}), Error);
}

TEST_CASE("templated on the scalar type", "[polyalg]") {
  const Poly<long double> p{-1.0L, 0.0L, 0.0L, -1.0L};
  CHECK(std::abs(static_cast<double>(discriminant(p)) - 27.0) < 1e-15);
  const Poly<float> q{-1.0f, 0.0f, -1.0f};
  CHECK(std::abs(discriminant(q) - 4.0f) < 1e-5f);
}
