#include "hgd/verify.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <optional>

#include "hgd/errors.hpp"
#include "hgd/holo_bi.hpp"
#include "hgd/holo_uni.hpp"
#include "hgd/inference.hpp"
#include "hgd/polyalg.hpp"
#include "hgd/stats.hpp"

namespace hgd {

ThetaUni random_theta_uni(Rng &rng, int order, Support support) {
  Eigen::VectorXd c(order);
  for (int k = 0; k < order - 1; ++k)
    c[k] = rng.uniform(-2.0, 2.0);
  c[order - 1] = rng.uniform(-2.0, -0.5);
  return ThetaUni(c, support);
}

ThetaBi random_theta_bi(Rng &rng, int d, double mix) {
  ThetaBi th(d);
  for (int k = 1; k <= d; ++k) {
    for (int i = k; i >= 0; --i) {
      const int j = k - i;
      if (k < d)
        th(i, j) = rng.uniform(-1.0, 1.0);
      else if (i == 0 || j == 0)
        th(i, j) = rng.uniform(-2.0, -0.5);
      else
        th(i, j) = rng.uniform(-mix, mix);
    }
  }
  return th;
}

namespace {

struct Tracker {
  SuiteReport r;

  Tracker(std::string name, double threshold) {
    r.name = std::move(name);
    r.threshold = threshold;
  }
  void add(double residual) {
    ++r.cases;
    if (!(residual <= r.max_residual) || std::isnan(residual))
      r.max_residual = std::isnan(residual) ? INFINITY : residual;
  }
  void skip() { ++r.skipped; }
  SuiteReport done(std::string note = {}) {
    r.passed = r.cases > 0 && r.max_residual <= r.threshold;
    r.note = std::move(note);
    return r;
  }
};

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

std::vector<int> degrees(const VerifyOptions &o, int lo, int hi) {
  if (o.d > 0)
    return {o.d};
  std::vector<int> v;
  for (int d = lo; d <= hi; ++d)
    v.push_back(d);
  return v;
}

Rng suite_rng(const VerifyOptions &o, const std::string &name) {
  std::uint64_t h = 1469598103934665603ULL;
  for (char c : name)
    h = (h ^ static_cast<unsigned char>(c)) * 1099511628211ULL;
  return Rng(derive_seed(o.seed, h));
}

// ---- domain -------------------------------------------------------------

SuiteReport suite_domain(const VerifyOptions &o) {
  Rng rng = suite_rng(o, "domain");
  Tracker t("domain", 0.0);
  for (int n = 0; n < 200; ++n) {
    const int order = 1 + static_cast<int>(rng.uniform() * 6);
    Eigen::VectorXd c(order);
    for (int k = 0; k < order; ++k)
      c[k] = rng.uniform() < 0.3 ? 0.0 : rng.uniform(-2.0, 2.0);
    const ThetaUni a(c);
    const Membership ma = classify_theta_uni(a);
    const Membership mb = classify_theta_uni(a.embedded(order + 1));
    t.add(ma.effective_order == mb.effective_order ? 0.0 : 1.0);
  }
  for (int d : degrees(o, 2, 4)) {
    for (int n = 0; n < 1000; ++n) {
      const ThetaBi th = random_theta_bi(rng, d, 3.0);
      const bool proper = in_proper_bivariate_space(th);
      t.add(proper == in_proper_bivariate_space(th.transposed()) ? 0.0 : 1.0);

      // Dense sign sampling on [0, a_max], a_max the Cauchy root bound.
      const Eigen::VectorXd a = th.top_poly();
      const double amax = 1.0 + (a.head(d).cwiseAbs() / std::abs(a[d])).maxCoeff();
      const Poly<double> p(a);
      bool negative = true;
      constexpr int kGrid = 20000;
      for (int i = 0; i <= kGrid && negative; ++i)
        negative = p(amax * i / kGrid) < 0.0;
      const double D = discriminant(p);
      if (std::abs(D) < 1e-6 * discriminant_scale(p)) {
        t.skip(); // too close to a double root for a grid to be trusted
        continue;
      }
      t.add(proper == negative ? 0.0 : 1.0);
    }
  }
  return t.done("mismatch count");
}

// ---- polyalg ------------------------------------------------------------

Eigen::VectorXd random_coeffs(Rng &rng, int deg) {
  Eigen::VectorXd c(deg + 1);
  for (int k = 0; k <= deg; ++k)
    c[k] = rng.uniform(-1.0, 1.0);
  if (std::abs(c[deg]) < 0.1)
    c[deg] = c[deg] < 0 ? -0.1 : 0.1;
  return c;
}

Eigen::VectorXd times_linear(const Eigen::VectorXd &c, double r) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(c.size() + 1);
  out.tail(c.size()) += c;
  out.head(c.size()) -= r * c;
  return out;
}

double resultant_scale(const Poly<double> &f, const Poly<double> &g) {
  return std::pow(f.coeffs().norm(), g.degree()) * std::pow(g.coeffs().norm(), f.degree());
}

SuiteReport suite_resultant(const VerifyOptions &o) {
  Rng rng = suite_rng(o, "resultant");
  Tracker t("resultant", 1e-9);
  long generic_small = 0;
  for (int n = 0; n < 300; ++n) {
    const int df = 1 + static_cast<int>(rng.uniform() * 4);
    const int dg = 1 + static_cast<int>(rng.uniform() * 4);
    const double r = rng.uniform(-2.0, 2.0);
    const Poly<double> f(times_linear(random_coeffs(rng, df), r));
    const Poly<double> g(times_linear(random_coeffs(rng, dg), r));
    t.add(std::abs(sylvester_resultant(f, g)) / resultant_scale(f, g));
    const Poly<double> f2(random_coeffs(rng, df + 1));
    const Poly<double> g2(random_coeffs(rng, dg + 1));
    if (std::abs(sylvester_resultant(f2, g2)) / resultant_scale(f2, g2) < 1e-10)
      ++generic_small;

    const Eigen::VectorXd q = random_coeffs(rng, df);
    const Poly<double> p(times_linear(times_linear(q, r), r));
    t.add(std::abs(discriminant(p)) / discriminant_scale(p));
  }
  if (generic_small > 0)
    t.add(INFINITY);
  return t.done("planted common/double roots give vanishing R and D; random pairs do not");
}

SuiteReport suite_roots(const VerifyOptions &o) {
  Rng rng = suite_rng(o, "roots");
  Tracker t("roots", 0.0);
  const double inf = std::numeric_limits<double>::infinity();
  for (int n = 0; n < 1000; ++n) {
    const int deg = 1 + static_cast<int>(rng.uniform() * 8);
    const Poly<double> p(random_coeffs(rng, deg));
    if (deg >= 2 && std::abs(discriminant(p)) < 1e-8 * discriminant_scale(p)) {
      t.skip();
      continue;
    }
    for (const Interval<double> iv : {Interval<double>{}, Interval<double>{0.0, inf}}) {
      const int a = count_real_roots(p, iv);
      const int b = companion_real_root_count(p, iv);
      t.add(a == b ? 0.0 : 1.0);
    }
  }
  return t.done("Sturm vs companion eigenvalue count mismatches");
}

ChamberLabel chamber_at(double t12, double t21) {
  ThetaBi th(3);
  th(3, 0) = -1.0;
  th(0, 3) = -1.0;
  th(1, 2) = t12;
  th(2, 1) = t21;
  return classify_chamber(Poly<double>(th.top_poly()));
}

SuiteReport suite_chambers(const VerifyOptions &o) {
  Rng rng = suite_rng(o, "chambers");
  Tracker t("chambers", 0.0);
  t.add(chamber_at(-0.5, 2.5) == ChamberLabel{2, 1, 0, false} ? 0.0 : 1.0);
  t.add(chamber_at(0.0, 0.0) == ChamberLabel{0, 1, 1, true} ? 0.0 : 1.0);
  t.add(chamber_at(-3.5, -3.5) == ChamberLabel{0, 3, 0, true} ? 0.0 : 1.0);
  for (int d : degrees(o, 3, 5)) {
    for (int n = 0; n < 200; ++n) {
      const ThetaBi th = random_theta_bi(rng, d, 4.0);
      const Poly<double> p(th.top_poly());
      const double c = std::exp(rng.uniform(std::log(0.1), std::log(10.0)));
      const Poly<double> q(Eigen::VectorXd(c * th.top_poly()));
      try {
        t.add(classify_chamber(p) == classify_chamber(q) ? 0.0 : 1.0);
      } catch (const Error &e) {
        if (e.kind() != ErrorKind::OnDiscriminant)
          throw;
        t.skip();
      }
    }
  }
  return t.done("fixture and scale-covariance mismatches");
}

SuiteReport suite_detp(const VerifyOptions &o) {
  Rng rng = suite_rng(o, "detp");
  Tracker t("detp", 1e-9);
  for (int d : degrees(o, 2, 5)) {
    for (int n = 0; n < 1000; ++n) {
      const ThetaBi th = random_theta_bi(rng, d, 2.0);
      const double detP = pfaffian_matrix(th).determinant();
      const double D = discriminant(Eigen::VectorXd(th.top_poly()));
      t.add(std::abs(detP - std::pow(d, d - 2) * D) / std::max(1.0, std::abs(detP)));
    }
  }
  if (o.d == 0 || o.d == 3) {
    ThetaBi th(3);
    th(3, 0) = th(0, 3) = -1.0;
    const Poly<double> p(th.top_poly());
    t.add(std::abs(textbook_discriminant(p) + 27.0) / 27.0);
    t.add(std::abs(pfaffian_matrix(th).determinant() - 81.0) / 81.0);
  }
  return t.done("|det P - d^(d-2) D| / max(1, |det P|)");
}

// ---- holo_uni -----------------------------------------------------------

std::vector<std::pair<int, Support>> uni_orders(const VerifyOptions &o, int hi) {
  std::vector<std::pair<int, Support>> v;
  for (int d : degrees(o, 1, hi)) {
    v.emplace_back(d, Support::HalfLine);
    if (d % 2 == 0)
      v.emplace_back(d, Support::RealLine);
  }
  return v;
}

SuiteReport suite_oracle(const VerifyOptions &o) {
  Rng rng = suite_rng(o, "oracle");
  Tracker t("oracle", 1e-6);
  for (auto [d, sup] : uni_orders(o, 6)) {
    for (int n = 0; n < 10; ++n) {
      const ThetaUni th = random_theta_uni(rng, d, sup);
      t.add(rel(norm_const_and_derivs(th, 0)[0], quad_moment_uni(th, 0)));
    }
  }
  return t.done("relative difference of A, engine vs quadrature");
}

SuiteReport suite_closedform(const VerifyOptions &o) {
  Rng rng = suite_rng(o, "closedform");
  Tracker t("closedform", 1e-10);
  OdeOptions tight;
  tight.rel_tol = 1e-12;
  for (int n = 0; n < 30; ++n) {
    const ThetaUni a{rng.uniform(-3.0, -0.2)};
    const ThetaUni b{rng.uniform(-2.0, 2.0), rng.uniform(-2.0, -0.3)};
    const ThetaUni c({rng.uniform(-2.0, 2.0), rng.uniform(-2.0, -0.3)}, Support::RealLine);
    for (const ThetaUni &th : {a, b, c}) {
      const double cf = closed_form_A(th);
      t.add(rel(quad_moment_uni(th, 0), cf));
      t.add(rel(norm_const_and_derivs(th, 0, tight)[0], cf));
    }
  }
  return t.done("closed form vs quadrature and vs engine");
}

SuiteReport suite_pathindep(const VerifyOptions &o) {
  Rng rng = suite_rng(o, "pathindep");
  Tracker t("pathindep", 1e-7);
  for (auto [d, sup] : uni_orders(o, 5)) {
    if (d < 2)
      continue;
    for (int n = 0; n < 5; ++n) {
      const ThetaUni a = random_theta_uni(rng, d, sup);
      const ThetaUni b = random_theta_uni(rng, d, sup);
      const HoloStateUni s0 = initial_state(d, 1.0, sup);
      const HoloStateUni direct = transport(s0, b);
      const HoloStateUni via = transport(transport(s0, a), b);
      t.add(((direct.F - via.F).cwiseAbs().array() / direct.F.cwiseAbs().array().max(1e-300))
                .maxCoeff());
    }
  }
  return t.done("max relative difference of F over two routes");
}

SuiteReport suite_recursion(const VerifyOptions &o) {
  Rng rng = suite_rng(o, "recursion");
  Tracker t("recursion", 1e-6);
  double worst_residual = 0.0;
  bool positive = true;
  for (auto [d, sup] : uni_orders(o, 5)) {
    for (int n = 0; n < 4; ++n) {
      const ThetaUni th = random_theta_uni(rng, d, sup);
      const Eigen::VectorXd D = norm_const_and_derivs(th, 2 * d);
      for (int m = 0; m <= 2 * d; ++m) {
        const double q = quad_moment_uni(th, m);
        // Odd real-line moments can cancel; compare against the scale of |x|^m.
        const double scale = sup == Support::RealLine
                                 ? std::sqrt(quad_moment_uni(th, 2 * m) * D[0])
                                 : std::abs(q);
        t.add(std::abs(D[m] - q) / scale);
        if (sup == Support::HalfLine && !(D[m] > 0.0))
          positive = false;
      }
      double lhs = sup == Support::HalfLine ? 1.0 : 0.0, mag = lhs;
      for (int k = 1; k <= d; ++k) {
        lhs += k * th[k] * D[k - 1];
        mag += std::abs(k * th[k] * D[k - 1]);
      }
      worst_residual = std::max(worst_residual, std::abs(lhs) / mag);
    }
  }
  t.add(worst_residual * 1e3); // residual threshold 1e-9 expressed on the 1e-6 scale
  if (!positive)
    t.add(INFINITY);
  return t.done("extended derivatives vs quadrature moments; ODE residual; positivity");
}

// ---- holo_bi ------------------------------------------------------------

// Random proper theta reachable from its product point without crossing D = 0.
std::optional<DerivTableBi> reachable_table(Rng &rng, int d, int max_order, ThetaBi &out,
                                            const OdeOptions &ode = {}) {
  for (int attempt = 0; attempt < 50; ++attempt) {
    out = random_theta_bi(rng, d, 0.6);
    if (!in_proper_bivariate_space(out))
      continue;
    try {
      return norm_const_bi(out, max_order, ode);
    } catch (const Error &e) {
      if (e.kind() != ErrorKind::PathCrossesSingularity)
        throw;
    }
  }
  return std::nullopt;
}

SuiteReport suite_bisolve(const VerifyOptions &o) {
  Rng rng = suite_rng(o, "bisolve");
  Tracker t("bisolve", 1e-5);
  for (int d : degrees(o, 2, 3)) {
    for (int n = 0; n < 4; ++n) {
      ThetaBi th;
      const auto tab = reachable_table(rng, d, 2 * d - 3, th);
      if (!tab) {
        t.skip();
        continue;
      }
      const int k = 2 * d - 3;
      for (int c = 0; c <= k; ++c)
        t.add(rel((*tab)(k - c, c), quad_A_bi(th, k - c, c)));
      t.add(rel(tab->A(), quad_A_bi(th, 0, 0)));
    }
  }
  return t.done("order 2d-3 entries from P X = Q vs 2-D quadrature");
}

SuiteReport suite_bisym(const VerifyOptions &o) {
  Rng rng = suite_rng(o, "bisym");
  Tracker t("bisym", 1e-8);
  for (int d : degrees(o, 2, 4)) {
    for (int n = 0; n < 4; ++n) {
      ThetaBi th;
      const auto tab = reachable_table(rng, d, 2 * d, th);
      if (!tab) {
        t.skip();
        continue;
      }
      const DerivTableBi tr = norm_const_bi(th.transposed(), 2 * d);
      for (int i = 0; i <= 2 * d; ++i)
        for (int j = 0; i + j <= 2 * d; ++j)
          t.add(rel(tr(i, j), (*tab)(j, i)));
    }
  }
  return t.done("table of the transposed theta vs transposed table");
}

SuiteReport suite_biproduct(const VerifyOptions &o) {
  Rng rng = suite_rng(o, "biproduct");
  Tracker t("biproduct", 1e-10);
  for (int d : degrees(o, 2, 5)) {
    for (int n = 0; n < 4; ++n) {
      const double c1 = rng.uniform(0.3, 3.0), c2 = rng.uniform(0.3, 3.0);
      const DerivTableBi tab = extend_table(initial_state_bi(d, c1, c2), 2 * d);
      const Eigen::VectorXd mx = norm_const_and_derivs(ThetaUni::leading(d, c1), 2 * d);
      const Eigen::VectorXd my = norm_const_and_derivs(ThetaUni::leading(d, c2), 2 * d);
      for (int i = 0; i <= 2 * d; ++i)
        for (int j = 0; i + j <= 2 * d; ++j)
          t.add(rel(tab(i, j), mx[i] * my[j]));
    }
  }
  return t.done("product-point entries vs products of univariate moments");
}

SuiteReport suite_biresidual(const VerifyOptions &o) {
  Rng rng = suite_rng(o, "biresidual");
  Tracker t("biresidual", 1e-8);
  for (int d : degrees(o, 2, 4)) {
    for (int n = 0; n < 4; ++n) {
      ThetaBi th;
      const auto tab = reachable_table(rng, d, 2 * d, th);
      if (!tab) {
        t.skip();
        continue;
      }
      t.add(identity_residual(*tab));
    }
  }
  return t.done("relative residual of both identity families");
}

SuiteReport suite_bitransport(const VerifyOptions &o) {
  Rng rng = suite_rng(o, "bitransport");
  Tracker t("bitransport", 1e-5);
  for (int d : degrees(o, 2, 3)) {
    for (int n = 0; n < 6; ++n) {
      ThetaBi th;
      const auto tab = reachable_table(rng, d, 0, th);
      if (!tab) {
        t.skip();
        continue;
      }
      t.add(rel(tab->A(), quad_A_bi(th, 0, 0)));
    }
  }
  return t.done("transported A vs 2-D quadrature");
}

// ---- oracle ---------------------------------------------------------------

SuiteReport suite_quadself(const VerifyOptions &o) {
  Rng rng = suite_rng(o, "quadself");
  Tracker t("quadself", 1.0);
  QuadOptions loose, tight;
  loose.rel_tol = 1e-9;
  tight.rel_tol = 0.5e-9;
  for (auto [d, sup] : uni_orders(o, 6)) {
    for (int n = 0; n < 5; ++n) {
      const ThetaUni th = random_theta_uni(rng, d, sup);
      const double a = quad_moment_uni(th, 1, loose);
      const double b = quad_moment_uni(th, 1, tight);
      const double scale = sup == Support::RealLine
                               ? std::sqrt(quad_moment_uni(th, 2) * quad_moment_uni(th, 0))
                               : std::abs(b);
      // Reported as a multiple of the requested tolerance.
      t.add(std::abs(a - b) / scale / (10.0 * loose.rel_tol));
    }
  }
  return t.done("change under tolerance halving, in units of the error bound");
}

SuiteReport suite_sampler(const VerifyOptions &o) {
  Tracker t("sampler", 1.0);
  const ThetaUni thetas[] = {ThetaUni{-1.0, 3.0, -2.0}, ThetaUni{0.0, -1.0},
                             ThetaUni({1.0, 4.0, -2.0, -3.0}, Support::RealLine)};
  double worst_mean = 0.0;
  for (const ThetaUni &th : thetas) {
    const UniSampler s(th);
    for (std::uint64_t k = 0; k < 20; ++k) {
      const std::vector<double> x = s.draw(10000, derive_seed(o.seed, k));
      const KsResult ks = ks_test(x, [&](double v) { return s.cdf(v); });
      // Ratio to the 1% critical value; below 1 passes.
      t.add(ks.statistic * (std::sqrt(1e4) + 0.12 + 0.11 / 100.0) / 1.6276);
    }
    // Sample mean against the quadrature mean (4 sigma).
    const std::vector<double> x = s.draw(100000, derive_seed(o.seed, 99));
    const double mu = quad_moment_uni(th, 1) / quad_moment_uni(th, 0);
    const double sd = std::sqrt(quad_moment_uni(th, 2) / quad_moment_uni(th, 0) - mu * mu);
    worst_mean = std::max(worst_mean, std::abs(mean(x) - mu) / (sd / std::sqrt(1e5)) / 4.0);
  }
  t.add(worst_mean);
  return t.done("KS distance over the 1% critical value; mean error over 4 sigma");
}

// ---- inference ------------------------------------------------------------

double vec_rel(const Eigen::VectorXd &a, const Eigen::VectorXd &b) {
  const double floor = 1e-2 * b.cwiseAbs().maxCoeff();
  double worst = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i)
    worst = std::max(worst, std::abs(a[i] - b[i]) / std::max(std::abs(b[i]), floor));
  return worst;
}

SuiteReport suite_gradient(const VerifyOptions &o) {
  Rng rng = suite_rng(o, "gradient");
  Tracker t("gradient", 1e-5);
  OdeOptions tight;
  tight.rel_tol = 1e-13;
  for (int d : degrees(o, 3, 4)) {
    for (int n = 0; n < 10; ++n) {
      const Support sup = d % 2 == 0 && n % 2 == 1 ? Support::RealLine : Support::HalfLine;
      const ThetaUni th = random_theta_uni(rng, d, sup);
      const Eigen::VectorXd D = norm_const_and_derivs(th, d, tight);
      Eigen::VectorXd engine(d), fd(d);
      for (int m = 1; m <= d; ++m) {
        const double h = 1e-4;
        Eigen::VectorXd up = th.coeffs(), dn = th.coeffs();
        up[m - 1] += h;
        dn[m - 1] -= h;
        const double lu = std::log(norm_const_and_derivs(ThetaUni(up, sup), 0, tight)[0]);
        const double ld = std::log(norm_const_and_derivs(ThetaUni(dn, sup), 0, tight)[0]);
        fd[m - 1] = (lu - ld) / (2 * h);
        engine[m - 1] = D[m] / D[0];
      }
      t.add(vec_rel(fd, engine));
    }
  }
  return t.done("grad psi vs central differences of log A");
}

SuiteReport suite_fisher(const VerifyOptions &o) {
  Rng rng = suite_rng(o, "fisher");
  Tracker t("fisher", 1e-4);
  OdeOptions tight;
  tight.rel_tol = 1e-13;
  bool spd = true;
  double asym = 0.0;
  for (int d : degrees(o, 3, 4)) {
    for (int n = 0; n < 10; ++n) {
      const Support sup = d % 2 == 0 && n % 2 == 1 ? Support::RealLine : Support::HalfLine;
      const ThetaUni th = random_theta_uni(rng, d, sup);
      UniEngine eng(tight);
      const Eigen::MatrixXd I = fisher_info(th, eng);
      asym = std::max(asym, (I - I.transpose()).cwiseAbs().maxCoeff() / I.cwiseAbs().maxCoeff());
      spd = spd && Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(I).eigenvalues().minCoeff() > 0;
      for (int l = 1; l <= d; ++l) {
        const double h = 1e-4;
        Eigen::VectorXd up = th.coeffs(), dn = th.coeffs();
        up[l - 1] += h;
        dn[l - 1] -= h;
        const Eigen::VectorXd Du = norm_const_and_derivs(ThetaUni(up, sup), d, tight);
        const Eigen::VectorXd Dd = norm_const_and_derivs(ThetaUni(dn, sup), d, tight);
        const Eigen::VectorXd fd = (Du.tail(d) / Du[0] - Dd.tail(d) / Dd[0]) / (2 * h);
        t.add(vec_rel(fd, I.col(l - 1)));
      }
    }
  }
  if (!spd || asym > 1e-12)
    t.add(INFINITY);
  return t.done("Fisher matrix vs central differences of grad psi; symmetry; definiteness");
}

SuiteReport suite_stationarity(const VerifyOptions &o) {
  Rng rng = suite_rng(o, "stationarity");
  Tracker t("stationarity", 1e-6);
  for (auto [d, sup] : uni_orders(o, 4)) {
    for (int n = 0; n < 3; ++n) {
      const ThetaUni th = random_theta_uni(rng, d, sup);
      SuffStatsUni st;
      st.n = 1000;
      st.moments.resize(d);
      const double A = quad_moment_uni(th, 0);
      for (int m = 1; m <= d; ++m)
        st.moments[m - 1] = quad_moment_uni(th, m) / A;
      const FitResult fit = fit_mle(st, d, sup);
      if (!fit.converged) {
        t.add(INFINITY);
        continue;
      }
      UniEngine eng;
      const Eigen::VectorXd mu = model_moments(fit.theta_hat, d, eng);
      t.add(vec_rel(mu.tail(d), st.moments));
      t.add(vec_rel(fit.theta_hat.coeffs(), th.coeffs()) * 1e-2);
    }
  }
  return t.done("moment matching at converged fits");
}

SuiteReport suite_coherence(const VerifyOptions &o) {
  Tracker t("coherence", 0.0);
  const ThetaUni sources[] = {ThetaUni{-1.0}, ThetaUni{-1.0, 3.0, -2.0}, ThetaUni{3.0, -2.0},
                              ThetaUni{0.0, -1.0}};
  std::uint64_t k = 0;
  for (const ThetaUni &src : sources) {
    const UniSampler s(src);
    for (int rep = 0; rep < 5; ++rep) {
      const std::vector<double> x = s.draw(500, derive_seed(o.seed, 1000 + k++));
      for (int d = 2; d <= 3; ++d) {
        const SuffStatsUni st = suff_stats(x, d, Support::HalfLine);
        const TestResult tr = score_test_halfline(st, d, 0.05);
        const bool exists = mle_existence_check(tr.theta_hat_null, st);
        t.add(exists == (tr.statistic < 0.0) ? 0.0 : 1.0);
      }
    }
  }
  return t.done("existence check vs sign of T");
}

using SuiteFn = SuiteReport (*)(const VerifyOptions &);

const std::vector<std::pair<std::string, SuiteFn>> &registry() {
  static const std::vector<std::pair<std::string, SuiteFn>> r = {
      {"domain", suite_domain},         {"resultant", suite_resultant},
      {"roots", suite_roots},           {"chambers", suite_chambers},
      {"detp", suite_detp},             {"oracle", suite_oracle},
      {"closedform", suite_closedform}, {"pathindep", suite_pathindep},
      {"recursion", suite_recursion},   {"bisolve", suite_bisolve},
      {"bisym", suite_bisym},           {"biproduct", suite_biproduct},
      {"biresidual", suite_biresidual}, {"bitransport", suite_bitransport},
      {"quadself", suite_quadself},     {"sampler", suite_sampler},
      {"gradient", suite_gradient},     {"fisher", suite_fisher},
      {"stationarity", suite_stationarity}, {"coherence", suite_coherence},
  };
  return r;
}

} // namespace

const std::vector<std::string> &suite_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto &[n, f] : registry())
      v.push_back(n);
    return v;
  }();
  return names;
}

SuiteReport run_suite(const std::string &name, const VerifyOptions &opts) {
  for (const auto &[n, f] : registry()) {
    if (n != name)
      continue;
    try {
      return f(opts);
    } catch (const std::exception &e) {
      SuiteReport r;
      r.name = name;
      r.passed = false;
      r.max_residual = INFINITY;
      r.note = std::string("exception: ") + e.what();
      return r;
    }
  }
  throw Error(ErrorKind::InvalidInput, "unknown suite '" + name + "'");
}

std::vector<SuiteReport> run_verify(const VerifyOptions &opts) {
  const std::vector<std::string> &names = opts.suites.empty() ? suite_names() : opts.suites;
  std::vector<SuiteReport> out;
  for (const std::string &n : names)
    out.push_back(run_suite(n, opts));
  return out;
}

} // namespace hgd
