#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hgd/cli.hpp"
#include "hgd/holo_bi.hpp"
#include "hgd/holo_uni.hpp"
#include "hgd/inference.hpp"
#include "hgd/oracle.hpp"
#include "hgd/polyalg.hpp"
#include "hgd/stats.hpp"
#include "hgd/verify.hpp"

using namespace hgd;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

// Componentwise relative error against max(|ref_i|, 1e-2 max|ref|).
double rel_vec(const Eigen::VectorXd &a, const Eigen::VectorXd &ref) {
  const double floor = 1e-2 * ref.cwiseAbs().maxCoeff();
  double worst = 0.0;
  for (Eigen::Index i = 0; i < ref.size(); ++i)
    worst = std::max(worst, std::abs(a[i] - ref[i]) / std::max(std::abs(ref[i]), floor));
  return worst;
}

OdeOptions tight() {
  OdeOptions o;
  o.rel_tol = 1e-12;
  return o;
}

struct Outcome {
  bool pass;
  std::string detail;
};

int failures = 0;

void report(int id, const char *name, const std::function<Outcome()> &body) {
  const auto t0 = Clock::now();
  Outcome r;
  try {
    r = body();
  } catch (const std::exception &e) {
    r = {false, std::string("exception: ") + e.what()};
  }
  failures += !r.pass;
  std::printf("%s %2d %s: %s [%.1f s]\n", r.pass ? "PASS" : "FAIL", id, name, r.detail.c_str(),
              seconds_since(t0));
  std::fflush(stdout);
}

std::string fmt(const char *f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Outcome oracle_equivalence() {
  constexpr double tol = 1e-6, budget = 60.0;
  Rng rng(derive_seed(20141, 1));
  double worst = 0.0, engine_time = 0.0;
  long cases = 0, bad = 0;
  for (int d = 2; d <= 6; ++d) {
    for (Support sup : {Support::HalfLine, Support::RealLine}) {
      if (sup == Support::RealLine && d % 2)
        continue;
      for (int n = 0; n < 100; ++n) {
        const ThetaUni th = random_theta_uni(rng, d, sup);
        const auto t0 = Clock::now();
        double r;
        try {
          r = rel(norm_const_and_derivs(th, 0)[0], quad_moment_uni(th, 0));
        } catch (const Error &) {
          r = INFINITY;
        }
        engine_time += seconds_since(t0);
        worst = std::max(worst, r);
        bad += !(r <= tol);
        ++cases;
      }
    }
  }
  return {bad == 0 && engine_time < budget,
          fmt("%ld points, %ld over tol, max rel %.2e (tol %.0e), engine+quadrature %.2f s "
              "(limit %.0f s)",
              cases, bad, worst, tol, engine_time, budget)};
}

Outcome closed_forms() {
  constexpr double tol = 1e-10;
  Rng rng(derive_seed(20141, 2));
  double worst = 0.0;
  auto check = [&](const ThetaUni &th) {
    worst = std::max(worst, rel(norm_const_and_derivs(th, 0, tight())[0], closed_form_A(th)));
  };
  for (int n = 0; n < 100; ++n) {
    check(ThetaUni{rng.uniform(-2.0, -0.5)});
    check(random_theta_uni(rng, 2, Support::HalfLine));
    check(random_theta_uni(rng, 2, Support::RealLine));
  }
  return {worst <= tol, fmt("300 points, max rel %.2e (tol %.0e)", worst, tol)};
}

Outcome derivatives() {
  constexpr double tol_grad = 1e-5, tol_fisher = 1e-4, h = 1e-4;
  Rng rng(derive_seed(20141, 3));
  double wg = 0.0, wf = 0.0;
  for (int d = 3; d <= 4; ++d) {
    for (int n = 0; n < 20; ++n) {
      const ThetaUni th = random_theta_uni(rng, d, Support::HalfLine);
      UniEngine eng(tight());
      const Eigen::VectorXd mu = model_moments(th, d, eng);
      const Eigen::MatrixXd I = fisher_info(th, eng);
      Eigen::VectorXd fd_grad(d);
      Eigen::MatrixXd fd_fisher(d, d);
      for (int j = 0; j < d; ++j) {
        Eigen::VectorXd up = th.coeffs(), dn = th.coeffs();
        up[j] += h;
        dn[j] -= h;
        const Eigen::VectorXd Du = norm_const_and_derivs(ThetaUni(up), d, tight());
        const Eigen::VectorXd Dd = norm_const_and_derivs(ThetaUni(dn), d, tight());
        fd_grad[j] = (std::log(Du[0]) - std::log(Dd[0])) / (2 * h);
        for (int k = 0; k < d; ++k)
          fd_fisher(k, j) = (Du[k + 1] / Du[0] - Dd[k + 1] / Dd[0]) / (2 * h);
      }
      wg = std::max(wg, rel_vec(mu.segment(1, d), fd_grad));
      for (int j = 0; j < d; ++j)
        wf = std::max(wf, rel_vec(I.col(j), fd_fisher.col(j)));
    }
  }
  return {wg <= tol_grad && wf <= tol_fisher,
          fmt("20 points each for d=3,4; grad max rel %.2e (tol %.0e), Fisher max rel %.2e "
              "(tol %.0e)",
              wg, tol_grad, wf, tol_fisher)};
}

Outcome detp_identity() {
  constexpr double tol = 1e-9;
  Rng rng(derive_seed(20141, 4));
  double worst = 0.0;
  for (int d = 2; d <= 5; ++d) {
    for (int n = 0; n < 1000; ++n) {
      const ThetaBi th = random_theta_bi(rng, d, 2.0);
      const double detP = pfaffian_matrix(th).determinant();
      const double D = discriminant(Eigen::VectorXd(th.top_poly()));
      worst = std::max(worst, std::abs(detP - std::pow(d, d - 2) * D) / std::max(1.0, std::abs(detP)));
    }
  }
  ThetaBi origin(3);
  origin(3, 0) = origin(0, 3) = -1.0;
  const double printed = textbook_discriminant(Poly<double>(origin.top_poly()));
  const bool printed_ok = std::abs(printed + 27.0) <= 1e-12;
  return {worst <= tol && printed_ok,
          fmt("4000 points, max rel residual %.2e (tol %.0e); printed d=3 formula at the origin "
              "%.6g (expect -27)",
              worst, tol, printed)};
}

std::string columns_summary(const ExperimentResult &r, bool with_mean_abs) {
  std::string s;
  for (const StatColumn &c : r.columns) {
    s += fmt(" %s: KS p=%.3f", c.name.c_str(), c.ks_p_value);
    if (with_mean_abs)
      s += fmt(" mean|.|/E|N|=%.3f", c.mean_abs / kMeanAbsNormal);
    s += ";";
  }
  return s + fmt(" failed reps %ld", r.failed);
}

bool ks_all(const ExperimentResult &r, double level) {
  return !r.columns.empty() && std::all_of(r.columns.begin(), r.columns.end(), [&](const StatColumn &c) {
    return c.ks_defined && c.ks_p_value > level;
  });
}

ExperimentResult experiment(Support sup, std::initializer_list<double> theta, const char *stat) {
  ExperimentConfig cfg;
  cfg.support = sup;
  cfg.theta_star = ThetaUni(Eigen::Map<const Eigen::VectorXd>(theta.begin(), theta.size()), sup);
  cfg.n = 1000;
  cfg.replications = 200;
  cfg.seed = 20141;
  cfg.statistic = stat;
  return run_experiment(cfg);
}

Outcome pvalues_halfline() {
  constexpr double level = 0.01, lo = 0.6, hi = 1.0;
  const ExperimentResult r = experiment(Support::HalfLine, {-1.0, 3.0, -2.0}, "pvalues");
  bool band = !r.columns.empty();
  for (const StatColumn &c : r.columns)
    band = band && c.mean_abs >= lo * kMeanAbsNormal && c.mean_abs <= hi * kMeanAbsNormal;
  return {ks_all(r, level) && band,
          fmt("KS level %.2f, band [%.1f, %.1f] E|N|;", level, lo, hi) + columns_summary(r, true)};
}

Outcome score_halfline() {
  const ExperimentResult r = experiment(Support::HalfLine, {3.0, -2.0, 0.0}, "score");
  return {ks_all(r, 0.01), "T vs N(0,1) at 1%;" + columns_summary(r, false)};
}

Outcome realline() {
  const ExperimentResult p = experiment(Support::RealLine, {1.0, 4.0, -2.0, -3.0}, "pvalues");
  const ExperimentResult t = experiment(Support::RealLine, {2.0, -1.0, 0.0, 0.0}, "score");
  return {ks_all(p, 0.01) && ks_all(t, 0.01),
          "p_i vs N(0,1):" + columns_summary(p, false) + " | T vs chi2(2):" + columns_summary(t, false)};
}

Outcome chambers() {
  auto label = [](double t12, double t21) {
    ThetaBi th(3);
    th(3, 0) = th(0, 3) = -1.0;
    th(1, 2) = t12;
    th(2, 1) = t21;
    return classify_chamber(Poly<double>(th.top_poly()));
  };
  const bool b = label(0.0, 0.0) == ChamberLabel{0, 1, 1, true};
  const bool a = label(-0.5, 2.5) == ChamberLabel{2, 1, 0, false};
  const bool c = label(-5.0, -5.0) == ChamberLabel{0, 3, 0, true};
  const ChamberGrid g = chamber_grid(-6.0, 6.0, 0.1);
  return {a && b && c && g.sign_change_curves == 2,
          fmt("B at (0,0) %s, A at (-0.5,2.5) %s, C at (-5,-5) %s; grid [-6,6] step 0.1: %d "
              "sign-change curves (expect 2)",
              b ? "ok" : "wrong", a ? "ok" : "wrong", c ? "ok" : "wrong", g.sign_change_curves)};
}

Outcome bivariate() {
  constexpr double tol = 1e-5;
  Rng rng(derive_seed(20141, 9));
  double worst = 0.0;
  int done = 0;
  while (done < 50) {
    const ThetaBi th = random_theta_bi(rng, 2);
    if (!in_proper_bivariate_space(th))
      continue;
    worst = std::max(worst, rel(norm_const_bi(th, 0, tight()).A(), quad_A_bi(th, 0, 0)));
    ++done;
  }
  return {worst <= tol, fmt("50 proper points, max rel %.2e (tol %.0e)", worst, tol)};
}

Outcome verify_suites() {
  const char *argv[] = {"hgd", "verify"};
  std::ostringstream out, err;
  const int code = run_cli(2, argv, out, err);
  const nlohmann::json j = nlohmann::json::parse(out.str());
  std::string failed;
  for (const auto &s : j["suites"])
    if (!s["passed"].get<bool>())
      failed += " " + s["suite"].get<std::string>();
  return {code == 0 && failed.empty(),
          fmt("hgd verify exit code %d, %zu suites, failing:%s", code, j["suites"].size(),
              failed.empty() ? " none" : failed.c_str())};
}

} // namespace

int main() {
  report(1, "oracle equivalence", oracle_equivalence);
  report(2, "closed forms", closed_forms);
  report(3, "derivatives", derivatives);
  report(4, "det P identity", detp_identity);
  report(5, "half-line p_i", pvalues_halfline);
  report(6, "half-line score statistic", score_halfline);
  report(7, "real-line p_i and score statistic", realline);
  report(8, "chambers", chambers);
  report(9, "bivariate transport", bivariate);
  report(10, "property suites", verify_suites);
  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
