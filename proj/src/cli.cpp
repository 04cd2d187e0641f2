#include "hgd/cli.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "hgd/errors.hpp"
#include "hgd/holo_bi.hpp"
#include "hgd/holo_uni.hpp"
#include "hgd/inference.hpp"
#include "hgd/oracle.hpp"
#include "hgd/polyalg.hpp"
#include "hgd/stats.hpp"
#include "hgd/verify.hpp"

namespace hgd {

using json = nlohmann::ordered_json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string trim(const std::string &s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos)
    return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_number(const std::string &field, const std::string &where) {
  const std::string f = trim(field);
  char *end = nullptr;
  const double v = std::strtod(f.c_str(), &end);
  if (f.empty() || end != f.c_str() + f.size() || !std::isfinite(v))
    throw Error(ErrorKind::InvalidInput, "cannot parse '" + f + "' " + where);
  return v;
}

std::vector<double> parse_list(const std::string &text) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string field;
  while (std::getline(ss, field, ','))
    v.push_back(parse_number(field, "in coefficient list"));
  if (v.empty())
    throw Error(ErrorKind::InvalidInput, "empty coefficient list");
  return v;
}

std::vector<std::vector<double>> read_rows(std::istream &in, std::size_t columns) {
  std::vector<std::vector<double>> rows;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty())
      continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ','))
      row.push_back(parse_number(field, "at line " + std::to_string(lineno)));
    if (row.size() != columns)
      throw Error(ErrorKind::InvalidInput, "expected " + std::to_string(columns) +
                                               " column(s) at line " + std::to_string(lineno));
    rows.push_back(std::move(row));
  }
  if (rows.empty())
    throw Error(ErrorKind::EmptySample, "no observations in input");
  return rows;
}

std::string fmt(double v) {
  if (std::isnan(v))
    return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json to_json(const Eigen::VectorXd &v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i)
    a.push_back(v[i]);
  return a;
}

json to_json(const Eigen::MatrixXd &m) {
  json a = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    a.push_back(to_json(Eigen::VectorXd(m.row(i).transpose())));
  return a;
}

json theta_bi_json(const ThetaBi &th) {
  json o = json::object();
  for (int idx = 0; idx < th.size(); ++idx) {
    const auto [i, j] = ThetaBi::flat_pair(idx);
    o[std::to_string(i) + std::to_string(j)] = th(i, j);
  }
  return o;
}

Support parse_support(const std::string &mode) {
  if (mode == "halfline")
    return Support::HalfLine;
  if (mode == "realline")
    return Support::RealLine;
  throw Error(ErrorKind::InvalidInput, "unknown mode '" + mode + "'");
}

std::string read_file(const std::string &path) {
  std::ifstream f(path);
  if (!f)
    throw Error(ErrorKind::InvalidInput, "cannot open '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::string theta_text(const std::string &theta, const std::string &file) {
  if (!file.empty())
    return read_file(file);
  if (theta.empty())
    throw Error(ErrorKind::InvalidInput, "no theta given (use --theta or --theta-file)");
  return theta;
}

char chamber_letter(const ChamberLabel &c) {
  if (c == ChamberLabel{2, 1, 0, false})
    return 'A';
  if (c == ChamberLabel{0, 1, 1, true})
    return 'B';
  if (c == ChamberLabel{0, 3, 0, true})
    return 'C';
  return '?';
}

int sgn(double v) { return (v > 0) - (v < 0); }

bool input_error(ErrorKind k) {
  switch (k) {
  case ErrorKind::NotConverged:
    return false;
  default:
    return true;
  }
}

} // namespace

std::vector<double> read_csv_column(std::istream &in) {
  std::vector<double> out;
  for (auto &r : read_rows(in, 1))
    out.push_back(r[0]);
  return out;
}

std::vector<std::array<double, 2>> read_csv_pairs(std::istream &in) {
  std::vector<std::array<double, 2>> out;
  for (auto &r : read_rows(in, 2))
    out.push_back({r[0], r[1]});
  return out;
}

ThetaUni parse_theta_uni(const std::string &text_in, Support support) {
  const std::string text = trim(text_in);
  if (!text.empty() && text.front() == '{') {
    json j;
    try {
      j = json::parse(text);
    } catch (const json::exception &e) {
      throw Error(ErrorKind::InvalidInput, std::string("malformed theta JSON: ") + e.what());
    }
    if (!j.contains("coeffs") || !j["coeffs"].is_array())
      throw Error(ErrorKind::InvalidInput, "theta JSON needs a 'coeffs' array");
    std::vector<double> c;
    for (const auto &v : j["coeffs"]) {
      if (!v.is_number())
        throw Error(ErrorKind::InvalidInput, "theta JSON coefficients must be numbers");
      c.push_back(v.get<double>());
    }
    if (j.contains("d") && j["d"].get<int>() != static_cast<int>(c.size()))
      throw Error(ErrorKind::InvalidInput, "theta JSON 'd' does not match the coefficient count");
    return ThetaUni(Eigen::Map<Eigen::VectorXd>(c.data(), static_cast<Eigen::Index>(c.size())),
                    support);
  }
  std::vector<double> c = parse_list(text);
  return ThetaUni(Eigen::Map<Eigen::VectorXd>(c.data(), static_cast<Eigen::Index>(c.size())),
                  support);
}

ThetaBi parse_theta_bi(const std::string &text_in, int d_hint) {
  const std::string text = trim(text_in);
  if (!text.empty() && text.front() == '{') {
    json j;
    try {
      j = json::parse(text);
    } catch (const json::exception &e) {
      throw Error(ErrorKind::InvalidInput, std::string("malformed theta JSON: ") + e.what());
    }
    if (!j.contains("d") || !j.contains("coeffs") || !j["coeffs"].is_object())
      throw Error(ErrorKind::InvalidInput, "bivariate theta JSON needs 'd' and a 'coeffs' object");
    const int d = j["d"].get<int>();
    ThetaBi th(d);
    for (int idx = 0; idx < th.size(); ++idx) {
      const auto [i, jj] = ThetaBi::flat_pair(idx);
      const std::string key = std::to_string(i) + std::to_string(jj);
      if (!j["coeffs"].contains(key))
        throw Error(ErrorKind::InvalidInput, "theta JSON is missing coefficient " + key);
      th(i, jj) = j["coeffs"][key].get<double>();
    }
    return th;
  }
  const std::vector<double> c = parse_list(text);
  int d = d_hint;
  if (d <= 0) {
    for (d = 1; ThetaBi::size_for(d) < static_cast<int>(c.size()); ++d) {
    }
  }
  if (ThetaBi::size_for(d) != static_cast<int>(c.size()))
    throw Error(ErrorKind::InvalidInput, "a degree-" + std::to_string(d) + " bivariate theta has " +
                                             std::to_string(ThetaBi::size_for(d)) +
                                             " coefficients, got " + std::to_string(c.size()));
  return ThetaBi(d, c);
}

ExperimentResult run_experiment(const ExperimentConfig &cfg) {
  if (cfg.n < 1 || cfg.replications < 1)
    throw Error(ErrorKind::InvalidInput, "n and replications must be at least 1");
  const ThetaUni &ts = cfg.theta_star;
  const int d = ts.order();
  const bool score = cfg.statistic == "score";
  if (!score && cfg.statistic != "pvalues")
    throw Error(ErrorKind::InvalidInput, "statistic must be 'pvalues' or 'score'");

  ExperimentResult res;
  Eigen::VectorXd sd_star;
  if (!score) {
    UniEngine eng;
    const Eigen::MatrixXd inv = fisher_info(ts, eng).inverse();
    sd_star = inv.diagonal().cwiseSqrt();
    for (int i = 1; i <= d; ++i)
      res.header.push_back("p" + std::to_string(i));
  } else {
    res.header.push_back("T");
  }
  const UniSampler sampler(ts);
  const long reps = cfg.replications;
  res.rows.assign(reps, std::vector<double>(res.header.size(), kNaN));
  res.ok.assign(reps, false);

  auto work = [&](long r) {
    const std::vector<double> x = sampler.draw(cfg.n, derive_seed(cfg.seed, r));
    try {
      const SuffStatsUni st = suff_stats(x, d, cfg.support);
      if (!score) {
        const FitResult fit = fit_mle(st, d, cfg.support);
        if (!fit.converged)
          return;
        for (int i = 1; i <= d; ++i)
          res.rows[r][i - 1] =
              std::sqrt(static_cast<double>(cfg.n)) * (fit.theta_hat[i] - ts[i]) / sd_star[i - 1];
      } else {
        const TestResult t = cfg.support == Support::HalfLine
                                 ? score_test_halfline(st, d, 0.05)
                                 : score_test_realline(st, d, 0.05);
        res.rows[r][0] = t.statistic;
      }
      res.ok[r] = true;
    } catch (const Error &) {
      // counted as a failed replication
    }
  };

  unsigned threads = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<long>(threads, reps));
  if (threads <= 1) {
    for (long r = 0; r < reps; ++r)
      work(r);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < threads; ++w)
      pool.emplace_back([&, w] {
        for (long r = w; r < reps; r += threads)
          work(r);
      });
    for (auto &t : pool)
      t.join();
  }

  for (long r = 0; r < reps; ++r)
    res.failed += res.ok[r] ? 0 : 1;
  for (std::size_t c = 0; c < res.header.size(); ++c) {
    StatColumn col;
    col.name = res.header[c];
    col.reference = score && cfg.support == Support::RealLine ? "chi2(2)" : "N(0,1)";
    for (long r = 0; r < reps; ++r)
      if (res.ok[r])
        col.values.push_back(res.rows[r][c]);
    col.mean = mean(col.values);
    col.variance = variance(col.values);
    for (double v : col.values)
      col.mean_abs += std::abs(v) / col.values.size();
    col.ks_defined = col.values.size() >= 2;
    if (col.ks_defined) {
      const std::function<double(double)> cdf =
          col.reference == "N(0,1)" ? std::function<double(double)>(normal_cdf)
                                    : std::function<double(double)>(chisq2_cdf);
      const KsResult ks = ks_test(col.values, cdf);
      col.ks_statistic = ks.statistic;
      col.ks_p_value = ks.p_value;
    }
    res.columns.push_back(std::move(col));
  }
  return res;
}

ChamberGrid chamber_grid(double lo, double hi, double step) {
  if (!(step > 0.0) || !(hi > lo))
    throw Error(ErrorKind::InvalidInput, "grid needs lo < hi and a positive step");
  ChamberGrid g;
  const long n = std::lround((hi - lo) / step) + 1;
  for (long i = 0; i < n; ++i)
    g.axis.push_back(lo + i * step);
  g.D.resize(n, n);
  g.sign.resize(n, n);
  g.chamber.resize(n, n);
  ThetaBi th(3);
  th(3, 0) = th(0, 3) = -1.0;
  for (long i = 0; i < n; ++i) {
    for (long j = 0; j < n; ++j) {
      th(1, 2) = g.axis[i];
      th(2, 1) = g.axis[j];
      const Poly<double> p(th.top_poly());
      g.D(i, j) = discriminant(p);
      try {
        g.chamber(i, j) = chamber_letter(classify_chamber(p));
        g.sign(i, j) = sgn(g.D(i, j));
      } catch (const Error &e) {
        if (e.kind() != ErrorKind::OnDiscriminant)
          throw;
        g.chamber(i, j) = '0';
        g.sign(i, j) = 0;
      }
    }
  }
  Eigen::MatrixXi mark = Eigen::MatrixXi::Zero(n, n);
  for (long i = 0; i < n; ++i)
    for (long j = 0; j < n; ++j) {
      if (g.sign(i, j) == 0)
        mark(i, j) = 1;
      if (i + 1 < n && g.sign(i, j) * g.sign(i + 1, j) < 0)
        mark(i, j) = mark(i + 1, j) = 1;
      if (j + 1 < n && g.sign(i, j) * g.sign(i, j + 1) < 0)
        mark(i, j) = mark(i, j + 1) = 1;
    }
  Eigen::MatrixXi seen = Eigen::MatrixXi::Zero(n, n);
  for (long i = 0; i < n; ++i)
    for (long j = 0; j < n; ++j) {
      if (!mark(i, j) || seen(i, j))
        continue;
      ++g.sign_change_curves;
      std::vector<std::pair<long, long>> stack{{i, j}};
      seen(i, j) = 1;
      while (!stack.empty()) {
        const auto [a, b] = stack.back();
        stack.pop_back();
        for (long da = -1; da <= 1; ++da)
          for (long db = -1; db <= 1; ++db) {
            const long x = a + da, y = b + db;
            if (x < 0 || y < 0 || x >= n || y >= n || !mark(x, y) || seen(x, y))
              continue;
            seen(x, y) = 1;
            stack.emplace_back(x, y);
          }
      }
    }
  return g;
}

namespace {

struct Common {
  std::string mode = "halfline";
  std::string theta;
  std::string theta_file;
  int d = 0;
  double tol = 1e-10;
};

OdeOptions ode_from(const Common &c) {
  OdeOptions o;
  o.rel_tol = c.tol;
  return o;
}

int cmd_normconst(const Common &c, int order, bool verify, const std::string &start,
                  std::ostream &out) {
  json j;
  if (c.mode == "bivariate") {
    const ThetaBi th = parse_theta_bi(theta_text(c.theta, c.theta_file), c.d);
    const int d = th.degree();
    DerivTableBi tab;
    if (start.empty()) {
      tab = norm_const_bi(th, std::max(order, base_order(d)), ode_from(c));
    } else {
      // Seed a table by quadrature at the start point, then transport.
      const ThetaBi s = parse_theta_bi(start, d);
      const int top = std::max(base_order(d), 0);
      Eigen::MatrixXd base = Eigen::MatrixXd::Zero(top + 1, top + 1);
      for (int i = 0; i <= top; ++i)
        for (int k = 0; i + k <= top; ++k)
          base(i, k) = quad_A_bi(s, i, k);
      tab = extend_table(transport_bi(table_from_base(s, base, ode_from(c)), th, ode_from(c)),
                         std::max(order, base_order(d)));
    }
    j["A"] = tab.A();
    json derivs = json::array();
    for (int k = 0; k <= order; ++k)
      for (int i = k; i >= 0; --i)
        derivs.push_back({{"i", i}, {"j", k - i}, {"value", tab(i, k - i)}});
    j["derivs"] = derivs;
    j["engine_error_estimate"] = tab.last_transport_error;
    if (verify) {
      const double q = quad_A_bi(th, 0, 0);
      j["oracle"] = {{"quadrature", q}, {"rel_diff", std::abs(tab.A() - q) / q}};
    }
  } else {
    const Support sup = parse_support(c.mode);
    const ThetaUni th = parse_theta_uni(theta_text(c.theta, c.theta_file), sup);
    const Membership mem = classify_theta_uni(th);
    if (mem.region == Region::Outside)
      throw Error(ErrorKind::OutsideDomain,
                  "theta_" + std::to_string(std::max(mem.effective_order, 1)) +
                      " makes the integral diverge (last non-zero coefficient must be negative" +
                      (sup == Support::RealLine ? " at an even power)" : ")"));
    const ThetaUni eff = th.truncated(mem.effective_order);
    const HoloStateUni st = transport(
        initial_state(eff.order(), std::abs(eff.leading_coeff()), sup), eff, ode_from(c));
    const Eigen::VectorXd D = extend_derivatives(st, order);
    j["A"] = D[0];
    j["derivs"] = to_json(D);
    j["engine_error_estimate"] = st.last_transport_error;
    if (verify) {
      const double q = quad_moment_uni(th, 0);
      j["oracle"] = {{"quadrature", q}, {"rel_diff", std::abs(D[0] - q) / q}};
    }
  }
  out << j.dump(2) << "\n";
  return kExitOk;
}

std::istream &open_input(const std::string &path, std::ifstream &file) {
  if (path.empty() || path == "-")
    return std::cin;
  file.open(path);
  if (!file)
    throw Error(ErrorKind::InvalidInput, "cannot open '" + path + "'");
  return file;
}

int cmd_fit(const Common &c, const std::string &input, std::ostream &out) {
  std::ifstream file;
  std::istream &in = open_input(input, file);
  json j;
  bool converged;
  if (c.mode == "bivariate") {
    const int d = c.d > 0 ? c.d : 2;
    const auto xy = read_csv_pairs(in);
    const SuffStatsBi st = suff_stats(xy, d);
    FitOptions fo;
    fo.ode = ode_from(c);
    const FitResultBi fit = fit_mle(st, fo);
    const Eigen::VectorXd se = (fit.fisher.inverse().diagonal() / double(st.n)).cwiseSqrt();
    j["theta_hat"] = theta_bi_json(fit.theta_hat);
    j["loglik"] = fit.loglik_bar * st.n;
    j["loglik_bar"] = fit.loglik_bar;
    j["fisher"] = to_json(fit.fisher);
    j["standard_errors"] = to_json(se);
    j["grad_norm"] = fit.grad_norm;
    j["iterations"] = fit.iterations;
    j["converged"] = fit.converged;
    j["hit_boundary"] = fit.hit_boundary;
    j["message"] = fit.message;
    converged = fit.converged;
  } else {
    const Support sup = parse_support(c.mode);
    const int d = c.d > 0 ? c.d : (sup == Support::HalfLine ? 1 : 2);
    const std::vector<double> x = read_csv_column(in);
    const SuffStatsUni st = suff_stats(x, d, sup);
    FitOptions fo;
    fo.ode = ode_from(c);
    const FitResult fit = fit_mle(st, d, sup, fo);
    const Eigen::VectorXd se = (fit.fisher.inverse().diagonal() / double(st.n)).cwiseSqrt();
    j["theta_hat"] = to_json(fit.theta_hat.coeffs());
    j["loglik"] = fit.loglik_bar * st.n;
    j["loglik_bar"] = fit.loglik_bar;
    j["fisher"] = to_json(fit.fisher);
    j["standard_errors"] = to_json(se);
    j["grad_norm"] = fit.grad_norm;
    j["iterations"] = fit.iterations;
    j["converged"] = fit.converged;
    j["hit_boundary"] = fit.hit_boundary;
    j["message"] = fit.message;
    converged = fit.converged || fit.hit_boundary;
  }
  out << j.dump(2) << "\n";
  return converged ? kExitOk : kExitNotConverged;
}

int cmd_order(const Common &c, const std::string &input, double alpha, int dmax,
              std::ostream &out) {
  std::ifstream file;
  std::istream &in = open_input(input, file);
  const Support sup = parse_support(c.mode);
  const std::vector<double> x = read_csv_column(in);
  FitOptions fo;
  fo.ode = ode_from(c);
  const OrderSelection sel = select_order(x, dmax, alpha, sup, fo);
  json trail = json::array();
  for (const TestResult &t : sel.trail) {
    trail.push_back({{"tested_order", t.tested_order},
                     {"null_order", t.null_order},
                     {"statistic", t.statistic},
                     {"null", t.null == NullDist::StdNormalLowerTail ? "N(0,1) lower tail"
                                                                     : "chi2(2) upper tail"},
                     {"threshold", t.threshold},
                     {"reject", t.reject},
                     {"theta_hat_null", to_json(t.theta_hat_null.coeffs())}});
  }
  json j;
  j["order"] = sel.order;
  j["alpha"] = alpha;
  j["trail"] = trail;
  out << j.dump(2) << "\n";
  return kExitOk;
}

int cmd_simulate(const Common &c, ExperimentConfig cfg, const std::string &outdir,
                 std::ostream &out) {
  cfg.support = parse_support(c.mode);
  cfg.theta_star = parse_theta_uni(theta_text(c.theta, c.theta_file), cfg.support);
  if (cfg.statistic.empty() || cfg.statistic == "auto")
    cfg.statistic = cfg.theta_star.leading_coeff() == 0.0 ? "score" : "pvalues";
  const ExperimentResult res = run_experiment(cfg);

  if (!outdir.empty()) {
    std::filesystem::create_directories(outdir);
    std::ofstream csv(std::filesystem::path(outdir) / "replications.csv");
    csv << "rep,seed,converged";
    for (const auto &h : res.header)
      csv << "," << h;
    csv << "\n";
    for (std::size_t r = 0; r < res.rows.size(); ++r) {
      csv << r << "," << derive_seed(cfg.seed, r) << "," << (res.ok[r] ? 1 : 0);
      for (double v : res.rows[r])
        csv << "," << fmt(v);
      csv << "\n";
    }
  }
  json j;
  j["mode"] = c.mode;
  j["theta_star"] = to_json(cfg.theta_star.coeffs());
  j["n"] = cfg.n;
  j["replications"] = cfg.replications;
  j["seed"] = cfg.seed;
  j["statistic"] = cfg.statistic;
  j["failed"] = res.failed;
  json cols = json::array();
  for (const StatColumn &col : res.columns) {
    json k;
    k["name"] = col.name;
    k["reference"] = col.reference;
    k["count"] = col.values.size();
    k["mean"] = col.mean;
    k["variance"] = col.variance;
    k["mean_abs"] = col.mean_abs;
    k["ks_defined"] = col.ks_defined;
    if (col.ks_defined) {
      k["ks_statistic"] = col.ks_statistic;
      k["ks_p_value"] = col.ks_p_value;
    } else {
      k["ks_statistic"] = nullptr;
      k["ks_p_value"] = nullptr;
    }
    cols.push_back(k);
  }
  j["columns"] = cols;
  const std::string text = j.dump(2);
  if (!outdir.empty())
    std::ofstream(std::filesystem::path(outdir) / "summary.json") << text << "\n";
  out << text << "\n";
  return kExitOk;
}

int cmd_chambers(int d, const std::vector<std::string> &points, const std::vector<std::string> &tops,
                 const std::string &grid, const std::string &outdir, std::ostream &out) {
  json j;
  json pts = json::array();
  auto report = [&](const Eigen::VectorXd &top, json entry) {
    const Poly<double> p(top);
    const double D = discriminant(p);
    ThetaBi th(static_cast<int>(top.size()) - 1);
    for (int k = 0; k < top.size(); ++k)
      th(k, th.degree() - k) = top[k];
    entry["D"] = D;
    entry["detP"] = pfaffian_matrix(th).determinant();
    try {
      const ChamberLabel lab = classify_chamber(p);
      entry["positive_roots"] = lab.positive;
      entry["negative_roots"] = lab.negative;
      entry["complex_pairs"] = lab.complex_pairs;
      entry["proper"] = lab.proper;
      if (th.degree() == 3 && top[0] == -1.0 && top[3] == -1.0)
        entry["chamber"] = std::string(1, chamber_letter(lab));
    } catch (const Error &e) {
      if (e.kind() != ErrorKind::OnDiscriminant)
        throw;
      entry["chamber"] = "boundary";
    }
    pts.push_back(entry);
  };
  for (const std::string &s : points) {
    if (d != 3)
      throw Error(ErrorKind::InvalidInput, "--point takes (theta_12, theta_21) and needs --d 3");
    const std::vector<double> v = parse_list(s);
    if (v.size() != 2)
      throw Error(ErrorKind::InvalidInput, "--point expects two numbers");
    report(Eigen::Vector4d(-1.0, v[0], v[1], -1.0),
           json{{"theta_12", v[0]}, {"theta_21", v[1]}});
  }
  for (const std::string &s : tops) {
    // theta_d0, theta_{d-1,1}, ..., theta_0d
    const std::vector<double> v = parse_list(s);
    Eigen::VectorXd top(v.size());
    for (std::size_t k = 0; k < v.size(); ++k)
      top[static_cast<Eigen::Index>(v.size() - 1 - k)] = v[k];
    report(top, json{{"top", v}});
  }
  j["points"] = pts;
  if (!grid.empty()) {
    const std::vector<double> g = parse_list(grid);
    if (g.size() != 3)
      throw Error(ErrorKind::InvalidInput, "--grid expects lo,hi,step");
    const ChamberGrid cg = chamber_grid(g[0], g[1], g[2]);
    j["grid"] = {{"points", cg.axis.size() * cg.axis.size()},
                 {"sign_change_curves", cg.sign_change_curves}};
    if (!outdir.empty()) {
      std::filesystem::create_directories(outdir);
      std::ofstream csv(std::filesystem::path(outdir) / "chambers.csv");
      csv << "theta_12,theta_21,D,sign_D,chamber\n";
      for (std::size_t a = 0; a < cg.axis.size(); ++a)
        for (std::size_t b = 0; b < cg.axis.size(); ++b)
          csv << fmt(cg.axis[a]) << "," << fmt(cg.axis[b]) << "," << fmt(cg.D(a, b)) << ","
              << cg.sign(a, b) << "," << static_cast<char>(cg.chamber(a, b)) << "\n";
    }
  }
  out << j.dump(2) << "\n";
  return kExitOk;
}

int cmd_verify(const std::vector<std::string> &suites, int d, std::uint64_t seed,
               std::ostream &out) {
  VerifyOptions vo;
  vo.suites = suites;
  vo.d = d;
  vo.seed = seed;
  const std::vector<SuiteReport> reps = run_verify(vo);
  json arr = json::array();
  bool all = true;
  for (const SuiteReport &r : reps) {
    all = all && r.passed;
    arr.push_back({{"suite", r.name},
                   {"passed", r.passed},
                   {"max_residual", std::isfinite(r.max_residual) ? json(r.max_residual) : json("inf")},
                   {"threshold", r.threshold},
                   {"cases", r.cases},
                   {"skipped", r.skipped},
                   {"note", r.note}});
  }
  out << json{{"passed", all}, {"suites", arr}}.dump(2) << "\n";
  return all ? kExitOk : kExitVerifyFailed;
}

} // namespace

int run_cli(int argc, const char *const *argv, std::ostream &out, std::ostream &err) {
  CLI::App app{"Normalising constants, fits and order tests for exponential-polynomial models"};
  app.require_subcommand(1);

  Common common;
  auto add_common = [&](CLI::App *s, bool theta) {
    s->add_option("--mode", common.mode, "halfline, realline or bivariate")
        ->check(CLI::IsMember({"halfline", "realline", "bivariate"}));
    s->add_option("--d", common.d, "model order (bivariate: degree)");
    s->add_option("--tol", common.tol, "ODE relative tolerance");
    if (theta) {
      s->add_option("--theta", common.theta, "comma-separated coefficients");
      s->add_option("--theta-file", common.theta_file, "JSON file with coefficients");
    }
  };

  int order = 0;
  bool verify = false;
  std::string start;
  auto *nc = app.add_subcommand("normconst", "normalising constant and derivatives");
  add_common(nc, true);
  nc->add_option("--order", order, "highest derivative order to print");
  nc->add_flag("--verify", verify, "compare with quadrature");
  nc->add_option("--start", start, "bivariate: quadrature-seeded start point (flat list)");

  std::string input;
  auto *fit = app.add_subcommand("fit", "maximum-likelihood fit of a CSV sample");
  add_common(fit, false);
  fit->add_option("--input", input, "headerless CSV (default stdin)");

  double alpha = 0.05;
  int dmax = 4;
  auto *ord = app.add_subcommand("order", "forward order selection by score tests");
  add_common(ord, false);
  ord->add_option("--input", input, "headerless CSV (default stdin)");
  ord->add_option("--alpha", alpha, "test level");
  ord->add_option("--dmax", dmax, "largest order considered");

  ExperimentConfig cfg;
  cfg.statistic = "auto";
  std::string outdir;
  auto *sim = app.add_subcommand("simulate", "Monte Carlo replications");
  add_common(sim, true);
  sim->add_option("--n", cfg.n, "sample size");
  sim->add_option("--reps", cfg.replications, "replications");
  sim->add_option("--seed", cfg.seed, "base seed");
  sim->add_option("--stat", cfg.statistic, "pvalues, score or auto")
      ->check(CLI::IsMember({"pvalues", "score", "auto"}));
  sim->add_option("--threads", cfg.threads, "worker threads (0: all cores)");
  sim->add_option("--out", outdir, "output directory for CSV and summary");

  std::vector<std::string> points, tops;
  std::string grid;
  int chamber_d = 3;
  auto *ch = app.add_subcommand("chambers", "root signatures and discriminant signs");
  ch->add_option("--d", chamber_d, "degree");
  ch->add_option("--point", points, "theta_12,theta_21 on the plane theta_30 = theta_03 = -1");
  ch->add_option("--top", tops, "top-degree coefficients theta_d0,...,theta_0d");
  ch->add_option("--grid", grid, "lo,hi,step sweep of the (theta_12, theta_21) plane");
  ch->add_option("--out", outdir, "output directory for the grid CSV");

  std::vector<std::string> suites;
  int verify_d = 0;
  std::uint64_t verify_seed = 20141;
  auto *ver = app.add_subcommand("verify", "run the property suites");
  ver->add_option("--suite", suites, "suite name (repeatable)")
      ->check(CLI::IsMember(suite_names()));
  ver->add_option("--d", verify_d, "restrict to one order/degree");
  ver->add_option("--seed", verify_seed, "seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError &e) {
    err << e.what() << "\n";
    return kExitInput;
  }

  try {
    if (nc->parsed())
      return cmd_normconst(common, order, verify, start, out);
    if (fit->parsed())
      return cmd_fit(common, input, out);
    if (ord->parsed())
      return cmd_order(common, input, alpha, dmax, out);
    if (sim->parsed())
      return cmd_simulate(common, cfg, outdir, out);
    if (ch->parsed())
      return cmd_chambers(chamber_d, points, tops, grid, outdir, out);
    if (ver->parsed())
      return cmd_verify(suites, verify_d, verify_seed, out);
  } catch (const Error &e) {
    err << e.what() << "\n";
    return input_error(e.kind()) ? kExitInput : kExitNotConverged;
  } catch (const std::exception &e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitInput;
}

} // namespace hgd
