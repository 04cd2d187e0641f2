#include "hgd/holo_bi.hpp"

#include <cmath>
#include <limits>
#include <span>
#include <string>

#include "hgd/errors.hpp"

namespace hgd {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_axes(const ThetaBi &theta) {
  const int d = theta.degree();
  if (d < 2)
    throw Error(ErrorKind::InvalidOrder, "bivariate engine needs degree >= 2");
  if (!(theta(d, 0) < 0.0))
    throw Error(ErrorKind::AxisOutsideDomain, "theta_" + std::to_string(d) + "0 must be negative");
  if (!(theta(0, d) < 0.0))
    throw Error(ErrorKind::AxisOutsideDomain, "theta_0" + std::to_string(d) + " must be negative");
}

double univariate_moment(int d, double c, int m) {
  const double a = (1.0 + m) / d;
  return std::pow(c, -a) * std::tgamma(a) / d;
}

struct OrderSystem {
  Eigen::MatrixXd C;
  Eigen::VectorXd r;
  Eigen::VectorXd lower_scale; // sum of |known terms| per row, for residual checks
};

// The identities d10^s d01^t applied to both integration-by-parts equations,
// s + t = q, with the order-(q + d - 1) entries as unknowns X_c = T(k - c, c).
OrderSystem build_order_system(const ThetaBi &th, const Eigen::MatrixXd &T,
                               const Eigen::VectorXd &ax, const Eigen::VectorXd &ay, int q) {
  const int d = th.degree();
  const int k = q + d - 1;
  OrderSystem sys;
  sys.C = Eigen::MatrixXd::Zero(2 * (q + 1), k + 1);
  sys.r = Eigen::VectorXd::Zero(2 * (q + 1));
  sys.lower_scale = Eigen::VectorXd::Zero(2 * (q + 1));
  for (int row = 0; row <= q; ++row) {
    const int s = q - row;
    const int t = row;

    // x-family: s T(s-1,t) + sum_{i>=1} i theta_ij T(s+i-1, t+j) = -[s==0] d01^t A_y
    double known = s > 0 ? s * T(s - 1, t) : 0.0;
    double scale = std::abs(known);
    for (int i = 1; i <= d; ++i) {
      for (int j = 0; i + j <= d; ++j) {
        const double coef = i * th(i, j);
        if (i + j == d) {
          sys.C(row, t + j) += coef;
        } else if (coef != 0.0) {
          const double v = coef * T(s + i - 1, t + j);
          known += v;
          scale += std::abs(v);
        }
      }
    }
    const double bx = s == 0 ? ay[t] : 0.0;
    sys.r[row] = -bx - known;
    sys.lower_scale[row] = scale + std::abs(bx);

    // y-family: t T(s,t-1) + sum_{j>=1} j theta_ij T(s+i, t+j-1) = -[t==0] d10^s A_x
    known = t > 0 ? t * T(s, t - 1) : 0.0;
    scale = std::abs(known);
    for (int j = 1; j <= d; ++j) {
      for (int i = 0; i + j <= d; ++i) {
        const double coef = j * th(i, j);
        if (i + j == d) {
          sys.C(q + 1 + row, t + j - 1) += coef;
        } else if (coef != 0.0) {
          const double v = coef * T(s + i, t + j - 1);
          known += v;
          scale += std::abs(v);
        }
      }
    }
    const double by = t == 0 ? ax[s] : 0.0;
    sys.r[q + 1 + row] = -by - known;
    sys.lower_scale[q + 1 + row] = scale + std::abs(by);
  }
  return sys;
}

Eigen::VectorXd axis_derivs(const HoloStateUni &axis, int m) {
  return extend_derivatives(axis, std::max(m, 0));
}

void pack_base(const DerivTableBi &tab, Eigen::Ref<Eigen::VectorXd> out) {
  const int top = base_order(tab.theta.degree());
  int n = 0;
  for (int k = 0; k <= top; ++k)
    for (int i = k; i >= 0; --i)
      out[n++] = tab.T(i, k - i);
}

} // namespace

int base_size(int d) {
  const int top = base_order(d);
  return top < 0 ? 0 : (top + 1) * (top + 2) / 2;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> boundary_consts(const ThetaBi &theta, int max_order,
                                                            const OdeOptions &opts) {
  require_axes(theta);
  return {norm_const_and_derivs(theta.axis_x(), max_order, opts),
          norm_const_and_derivs(theta.axis_y(), max_order, opts)};
}

Eigen::MatrixXd pfaffian_matrix(const ThetaBi &theta) {
  const int d = theta.degree();
  const int n = 2 * d - 2;
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(n, n);
  for (int r = 0; r < d - 1; ++r) {
    for (int i = 1; i <= d; ++i)
      P(r, r + (d - i)) = i * theta(i, d - i);
    for (int j = 1; j <= d; ++j)
      P(d - 1 + r, r + j - 1) = j * theta(d - j, j);
  }
  return P;
}

bool is_singular(const Eigen::MatrixXd &P, double det) {
  const double scale = std::pow(P.cwiseAbs().maxCoeff(), static_cast<double>(P.rows()));
  return !(std::abs(det) > 1e-12 * scale);
}

PfaffianSystemBi assemble_system(const DerivTableBi &table) {
  const int d = table.theta.degree();
  if (table.max_order < base_order(d))
    throw Error(ErrorKind::InvalidInput, "table is not filled through order 2d-4");
  const int q = d - 2;
  const OrderSystem sys = build_order_system(table.theta, table.T, axis_derivs(table.axis_x, q),
                                             axis_derivs(table.axis_y, q), q);
  PfaffianSystemBi out{sys.C, sys.r, sys.C.determinant()};
  if (is_singular(out.P, out.detP))
    throw Error(ErrorKind::SingularSystem, "det P vanishes: theta is on the discriminant");
  return out;
}

namespace {

DerivTableBi extend_impl(const DerivTableBi &table, int max_order, double residual_tol) {
  const int d = table.theta.degree();
  if (max_order <= table.max_order) {
    DerivTableBi out = table;
    return out;
  }
  DerivTableBi out = table;
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(max_order + 1, max_order + 1);
  const int keep = table.max_order + 1;
  T.topLeftCorner(keep, keep) = table.T.topLeftCorner(keep, keep);
  const int qmax = max_order - d + 1;
  const Eigen::VectorXd ax = axis_derivs(table.axis_x, qmax);
  const Eigen::VectorXd ay = axis_derivs(table.axis_y, qmax);
  for (int k = table.max_order + 1; k <= max_order; ++k) {
    const int q = k - d + 1;
    const OrderSystem sys = build_order_system(table.theta, T, ax, ay, q);
    Eigen::VectorXd X;
    if (q == d - 2) {
      const auto lu = sys.C.partialPivLu();
      if (is_singular(sys.C, lu.determinant()))
        throw Error(ErrorKind::SingularSystem, "det P vanishes: theta is on the discriminant");
      X = lu.solve(sys.r);
    } else {
      const auto qr = sys.C.colPivHouseholderQr();
      if (qr.rank() < k + 1)
        throw Error(ErrorKind::SingularSystem,
                    "rank-deficient identities at order " + std::to_string(k));
      X = qr.solve(sys.r);
      const Eigen::VectorXd res = sys.C * X - sys.r;
      const Eigen::VectorXd scale = (sys.C.cwiseAbs() * X.cwiseAbs()) + sys.lower_scale;
      const double rel = (res.cwiseAbs().array() / scale.array().max(1e-300)).maxCoeff();
      if (rel > residual_tol)
        throw Error(ErrorKind::InconsistentExtension,
                    "least-squares residual " + std::to_string(rel) + " at order " +
                        std::to_string(k));
    }
    for (int c = 0; c <= k; ++c)
      T(k - c, c) = X[c];
  }
  out.T = std::move(T);
  out.max_order = max_order;
  return out;
}

} // namespace

DerivTableBi extend_table(const DerivTableBi &table, int max_order) {
  return extend_impl(table, max_order, 1e-6);
}

DerivTableBi initial_state_bi(int d, double c1, double c2) {
  if (!(c1 > 0.0) || !(c2 > 0.0))
    throw Error(ErrorKind::NonPositiveScale, "initial scales must be positive");
  if (d < 2)
    throw Error(ErrorKind::InvalidOrder, "bivariate engine needs degree >= 2");
  DerivTableBi tab;
  tab.theta = ThetaBi::product_point(d, c1, c2);
  tab.max_order = base_order(d);
  tab.T = Eigen::MatrixXd::Zero(tab.max_order + 1, tab.max_order + 1);
  for (int i = 0; i <= tab.max_order; ++i)
    for (int j = 0; i + j <= tab.max_order; ++j)
      tab.T(i, j) = univariate_moment(d, c1, i) * univariate_moment(d, c2, j);
  tab.axis_x = initial_state(d, c1);
  tab.axis_y = initial_state(d, c2);
  return tab;
}

DerivTableBi table_from_base(const ThetaBi &theta, const Eigen::MatrixXd &base,
                             const OdeOptions &opts) {
  require_axes(theta);
  const int d = theta.degree();
  const int top = base_order(d);
  if (base.rows() < top + 1 || base.cols() < top + 1)
    throw Error(ErrorKind::InvalidInput, "seed table must cover total order 2d-4");
  DerivTableBi tab;
  tab.theta = theta;
  tab.max_order = top;
  tab.T = Eigen::MatrixXd::Zero(top + 1, top + 1);
  for (int i = 0; i <= top; ++i)
    for (int j = 0; i + j <= top; ++j)
      tab.T(i, j) = base(i, j);
  for (const auto &[axis, target] : {std::pair{&tab.axis_x, theta.axis_x()},
                                     std::pair{&tab.axis_y, theta.axis_y()}}) {
    const HoloStateUni start = initial_state(d, std::abs(target.leading_coeff()));
    *axis = transport(start, target, opts);
  }
  return tab;
}

DerivTableBi transport_bi(const DerivTableBi &table, const ThetaBi &target, const OdeOptions &opts) {
  const int d = table.theta.degree();
  if (target.degree() != d)
    throw Error(ErrorKind::InvalidInput, "transport endpoints differ in degree");
  require_axes(table.theta);
  require_axes(target);
  const Eigen::VectorXd origin = table.theta.flat();
  const Eigen::VectorXd h = target.flat() - origin;
  const double length = h.norm();
  if (length == 0.0)
    return table;

  const double det0 = pfaffian_matrix(table.theta).determinant();
  if (is_singular(pfaffian_matrix(table.theta), det0))
    throw Error(ErrorKind::PathCrossesSingularity, "source lies on the discriminant");
  auto check_point = [&](const ThetaBi &th) {
    const Eigen::MatrixXd P = pfaffian_matrix(th);
    const double det = P.determinant();
    if (is_singular(P, det) || (det > 0.0) != (det0 > 0.0))
      throw Error(ErrorKind::PathCrossesSingularity,
                  "segment leaves the chamber (det P changes sign or vanishes)");
  };
  constexpr int kScan = 256;
  for (int i = 1; i <= kScan; ++i)
    {
    const Eigen::VectorXd p = origin + (double(i) / kScan) * h;
    check_point(ThetaBi(d, std::span<const double>(p.data(), p.size())));
  }

  const int nb = base_size(d);
  const int L = state_length(d);
  Eigen::VectorXd hx(d), hy(d);
  for (int k = 1; k <= d; ++k) {
    hx[k - 1] = h[ThetaBi::flat_index(k, 0)];
    hy[k - 1] = h[ThetaBi::flat_index(0, k)];
  }
  const int top = base_order(d) + d;

  auto rhs = [&](double s, const Eigen::VectorXd &y) {
    DerivTableBi tab;
    const Eigen::VectorXd p = origin + s * h;
    tab.theta = ThetaBi(d, std::span<const double>(p.data(), p.size()));
    check_point(tab.theta);
    tab.max_order = base_order(d);
    tab.T = Eigen::MatrixXd::Zero(tab.max_order + 1, tab.max_order + 1);
    int n = 0;
    for (int k = 0; k <= tab.max_order; ++k)
      for (int i = k; i >= 0; --i)
        tab.T(i, k - i) = y[n++];
    tab.axis_x = HoloStateUni{tab.theta.axis_x(), y.segment(nb, L), 0.0};
    tab.axis_y = HoloStateUni{tab.theta.axis_y(), y.segment(nb + L, L), 0.0};
    // Intermediate stages are slightly off the solution manifold, so the
    // consistency check is left to the endpoints.
    const DerivTableBi full = extend_impl(tab, top, kInf);
    Eigen::VectorXd dy(y.size());
    n = 0;
    for (int k = 0; k <= base_order(d); ++k) {
      for (int a = k; a >= 0; --a) {
        const int b = k - a;
        double acc = 0.0;
        for (int idx = 0; idx < h.size(); ++idx) {
          if (h[idx] == 0.0)
            continue;
          const auto [i, j] = ThetaBi::flat_pair(idx);
          acc += h[idx] * full.T(a + i, b + j);
        }
        dy[n++] = acc;
      }
    }
    dy.segment(nb, L) = pfaffian_rhs(tab.axis_x.theta, tab.axis_x.F, hx);
    dy.segment(nb + L, L) = pfaffian_rhs(tab.axis_y.theta, tab.axis_y.F, hy);
    return dy;
  };

  Eigen::VectorXd y0(nb + 2 * L);
  pack_base(table, y0.head(nb));
  y0.segment(nb, L) = table.axis_x.F;
  y0.segment(nb + L, L) = table.axis_y.F;
  OdeResult res = integrate_unit(rhs, std::move(y0), length, opts);

  DerivTableBi out;
  out.theta = target;
  out.max_order = base_order(d);
  out.T = Eigen::MatrixXd::Zero(out.max_order + 1, out.max_order + 1);
  int n = 0;
  for (int k = 0; k <= out.max_order; ++k)
    for (int i = k; i >= 0; --i)
      out.T(i, k - i) = res.y[n++];
  out.axis_x = HoloStateUni{target.axis_x(), res.y.segment(nb, L), res.error_estimate};
  out.axis_y = HoloStateUni{target.axis_y(), res.y.segment(nb + L, L), res.error_estimate};
  out.last_transport_error = res.error_estimate;
  return out;
}

DerivTableBi norm_const_bi(const ThetaBi &theta, int max_order, const OdeOptions &opts) {
  require_axes(theta);
  const int d = theta.degree();
  const DerivTableBi start = initial_state_bi(d, std::abs(theta(d, 0)), std::abs(theta(0, d)));
  return extend_table(transport_bi(start, theta, opts), max_order);
}

double identity_residual(const DerivTableBi &table) {
  const int d = table.theta.degree();
  const int qmax = table.max_order - d + 1;
  if (qmax < 0)
    return 0.0;
  const Eigen::VectorXd ax = axis_derivs(table.axis_x, qmax);
  const Eigen::VectorXd ay = axis_derivs(table.axis_y, qmax);
  double worst = 0.0;
  for (int q = 0; q <= qmax; ++q) {
    const OrderSystem sys = build_order_system(table.theta, table.T, ax, ay, q);
    const int k = q + d - 1;
    Eigen::VectorXd X(k + 1);
    for (int c = 0; c <= k; ++c)
      X[c] = table.T(k - c, c);
    const Eigen::VectorXd res = sys.C * X - sys.r;
    const Eigen::VectorXd scale = (sys.C.cwiseAbs() * X.cwiseAbs()) + sys.lower_scale;
    worst = std::max(worst, (res.cwiseAbs().array() / scale.array().max(1e-300)).maxCoeff());
  }
  return worst;
}

DerivTableBi BiEngine::derivs(const ThetaBi &theta, int max_order) {
  require_axes(theta);
  const int d = theta.degree();
  if (!table_ || table_->theta.degree() != d)
    table_ = initial_state_bi(d, std::abs(theta(d, 0)), std::abs(theta(0, d)));
  table_ = transport_bi(*table_, theta, opts_);
  return extend_table(*table_, max_order);
}

} // namespace hgd
