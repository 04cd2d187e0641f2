#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "hgd/errors.hpp"

namespace hgd {

template <typename Scalar> using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Real univariate polynomial, coefficients ascending (a_0 ... a_m), a_m != 0.
template <typename Scalar = double> class Poly {
public:
  explicit Poly(VectorX<Scalar> coeffs) : a_(std::move(coeffs)) {
    Eigen::Index m = a_.size();
    while (m > 0 && a_[m - 1] == Scalar(0))
      --m;
    if (m == 0)
      throw Error(ErrorKind::ZeroPolynomial, "polynomial has no non-zero coefficient");
    a_.conservativeResize(m);
  }
  Poly(std::initializer_list<Scalar> coeffs)
      : Poly(Eigen::Map<const VectorX<Scalar>>(coeffs.begin(),
                                               static_cast<Eigen::Index>(coeffs.size()))) {}

  int degree() const { return static_cast<int>(a_.size()) - 1; }
  Scalar lead() const { return a_[a_.size() - 1]; }
  Scalar operator[](int k) const { return a_[k]; }
  const VectorX<Scalar> &coeffs() const { return a_; }

  Scalar operator()(Scalar x) const {
    Scalar acc(0);
    for (Eigen::Index k = a_.size() - 1; k >= 0; --k)
      acc = acc * x + a_[k];
    return acc;
  }

  Poly derivative() const {
    if (degree() == 0)
      throw Error(ErrorKind::ZeroPolynomial, "derivative of a constant");
    VectorX<Scalar> b(a_.size() - 1);
    for (Eigen::Index k = 1; k < a_.size(); ++k)
      b[k - 1] = Scalar(k) * a_[k];
    return Poly(std::move(b));
  }

  Scalar max_abs_coeff() const { return a_.cwiseAbs().maxCoeff(); }

private:
  VectorX<Scalar> a_;
};

/// Sylvester matrix with deg g rows of f followed by deg f rows of g, each row
/// holding the coefficients in descending order shifted one column right.
template <typename Scalar>
MatrixX<Scalar> sylvester_matrix(const Poly<Scalar> &f, const Poly<Scalar> &g) {
  const int m = f.degree();
  const int n = g.degree();
  if (m < 1 || n < 1)
    throw Error(ErrorKind::InvalidInput, "resultant needs polynomials of degree >= 1");
  MatrixX<Scalar> S = MatrixX<Scalar>::Zero(m + n, m + n);
  for (int r = 0; r < n; ++r)
    for (int k = 0; k <= m; ++k)
      S(r, r + k) = f[m - k];
  for (int r = 0; r < m; ++r)
    for (int k = 0; k <= n; ++k)
      S(n + r, r + k) = g[n - k];
  return S;
}

template <typename Scalar>
Scalar sylvester_resultant(const Poly<Scalar> &f, const Poly<Scalar> &g) {
  return sylvester_matrix(f, g).determinant();
}

/// D(p) = R(p, p') / lead(p). With this sign convention D = 4ac - b^2 for
/// ax^2 + bx + c; the textbook discriminant is (-1)^{m(m-1)/2} D.
template <typename Scalar> Scalar discriminant(const Poly<Scalar> &p) {
  if (p.degree() < 2)
    throw Error(ErrorKind::InvalidInput, "discriminant needs degree >= 2");
  return sylvester_resultant(p, p.derivative()) / p.lead();
}

/// Discriminant of the top-degree form given ascending coefficients; a zero
/// leading coefficient is an error rather than a silent degree drop.
template <typename Scalar> Scalar discriminant(const VectorX<Scalar> &ascending) {
  if (ascending.size() < 3)
    throw Error(ErrorKind::InvalidInput, "discriminant needs degree >= 2");
  if (ascending[ascending.size() - 1] == Scalar(0))
    throw Error(ErrorKind::LeadingCoefficientZero, "leading coefficient is zero");
  return discriminant(Poly<Scalar>(ascending));
}

template <typename Scalar> Scalar textbook_discriminant(const Poly<Scalar> &p) {
  const int m = p.degree();
  const Scalar sign = ((m * (m - 1) / 2) % 2 == 0) ? Scalar(1) : Scalar(-1);
  return sign * discriminant(p);
}

/// Scale of the discriminant: it is homogeneous of degree 2m - 2 in the coefficients.
template <typename Scalar> Scalar discriminant_scale(const Poly<Scalar> &p) {
  using std::pow;
  return pow(p.max_abs_coeff(), Scalar(2 * p.degree() - 2));
}

template <typename Scalar = double> struct Interval {
  Scalar lo = -std::numeric_limits<Scalar>::infinity();
  Scalar hi = std::numeric_limits<Scalar>::infinity();
};

namespace detail {

template <typename Scalar>
VectorX<Scalar> poly_rem(const VectorX<Scalar> &num, const VectorX<Scalar> &den) {
  VectorX<Scalar> r = num;
  const Eigen::Index dn = den.size() - 1;
  for (Eigen::Index k = r.size() - 1; k >= dn; --k) {
    const Scalar q = r[k] / den[dn];
    for (Eigen::Index j = 0; j <= dn; ++j)
      r[k - dn + j] -= q * den[j];
    r[k] = Scalar(0);
  }
  return r.head(std::max<Eigen::Index>(dn, 1));
}

template <typename Scalar> Scalar sign_at(const VectorX<Scalar> &c, Scalar x) {
  using std::isinf;
  const Eigen::Index deg = c.size() - 1;
  if (isinf(x)) {
    const bool flip = x < 0 && deg % 2 == 1;
    return flip ? -c[deg] : c[deg];
  }
  Scalar acc(0);
  for (Eigen::Index k = deg; k >= 0; --k)
    acc = acc * x + c[k];
  return acc;
}

template <typename Scalar>
int sign_variations(const std::vector<VectorX<Scalar>> &seq, Scalar x) {
  int changes = 0;
  int last = 0;
  for (const auto &s : seq) {
    const Scalar v = sign_at(s, x);
    const int sg = v > 0 ? 1 : (v < 0 ? -1 : 0);
    if (sg == 0)
      continue;
    if (last != 0 && sg != last)
      ++changes;
    last = sg;
  }
  return changes;
}

} // namespace detail

/// Sturm chain p, p', -rem(...), ... with every member rescaled to unit max
/// coefficient. Remainder coefficients below `tol` (relative) are treated as
/// zero. If the chain terminates before reaching a constant, p is not
/// squarefree: throw NonSquarefree unless `allow_multiple`, in which case
/// the chain ending at gcd(p, p') still counts distinct roots.
template <typename Scalar>
std::vector<VectorX<Scalar>> sturm_chain(const Poly<Scalar> &p, bool allow_multiple = false,
                                         Scalar tol = Scalar(1e-12)) {
  using std::abs;
  auto normalized = [](VectorX<Scalar> v) {
    const Scalar s = v.cwiseAbs().maxCoeff();
    return VectorX<Scalar>(v / s);
  };
  std::vector<VectorX<Scalar>> seq;
  seq.push_back(normalized(p.coeffs()));
  if (p.degree() == 0)
    return seq;
  seq.push_back(normalized(p.derivative().coeffs()));
  while (seq.back().size() > 1) {
    VectorX<Scalar> r = -detail::poly_rem(seq[seq.size() - 2], seq.back());
    Eigen::Index m = r.size();
    while (m > 0 && abs(r[m - 1]) <= tol)
      --m;
    if (m == 0) {
      if (allow_multiple)
        break;
      throw Error(ErrorKind::NonSquarefree, "Sturm chain degenerates: repeated root");
    }
    seq.push_back(normalized(VectorX<Scalar>(r.head(m))));
  }
  return seq;
}

/// Number of distinct real roots in (lo, hi]; either end may be infinite.
template <typename Scalar>
int count_real_roots(const Poly<Scalar> &p, Interval<Scalar> iv = {},
                     bool allow_multiple = false) {
  const auto seq = sturm_chain(p, allow_multiple);
  return detail::sign_variations(seq, iv.lo) - detail::sign_variations(seq, iv.hi);
}

/// Root signature of the top-degree form p(x; theta).
struct ChamberLabel {
  int positive = 0;
  int negative = 0;
  int complex_pairs = 0;
  bool proper = false;

  friend bool operator==(const ChamberLabel &, const ChamberLabel &) = default;
};

/// Requires lead < 0, constant term < 0 and the point off the discriminant
/// hypersurface (|D| > 1e-12 times its natural scale).
template <typename Scalar> ChamberLabel classify_chamber(const Poly<Scalar> &p) {
  using std::abs;
  if (p.degree() < 2 || p.lead() >= 0 || p[0] >= 0)
    throw Error(ErrorKind::InvalidInput,
                "chamber classification needs theta_d0 < 0 and theta_0d < 0");
  const Scalar D = discriminant(p);
  if (abs(D) <= Scalar(1e-12) * discriminant_scale(p))
    throw Error(ErrorKind::OnDiscriminant, "point lies on D = 0");
  const Scalar inf = std::numeric_limits<Scalar>::infinity();
  ChamberLabel out;
  out.positive = count_real_roots(p, Interval<Scalar>{Scalar(0), inf});
  out.negative = count_real_roots(p, Interval<Scalar>{-inf, Scalar(0)});
  out.complex_pairs = (p.degree() - out.positive - out.negative) / 2;
  out.proper = out.positive == 0;
  return out;
}

} // namespace hgd
