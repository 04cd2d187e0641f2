#pragma once

#include <array>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace hgd {

enum class Support { HalfLine, RealLine };

/// Natural parameters (theta_1, ..., theta_d) of exp(theta_1 x + ... + theta_d x^d).
/// On the real line the order must be even.
class ThetaUni {
public:
  ThetaUni() = default;
  explicit ThetaUni(Eigen::VectorXd coeffs, Support support = Support::HalfLine);
  ThetaUni(std::initializer_list<double> coeffs, Support support = Support::HalfLine);

  /// (0, ..., 0, -c): the point with closed-form derivatives.
  static ThetaUni leading(int order, double c, Support support = Support::HalfLine);

  int order() const { return static_cast<int>(coeffs_.size()); }
  Support support() const { return support_; }
  const Eigen::VectorXd &coeffs() const { return coeffs_; }

  /// 1-based access, theta_k multiplies x^k.
  double operator[](int k) const { return coeffs_[k - 1]; }
  double leading_coeff() const { return coeffs_[order() - 1]; }

  /// Same density written as an order-`order` parameter (trailing zeros appended).
  ThetaUni embedded(int order) const;
  /// First `order` coefficients.
  ThetaUni truncated(int order) const;

  friend bool operator==(const ThetaUni &a, const ThetaUni &b) {
    return a.support_ == b.support_ && a.coeffs_ == b.coeffs_;
  }

private:
  Eigen::VectorXd coeffs_;
  Support support_ = Support::HalfLine;
};

/// Coefficients theta_ij of x^i y^j for 1 <= i + j <= d; theta_00 is fixed at 0.
class ThetaBi {
public:
  ThetaBi() = default;
  explicit ThetaBi(int d);
  /// Flat list ordered by total degree, then by descending power of x:
  /// theta_10, theta_01, theta_20, theta_11, theta_02, ...
  ThetaBi(int d, std::span<const double> flat);
  ThetaBi(int d, std::initializer_list<double> flat);

  /// theta_{d0} = -c1, theta_{0d} = -c2, everything else 0.
  static ThetaBi product_point(int d, double c1, double c2);

  int degree() const { return d_; }
  double operator()(int i, int j) const { return c_(i, j); }
  double &operator()(int i, int j) { return c_(i, j); }

  static int size_for(int d) { return d * (d + 3) / 2; }
  int size() const { return size_for(d_); }
  /// Position of (i, j) in the flat ordering.
  static int flat_index(int i, int j);
  static std::pair<int, int> flat_pair(int index);

  Eigen::VectorXd flat() const;

  /// Coefficients of p(x; theta) = sum_k theta_{k, d-k} x^k, ascending in x.
  Eigen::VectorXd top_poly() const;

  ThetaBi transposed() const;
  ThetaUni axis_x() const;
  ThetaUni axis_y() const;

private:
  int d_ = 0;
  Eigen::MatrixXd c_;
};

enum class Region { Interior, Boundary, Outside };

struct Membership {
  Region region = Region::Outside;
  /// Index of the last non-zero coefficient (0 when all are zero).
  int effective_order = 0;
};

/// A(theta) is finite iff the last non-zero coefficient is negative (and, on
/// the real line, sits at an even power). Exact comparison with 0.
Membership classify_theta_uni(const ThetaUni &theta);

/// theta_{d0} < 0, theta_{0d} < 0 and the top-degree form is negative on the
/// closed positive quadrant.
bool in_proper_bivariate_space(const ThetaBi &theta);

struct SuffStatsUni {
  long n = 0;
  Eigen::VectorXd moments; // moments[m - 1] = mean of x^m

  int max_order() const { return static_cast<int>(moments.size()); }
  double moment(int m) const { return m == 0 ? 1.0 : moments[m - 1]; }
};

struct SuffStatsBi {
  long n = 0;
  int d = 0;
  Eigen::MatrixXd means; // means(s, t) = mean of x^s y^t, s + t <= d

  double moment(int s, int t) const { return means(s, t); }
};

SuffStatsUni suff_stats(std::span<const double> sample, int order, Support support);
SuffStatsBi suff_stats(std::span<const std::array<double, 2>> sample, int d);

} // namespace hgd
