#pragma once

#include <optional>
#include <utility>

#include <Eigen/Dense>

#include "hgd/domain.hpp"
#include "hgd/holo_uni.hpp"
#include "hgd/ode.hpp"

namespace hgd {

/// Mixed derivatives T(i, j) = d10^i d01^j A(theta) for i + j <= max_order,
/// where d10, d01 differentiate by theta_10, theta_01. Entries up to total
/// order 2d - 4 form the Pfaffian state; the rest follow from the two
/// integration-by-parts identities. The axis integrals A_x, A_y travel along
/// as univariate states because they feed the right-hand sides.
struct DerivTableBi {
  ThetaBi theta;
  Eigen::MatrixXd T;
  int max_order = 0;
  HoloStateUni axis_x;
  HoloStateUni axis_y;
  double last_transport_error = 0.0;

  double operator()(int i, int j) const { return T(i, j); }
  double A() const { return T(0, 0); }
};

/// P X = Q for the order-(2d - 3) entries X_c = T(2d - 3 - c, c).
struct PfaffianSystemBi {
  Eigen::MatrixXd P;
  Eigen::VectorXd Q;
  double detP = 0.0;
};

inline int base_order(int d) { return 2 * d - 4; }
int base_size(int d);

/// A_x, A_y and their derivatives d10^s A_x, d01^s A_y for s = 0..max_order.
/// (d01 A_x = d10 A_y = 0.)
std::pair<Eigen::VectorXd, Eigen::VectorXd> boundary_consts(const ThetaBi &theta, int max_order,
                                                            const OdeOptions &opts = {});

/// The (2d-2) x (2d-2) two-band matrix of top-degree coefficients.
Eigen::MatrixXd pfaffian_matrix(const ThetaBi &theta);

/// True when |det P| is below 1e-12 of its natural scale |P|_max^{2d-2}.
bool is_singular(const Eigen::MatrixXd &P, double det);

PfaffianSystemBi assemble_system(const DerivTableBi &table);

/// Fills every entry of total order <= max_order. Order 2d - 3 comes from
/// P X = Q; higher orders from the overdetermined identities in least squares.
DerivTableBi extend_table(const DerivTableBi &table, int max_order);

/// Product point theta_d0 = -c1, theta_0d = -c2 with Gamma-product entries.
DerivTableBi initial_state_bi(int d, double c1, double c2);

/// Table at an arbitrary theta seeded with externally computed base entries
/// (e.g. by quadrature) for chambers without a product point.
DerivTableBi table_from_base(const ThetaBi &theta, const Eigen::MatrixXd &base,
                             const OdeOptions &opts = {});

/// Straight-segment transport; throws PathCrossesSingularity when D changes
/// sign or det P degenerates along the way.
DerivTableBi transport_bi(const DerivTableBi &table, const ThetaBi &target,
                          const OdeOptions &opts = {});

/// Table at theta through max_order, transported from the product point
/// with c1 = |theta_d0|, c2 = |theta_0d|.
DerivTableBi norm_const_bi(const ThetaBi &theta, int max_order, const OdeOptions &opts = {});

/// Largest relative residual of both identity families over all (s, t)
/// whose equations only involve filled entries.
double identity_residual(const DerivTableBi &table);

class BiEngine {
public:
  explicit BiEngine(OdeOptions opts = {}) : opts_(opts) {}

  /// Table at theta extended to max_order, moved from the previous point.
  DerivTableBi derivs(const ThetaBi &theta, int max_order);
  void reset() { table_.reset(); }
  void seed(DerivTableBi table) { table_ = std::move(table); }

private:
  OdeOptions opts_;
  std::optional<DerivTableBi> table_;
};

} // namespace hgd
