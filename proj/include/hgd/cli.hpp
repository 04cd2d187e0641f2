#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hgd/domain.hpp"

namespace hgd {

enum ExitCode { kExitOk = 0, kExitVerifyFailed = 1, kExitInput = 2, kExitNotConverged = 3 };

/// Entry point of the `hgd` executable.
int run_cli(int argc, const char *const *argv, std::ostream &out, std::ostream &err);

std::vector<double> read_csv_column(std::istream &in);
std::vector<std::array<double, 2>> read_csv_pairs(std::istream &in);

/// Comma-separated list, or JSON {"d": .., "coeffs": [..]}.
ThetaUni parse_theta_uni(const std::string &text, Support support);
/// Comma list in flat order, or JSON {"d": .., "coeffs": {"10": .., "01": .., ...}}.
ThetaBi parse_theta_bi(const std::string &text, int d_hint);

struct ExperimentConfig {
  Support support = Support::HalfLine;
  ThetaUni theta_star;
  long n = 1000;
  long replications = 200;
  std::uint64_t seed = 1;
  /// "pvalues": p_i for every coordinate; "score": the order test of theta_star
  /// against its reduced model (theta_star must end in zeros).
  std::string statistic = "pvalues";
  unsigned threads = 0; // 0: hardware concurrency
};

struct StatColumn {
  std::string name;
  std::vector<double> values; // converged replications only
  double mean = 0.0, variance = 0.0, mean_abs = 0.0;
  bool ks_defined = false;
  double ks_statistic = 0.0, ks_p_value = 1.0;
  std::string reference; // "N(0,1)" or "chi2(2)"
};

struct ExperimentResult {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows; // one per replication, NaN on failure
  std::vector<bool> ok;
  long failed = 0;
  std::vector<StatColumn> columns;
};

ExperimentResult run_experiment(const ExperimentConfig &cfg);

/// Chamber data on the plane theta_30 = theta_03 = -1 over (theta_12, theta_21).
struct ChamberGrid {
  std::vector<double> axis;
  Eigen::MatrixXd D;       // D(i, j) at (axis[i], axis[j])
  Eigen::MatrixXi sign;    // sign of D
  Eigen::MatrixXi chamber; // 'A', 'B', 'C', '?' or '0' on the discriminant
  /// Connected components (8-neighbour) of grid nodes touching a sign change.
  int sign_change_curves = 0;
};

ChamberGrid chamber_grid(double lo, double hi, double step);

} // namespace hgd
