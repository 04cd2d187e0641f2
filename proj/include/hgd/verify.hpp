#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hgd/domain.hpp"
#include "hgd/oracle.hpp"

namespace hgd {

/// Interior point: leading coefficient in [-2, -0.5], the rest in [-2, 2].
ThetaUni random_theta_uni(Rng &rng, int order, Support support);

/// Axis coefficients in [-2, -0.5], mixed top-degree terms in [-mix, mix],
/// lower-degree terms in [-1, 1].
ThetaBi random_theta_bi(Rng &rng, int d, double mix = 1.0);

struct SuiteReport {
  std::string name;
  bool passed = false;
  double max_residual = 0.0;
  double threshold = 0.0;
  long cases = 0;
  long skipped = 0;
  std::string note;
};

struct VerifyOptions {
  std::vector<std::string> suites; // empty: all
  int d = 0;                       // 0: the suite's default range
  std::uint64_t seed = 20141;
};

const std::vector<std::string> &suite_names();
SuiteReport run_suite(const std::string &name, const VerifyOptions &opts);
std::vector<SuiteReport> run_verify(const VerifyOptions &opts);

} // namespace hgd
