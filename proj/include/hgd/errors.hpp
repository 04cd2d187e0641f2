#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hgd {

enum class ErrorKind {
  EmptySample,
  NegativeDatum,
  InvalidOrder,
  NonPositiveScale,
  SingularLeadingCoefficient,
  OutsideDomain,
  PathSingularity,
  OdeDivergence,
  AxisOutsideDomain,
  SingularSystem,
  InconsistentExtension,
  PathCrossesSingularity,
  ZeroPolynomial,
  LeadingCoefficientZero,
  NonSquarefree,
  OnDiscriminant,
  DivergentIntegral,
  ToleranceNotMet,
  UnsupportedOrder,
  SingularInformation,
  NotConverged,
  InvalidInput,
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
  case ErrorKind::EmptySample: return "EmptySample";
  case ErrorKind::NegativeDatum: return "NegativeDatum";
  case ErrorKind::InvalidOrder: return "InvalidOrder";
  case ErrorKind::NonPositiveScale: return "NonPositiveScale";
  case ErrorKind::SingularLeadingCoefficient: return "SingularLeadingCoefficient";
  case ErrorKind::OutsideDomain: return "OutsideDomain";
  case ErrorKind::PathSingularity: return "PathSingularity";
  case ErrorKind::OdeDivergence: return "OdeDivergence";
  case ErrorKind::AxisOutsideDomain: return "AxisOutsideDomain";
  case ErrorKind::SingularSystem: return "SingularSystem";
  case ErrorKind::InconsistentExtension: return "InconsistentExtension";
  case ErrorKind::PathCrossesSingularity: return "PathCrossesSingularity";
  case ErrorKind::ZeroPolynomial: return "ZeroPolynomial";
  case ErrorKind::LeadingCoefficientZero: return "LeadingCoefficientZero";
  case ErrorKind::NonSquarefree: return "NonSquarefree";
  case ErrorKind::OnDiscriminant: return "OnDiscriminant";
  case ErrorKind::DivergentIntegral: return "DivergentIntegral";
  case ErrorKind::ToleranceNotMet: return "ToleranceNotMet";
  case ErrorKind::UnsupportedOrder: return "UnsupportedOrder";
  case ErrorKind::SingularInformation: return "SingularInformation";
  case ErrorKind::NotConverged: return "NotConverged";
  case ErrorKind::InvalidInput: return "InvalidInput";
  }
  return "Unknown";
}

/// Single exception type for the library; `kind()` carries the category.
class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string &what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

} // namespace hgd
