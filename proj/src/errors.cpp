#include "adisc/errors.hpp"

namespace adisc {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::MalformedGraph: return "MalformedGraph";
    case ErrorKind::NotTotallyReal: return "NotTotallyReal";
    case ErrorKind::SliceDegenerate: return "SliceDegenerate";
    case ErrorKind::ExhaustedAttempts: return "ExhaustedAttempts";
    case ErrorKind::BoxCollapsed: return "BoxCollapsed";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::DomainEscape: return "DomainEscape";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::ResolutionTooCoarse: return "ResolutionTooCoarse";
    case ErrorKind::HypothesisViolated: return "HypothesisViolated";
    case ErrorKind::RangeEscape: return "RangeEscape";
    case ErrorKind::StepTooLarge: return "StepTooLarge";
    case ErrorKind::InversionFailed: return "InversionFailed";
    case ErrorKind::FixtureRangeEscape: return "FixtureRangeEscape";
    case ErrorKind::CoverageInconclusive: return "CoverageInconclusive";
    case ErrorKind::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

}  // namespace adisc
