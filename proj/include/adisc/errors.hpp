#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace adisc {

/// Failure categories raised by the library. The CLI maps them onto exit codes.
enum class ErrorKind {
  MalformedGraph,
  NotTotallyReal,
  SliceDegenerate,
  ExhaustedAttempts,
  BoxCollapsed,
  NoConvergence,
  DomainEscape,
  InvalidArgument,
  ResolutionTooCoarse,
  HypothesisViolated,
  RangeEscape,
  StepTooLarge,
  InversionFailed,
  FixtureRangeEscape,
  CoverageInconclusive,
  ConfigError,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace adisc
