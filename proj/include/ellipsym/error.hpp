#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ellipsym {

enum class ErrorKind {
  NotSpd,
  Singular,
  NoConvergence,
  DegenerateDirection,
  QuadratureFailure,
  InvalidConfig,
  ParseError,
  TooFewRows,
  VersionError,
  ZeroSpread,
  DegenerateDenominator,
  UnknownAlternative,
  Validation,
};

inline std::string_view to_string(ErrorKind kind) noexcept;

// Single exception type for the library; callers branch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::NotSpd: return "NotSPD";
    case ErrorKind::Singular: return "Singular";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::DegenerateDirection: return "DegenerateDirection";
    case ErrorKind::QuadratureFailure: return "QuadratureFailure";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::TooFewRows: return "TooFewRows";
    case ErrorKind::VersionError: return "VersionError";
    case ErrorKind::ZeroSpread: return "ZeroSpread";
    case ErrorKind::DegenerateDenominator: return "DegenerateDenominator";
    case ErrorKind::UnknownAlternative: return "UnknownAlternative";
    case ErrorKind::Validation: return "ValidationError";
  }
  return "Error";
}

}  // namespace ellipsym
