#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fingeo {

enum class ErrorCode {
  InvalidParameter,
  ConvexityViolation,
  ZeroSection,
  Stiffness,
  NoConnection,
  RefinementFailed,
  PreconditionViolated,
  DegenerateIndex,
  Symplecticity,
  RelationViolation,
  VelocityInconsistency,
  EmbeddednessLost,
  Timeout,
  DomainExit,
  ChartError,
  ExtensionError,
  LiftError,
  Config,
  Io,
};

std::string_view to_string(ErrorCode code);

// Every library failure is reported through this type; the code selects the
// handling (CLI exit status, test expectations).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidParameter: return "InvalidParameter";
    case ErrorCode::ConvexityViolation: return "ConvexityViolation";
    case ErrorCode::ZeroSection: return "ZeroSectionError";
    case ErrorCode::Stiffness: return "StiffnessError";
    case ErrorCode::NoConnection: return "NoConnectionError";
    case ErrorCode::RefinementFailed: return "RefinementFailed";
    case ErrorCode::PreconditionViolated: return "PreconditionViolated";
    case ErrorCode::DegenerateIndex: return "DegenerateIndex";
    case ErrorCode::Symplecticity: return "SymplecticityError";
    case ErrorCode::RelationViolation: return "RelationViolation";
    case ErrorCode::VelocityInconsistency: return "VelocityInconsistency";
    case ErrorCode::EmbeddednessLost: return "EmbeddednessLost";
    case ErrorCode::Timeout: return "Timeout";
    case ErrorCode::DomainExit: return "DomainExit";
    case ErrorCode::ChartError: return "ChartError";
    case ErrorCode::ExtensionError: return "ExtensionError";
    case ErrorCode::LiftError: return "LiftError";
    case ErrorCode::Config: return "ConfigError";
    case ErrorCode::Io: return "IoError";
  }
  return "Unknown";
}

}  // namespace fingeo
