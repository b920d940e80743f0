#include "subcrit/error.hpp"

namespace subcrit {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NotSubcritical: return "NotSubcritical";
    case ErrorKind::BadLaw: return "BadLaw";
    case ErrorKind::NonPositiveRate: return "NonPositiveRate";
    case ErrorKind::DomainError: return "DomainError";
    case ErrorKind::HorizonExceeded: return "HorizonExceeded";
    case ErrorKind::SolverFailure: return "SolverFailure";
    case ErrorKind::AttemptsExhausted: return "AttemptsExhausted";
    case ErrorKind::ParticleCollapse: return "ParticleCollapse";
    case ErrorKind::TruncationTooSmall: return "TruncationTooSmall";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::ZeroExposure: return "ZeroExposure";
    case ErrorKind::DegenerateExposure: return "DegenerateExposure";
    case ErrorKind::NoBirths: return "NoBirths";
    case ErrorKind::SkeletonDegenerate: return "SkeletonDegenerate";
    case ErrorKind::NoFixedPoint: return "NoFixedPoint";
    case ErrorKind::BadInput: return "BadInput";
    case ErrorKind::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

bool is_input_error(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NotSubcritical:
    case ErrorKind::BadLaw:
    case ErrorKind::NonPositiveRate:
    case ErrorKind::DomainError:
    case ErrorKind::BadInput:
    case ErrorKind::ConfigError:
      return true;
    default:
      return false;
  }
}

}  // namespace subcrit
