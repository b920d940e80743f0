#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace subcrit {

enum class ErrorKind {
  NotSubcritical,
  BadLaw,
  NonPositiveRate,
  DomainError,
  HorizonExceeded,
  SolverFailure,
  AttemptsExhausted,
  ParticleCollapse,
  TruncationTooSmall,
  NoConvergence,
  ZeroExposure,
  DegenerateExposure,
  NoBirths,
  SkeletonDegenerate,
  NoFixedPoint,
  BadInput,
  ConfigError,
};

std::string_view to_string(ErrorKind kind);

// True for errors caused by bad user input (model or configuration) rather
// than a numerical failure.
bool is_input_error(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace subcrit
