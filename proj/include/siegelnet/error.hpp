#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace siegelnet {

enum class ErrorKind {
  InvalidInput,
  NotPositiveDefinite,
  SingularMatrix,
  RankDeficient,
  NumericalOverflow,
  ShapeMismatch,
  DegenerateHyperplane,
  DegenerateInput,
  NotDifferentiable,
  DivergedTraining,
  ConfigError,
  FormatError,
};

std::string_view to_string(ErrorKind kind);

/// Single exception type for the library; `kind()` carries the category so
/// callers (and the CLI exit-code mapping) can branch without RTTI ladders.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidInput: return "InvalidInput";
    case ErrorKind::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorKind::SingularMatrix: return "SingularMatrix";
    case ErrorKind::RankDeficient: return "RankDeficient";
    case ErrorKind::NumericalOverflow: return "NumericalOverflow";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::DegenerateHyperplane: return "DegenerateHyperplane";
    case ErrorKind::DegenerateInput: return "DegenerateInput";
    case ErrorKind::NotDifferentiable: return "NotDifferentiable";
    case ErrorKind::DivergedTraining: return "DivergedTraining";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::FormatError: return "FormatError";
  }
  return "Unknown";
}

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace siegelnet
