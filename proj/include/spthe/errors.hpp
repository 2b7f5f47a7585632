#pragma once

#include <stdexcept>
#include <string>

namespace spthe {

enum class ErrorKind {
  Domain,             // argument outside the mathematical domain of an operation
  DimensionMismatch,
  AsymmetricMatrix,
  PolicyInfeasible,
  EmptyModeSet,
  EmptySufficientSet,
  NegativeLambda,
  OutOfDomain,        // hybrid-time query outside an arc's domain
  Integration,
  Validation,
  Io,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Domain: return "Domain";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::AsymmetricMatrix: return "AsymmetricMatrix";
    case ErrorKind::PolicyInfeasible: return "PolicyInfeasible";
    case ErrorKind::EmptyModeSet: return "EmptyModeSet";
    case ErrorKind::EmptySufficientSet: return "EmptySufficientSet";
    case ErrorKind::NegativeLambda: return "NegativeLambda";
    case ErrorKind::OutOfDomain: return "OutOfDomain";
    case ErrorKind::Integration: return "Integration";
    case ErrorKind::Validation: return "Validation";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace spthe
