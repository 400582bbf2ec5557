#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bosonize {

enum class ErrorKind {
  InvalidArgument,
  NotHermitian,
  DimensionMismatch,
  EmptyKeepSet,
  NoConvergence,
  NotSimultaneouslyDiagonalizable,
  DimensionOverflow,
  GridMismatch,
  OrderTooHigh,
  QuadratureUnderResolved,
  ValidationFailed,
  ParseError,
  SchemaError,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::NotHermitian: return "NotHermitian";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::EmptyKeepSet: return "EmptyKeepSet";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::NotSimultaneouslyDiagonalizable: return "NotSimultaneouslyDiagonalizable";
    case ErrorKind::DimensionOverflow: return "DimensionOverflow";
    case ErrorKind::GridMismatch: return "GridMismatch";
    case ErrorKind::OrderTooHigh: return "OrderTooHigh";
    case ErrorKind::QuadratureUnderResolved: return "QuadratureUnderResolved";
    case ErrorKind::ValidationFailed: return "ValidationFailed";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::SchemaError: return "SchemaError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries a machine-readable kind and,
/// where one exists, the measured quantity that tripped it (a norm, a
/// residual, a dimension).
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message, double measured = 0.0)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message),
        kind_(kind),
        measured_(measured) {}

  ErrorKind kind() const noexcept { return kind_; }
  double measured() const noexcept { return measured_; }

 private:
  ErrorKind kind_;
  double measured_;
};

}  // namespace bosonize
