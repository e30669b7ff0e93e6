#pragma once

#include <stdexcept>
#include <string>

namespace biot {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid degree, regularity, rule size or similar scalar argument.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Evaluation point outside the parametric domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Mismatched vector or matrix sizes.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Degree/regularity choice violating the mixed-space stability condition.
class StabilityConditionError : public ParameterError {
 public:
  using ParameterError::ParameterError;
};

/// Non-positive Jacobian determinant of the geometry map.
class DegenerateGeometryError : public Error {
 public:
  using Error::Error;
};

class SingularMatrixError : public Error {
 public:
  SingularMatrixError(const std::string& what, long pivot)
      : Error(what), pivot_(pivot) {}
  /// Index of the offending pivot, -1 when unknown.
  long pivot() const noexcept { return pivot_; }

 private:
  long pivot_;
};

/// Solve finished but its residual exceeds the accepted tolerance.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace biot
