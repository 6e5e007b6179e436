#pragma once

#include <stdexcept>
#include <string>

namespace lowsync {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shape mismatch between operands (non-square matrix, wrong vector length).
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Input that violates a documented precondition (NaN entries, zero start vector).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// A collective was invoked with inconsistent per-rank data.
class ContractViolation : public Error {
 public:
  using Error::Error;
};

/// Non-finite values produced during an iteration.
class NumericError : public Error {
 public:
  using Error::Error;
};

class SingularMatrix : public Error {
 public:
  using Error::Error;
};

}  // namespace lowsync
