#pragma once

#include <stdexcept>

namespace satsensor {

/// A numerical procedure (bracketing, quadrature, refinement) did not
/// produce a usable result.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The supplied interval does not bracket a sign change.
class BracketError : public NumericError {
 public:
  using NumericError::NumericError;
};

/// T(B) is not injective on the prior interval; the caller must shrink it.
class NonMonotonePriorError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed or inconsistent run configuration.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace satsensor
