#pragma once

#include <stdexcept>
#include <string>

namespace tsc {

// Base class for all recoverable failures raised by this library.  The CLI
// maps the three subclasses to distinct process exit codes; library code and
// tests catch the specific type they care about.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Bad configuration: unknown/malformed config keys, inconsistent layout
// values, out-of-range hyperparameters, unusable CLI arguments.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Bad or unreadable data: missing files, malformed PGM headers, truncated
// payloads, model files that fail to parse or validate.
class DataError : public Error {
 public:
  using Error::Error;
};

// Numerical failure: matrix-exponential overflow, solver non-convergence,
// non-finite losses.  These indicate the run went off the rails, not that the
// caller passed garbage.
class NumericError : public Error {
 public:
  using Error::Error;
};

// exp(A) produced entries beyond the representable-results guard.
class ExpOverflowError : public NumericError {
 public:
  using NumericError::NumericError;
};

// An iterative solver hit its iteration cap without meeting its tolerance.
class NonConvergenceError : public NumericError {
 public:
  using NumericError::NumericError;
};

}  // namespace tsc
