#pragma once

#include <stdexcept>
#include <string>

namespace trx {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: out-of-range values, bad files, contract violations.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Input is well formed but statistically unusable (e.g. a single-class
/// tuning set).
class DegenerateDataError : public Error {
 public:
  using Error::Error;
};

}  // namespace trx
