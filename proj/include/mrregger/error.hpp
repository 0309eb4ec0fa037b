#pragma once

#include <stdexcept>
#include <string>

namespace mrregger {

/// Raised for invalid inputs or numerically degenerate estimator states.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input or configuration that cannot be processed at all (CLI exit code 2).
class InputError : public Error {
 public:
  using Error::Error;
};

}  // namespace mrregger
