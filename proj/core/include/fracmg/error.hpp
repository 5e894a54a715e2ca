#pragma once

#include <stdexcept>
#include <string>

namespace fracmg {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument or configuration value was violated.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A factorization or iteration broke down (non-SPD matrix, loss of positivity).
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// A dense materialization or eigensolve was requested above its size cap.
class CapacityError : public Error {
 public:
  using Error::Error;
};

}  // namespace fracmg
