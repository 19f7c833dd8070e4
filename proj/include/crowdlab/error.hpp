#pragma once

#include <stdexcept>
#include <string>

namespace crowdlab {

/// Base of every exception the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input data violates a documented precondition or invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A scenario or option set that is well-formed but cannot be realized.
class ConfigurationError : public Error {
 public:
  using Error::Error;
};

}  // namespace crowdlab
