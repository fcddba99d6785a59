#pragma once

#include <stdexcept>
#include <string>

namespace ldlab {

/// Invalid input: malformed configuration, violated preconditions, bad geometry.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical procedure failed to deliver its postcondition.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Two atoms coincide (or the energy became non-finite).
class SingularityError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace ldlab
