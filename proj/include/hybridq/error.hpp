#pragma once

#include <stdexcept>
#include <string>

namespace hybridq {

// Bad data or arguments supplied by the caller.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Divergence, blow-up or non-finite values during a computation.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An API used out of order or on the wrong kind of object.
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Malformed or inconsistent experiment configuration.
class ConfigError : public InputError {
 public:
  using InputError::InputError;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace hybridq
