#pragma once

#include <stdexcept>
#include <string>

namespace fieldforge {

// Base of every exception thrown by the library. The CLI maps the concrete
// subclasses onto its exit-code contract.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent input files (bad magic, header, payload size).
class FormatError : public Error {
 public:
  using Error::Error;
};

// A domain invariant was violated by caller-supplied data.
class InvariantError : public Error {
 public:
  using Error::Error;
};

// Operation preconditions not met (empty batch, degenerate point set, ...).
class InputError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Non-finite values during optimization.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace fieldforge
