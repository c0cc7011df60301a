#pragma once

#include <stdexcept>
#include <string>

namespace rpl {

// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An argument violated a documented precondition (shape, symmetry, range).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

// A configuration is incomplete or inconsistent.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A file could not be parsed. The message carries the path and line number.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace rpl
