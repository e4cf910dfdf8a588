#pragma once

#include <stdexcept>
#include <string>

namespace snowball {

// Base of every error the simulator raises. Callers that only need to
// distinguish configuration problems from runtime failures catch ConfigError
// first and Error second.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid argument combination (k > n, too few candidates, bad part index...).
class ParameterError : public Error {
 public:
  using Error::Error;
};

// Vector/matrix dimensions disagree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// NaN/Inf showed up where a finite value is required.
class NumericError : public Error {
 public:
  using Error::Error;
};

// An object was used with state it was not produced for (e.g. stale cache).
class StateError : public Error {
 public:
  using Error::Error;
};

class AggregationError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

// Input is well-formed but lacks a required field or column.
class SchemaError : public ParseError {
 public:
  using ParseError::ParseError;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  ConfigError(const std::string& what, int line = 0)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}

  int line() const noexcept { return line_; }

 private:
  int line_;
};

}  // namespace snowball
