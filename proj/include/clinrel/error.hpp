#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace clinrel {

/// Root of every exception thrown by the engine.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input. `line()` is 1-based, 0 when not tied to a line.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : Error(line ? what + " (line " + std::to_string(line) + ")" : what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class EmptyInputError : public ParseError {
 public:
  EmptyInputError() : ParseError("empty input") {}
};

/// Well-formed input that violates a referential or structural invariant.
class IntegrityError : public Error {
 public:
  using Error::Error;
};

class EncodingError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class AlignmentError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class SizingError : public Error {
 public:
  using Error::Error;
};

class InsufficientMinorityError : public Error {
 public:
  using Error::Error;
};

class ClassMissingError : public Error {
 public:
  using Error::Error;
};

class DegenerateCurveError : public Error {
 public:
  using Error::Error;
};

class UndefinedMetricError : public Error {
 public:
  using Error::Error;
};

}  // namespace clinrel
