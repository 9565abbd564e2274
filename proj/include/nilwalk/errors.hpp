#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace nilwalk {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid arguments: mismatched parent groups, out-of-range parameters.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A computation would exceed a configured size limit.
class CapacityError : public Error {
 public:
  using Error::Error;
};

/// A numerical routine cannot reach the requested accuracy within its caps.
class PrecisionError : public Error {
 public:
  using Error::Error;
};

/// Mixing-time search found no bracket below the time cap.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

class NotNilpotentError : public Error {
 public:
  using Error::Error;
};

class NotConjugacyInvariantError : public Error {
 public:
  using Error::Error;
};

class ReducibleWalkError : public Error {
 public:
  using Error::Error;
};

class UnsupportedProjectionError : public Error {
 public:
  using Error::Error;
};

/// Malformed input text. Line and column are 1-based; 0 means unknown.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line, std::size_t column)
      : Error(format(what, line, column)), line_(line), column_(column) {}

  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  static std::string format(const std::string& what, std::size_t line, std::size_t column) {
    if (line == 0) return what;
    return "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + what;
  }

  std::size_t line_;
  std::size_t column_;
};

}  // namespace nilwalk
