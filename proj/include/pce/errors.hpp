#pragma once

#include <stdexcept>
#include <string>

namespace pce {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input file (carries the 1-based line number when known).
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class SingularDesignError : public Error {
 public:
  explicit SingularDesignError(const std::string& column)
      : Error("singular design: column '" + column + "' is linearly dependent on earlier columns"),
        column_(column) {}
  const std::string& column() const { return column_; }

 private:
  std::string column_;
};

class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

class DegenerateResponseError : public Error {
 public:
  using Error::Error;
};

class NonConvergenceError : public Error {
 public:
  using Error::Error;
};

// A stratum (or other quantity) that cannot be estimated from the data at hand.
class InestimableError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace pce
