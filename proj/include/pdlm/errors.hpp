#pragma once

#include <stdexcept>
#include <string>

namespace pdlm {

// Base of everything the library throws. The CLI maps subclasses to exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Inconsistent vector/matrix dimensions.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Argument outside the mathematical domain of an operation (r <= 0, alpha >= 1, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Factorization failure, non-convergence, sampler livelock.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// Malformed input files. Carries the 1-based line number when known.
class DataError : public Error {
 public:
  DataError(const std::string& what, std::size_t line = 0)
      : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Invalid run configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace pdlm
