#pragma once

#include <stdexcept>
#include <string>

namespace symrad {

/// Base class of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: wrong sizes, non-unit beamformers, non-Hermitian matrices.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the mathematical domain of a function.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Factorization or iteration failure (indefinite matrix, no convergence).
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Zero channel or beam orthogonal to the direct link.
class DegenerateError : public Error {
 public:
  using Error::Error;
};

/// Optimization pipeline could not produce a solution.
class SolverError : public Error {
 public:
  using Error::Error;
};

/// Configuration file or command-line problem. Carries the offending
/// line (0 when unknown) and field name.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& what, std::size_t line = 0,
              std::string field = {})
      : Error(format(what, line, field)), line_(line), field_(std::move(field)) {}

  std::size_t line() const noexcept { return line_; }
  const std::string& field() const noexcept { return field_; }

 private:
  static std::string format(const std::string& what, std::size_t line,
                            const std::string& field) {
    std::string msg;
    if (line > 0) msg += "line " + std::to_string(line) + ": ";
    if (!field.empty()) msg += "field '" + field + "': ";
    return msg + what;
  }

  std::size_t line_;
  std::string field_;
};

}  // namespace symrad
