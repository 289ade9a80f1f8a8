#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace nnm {

/// Base class for all errors raised by the library. Errors deriving from
/// `UserError` are caused by bad input (files, ids, configuration); anything
/// else signals a broken internal invariant.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UserError : public Error {
 public:
  using Error::Error;
};

class LookupError : public UserError {
 public:
  using UserError::UserError;
};

class ConfigError : public UserError {
 public:
  using UserError::UserError;
};

class ParseError : public UserError {
 public:
  ParseError(const std::string& path, std::size_t line, const std::string& what)
      : UserError(path + ":" + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class DuplicateError : public UserError {
 public:
  using UserError::UserError;
};

/// Raised when a fit precondition fails (e.g. users or items without ratings).
class PreconditionError : public UserError {
 public:
  using UserError::UserError;
};

/// A least-squares subproblem with no rows.
class DegenerateProblemError : public Error {
 public:
  using Error::Error;
};

class InvariantError : public Error {
 public:
  using Error::Error;
};

}  // namespace nnm
