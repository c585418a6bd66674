#pragma once

#include <stdexcept>
#include <string>

namespace ltpfit {

/// Base class for every error raised by the library. Messages are prefixed
/// with the module that raised them, e.g. "matvar: ...".
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid dimensions, out-of-range hyperparameters, bad arguments.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// A matrix that must be positive definite (or invertible) was not.
class FactorizationError : public Error {
 public:
  using Error::Error;
};

/// Input outside the mathematical domain of a transform (e.g. log of 0).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Malformed text input. Row and column are 1-based; 0 means "not known".
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t row = 0, std::size_t col = 0)
      : Error(what), row_(row), col_(col) {}
  std::size_t row() const { return row_; }
  std::size_t col() const { return col_; }

 private:
  std::size_t row_;
  std::size_t col_;
};

/// Non-finite objective, failed filter step, and similar numerical breakdowns.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace ltpfit
