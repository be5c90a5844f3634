#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dgasm {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  DimensionMismatch(const std::string& what, std::size_t expected, std::size_t got)
      : Error(what + ": expected size " + std::to_string(expected) + ", got " +
              std::to_string(got)) {}
};

/// Raised when a factorization hits an exactly zero pivot. `pivot()` is the
/// row/column index of the original matrix at which elimination failed.
class SingularMatrix : public Error {
 public:
  SingularMatrix(const std::string& context, std::size_t pivot)
      : Error(context + ": singular pivot at row " + std::to_string(pivot)), pivot_(pivot) {}

  std::size_t pivot() const noexcept { return pivot_; }

 private:
  std::size_t pivot_;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

}  // namespace dgasm
