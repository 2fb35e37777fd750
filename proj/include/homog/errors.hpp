#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace homog {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed expression text; `offset` is the byte position of the problem.
class ParseError : public Error {
 public:
  ParseError(std::size_t offset, const std::string& what)
      : Error("parse error at offset " + std::to_string(offset) + ": " + what), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Division by zero or square root of a negative number during evaluation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Non-finite intermediate (overflow, non-confining potential, ...).
class NumericError : public Error {
 public:
  using Error::Error;
};

/// A requested size exceeds a configured cap.
class ResourceError : public Error {
 public:
  using Error::Error;
};

/// Caller violated a documented precondition.
class UsageError : public Error {
 public:
  using Error::Error;
};

class SolverError : public Error {
 public:
  using Error::Error;
};

class NotPositiveSemidefiniteError : public Error {
 public:
  using Error::Error;
};

class BlowUpError : public Error {
 public:
  BlowUpError(std::size_t step, const std::string& what)
      : Error("blow-up at step " + std::to_string(step) + ": " + what), step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

}  // namespace homog
