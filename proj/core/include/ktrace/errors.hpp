#pragma once

#include <stdexcept>
#include <string>

namespace ktrace {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Block or vector shapes do not match the operator dimension.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A spectral function was evaluated outside its domain.
class DomainError : public Error {
 public:
  DomainError(const std::string& what, double value) : Error(what), value_(value) {}
  double value() const noexcept { return value_; }

 private:
  double value_;
};

/// Requested problem exceeds a hard size limit (memory guard, dense oracle size).
class CapacityError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file. `line()` is 1-based.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Starting block is zero or otherwise unusable.
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

/// A caller-side precondition was violated (bad parameters, filter degree too high, ...).
class ContractError : public Error {
 public:
  using Error::Error;
};

/// The requested function has no inverse on the requested range.
class UnsupportedFunctionError : public Error {
 public:
  using Error::Error;
};

}  // namespace ktrace
