#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pmdiff {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Grid index outside the admissible range.
class IndexError : public Error {
public:
  using Error::Error;
};

/// Argument outside the mathematical domain of a function (negative s², t < 0, ...).
class DomainError : public Error {
public:
  using Error::Error;
};

/// Invalid scheme or solver configuration.
class ConfigError : public Error {
public:
  using Error::Error;
};

/// Mismatched field or vector sizes.
class DimensionError : public Error {
public:
  using Error::Error;
};

/// A time step produced NaN or Inf.
class NumericBlowupError : public Error {
public:
  using Error::Error;
};

/// Iterative linear solve did not reach its tolerance.
class SolverError : public Error {
public:
  SolverError(const std::string& what, double residual, std::size_t iterations)
      : Error(what), residual_(residual), iterations_(iterations) {}

  double residual() const noexcept { return residual_; }
  std::size_t iterations() const noexcept { return iterations_; }

private:
  double residual_;
  std::size_t iterations_;
};

/// File could not be opened, read or written.
class IoError : public Error {
public:
  using Error::Error;
};

/// Malformed input data. `position()` is a byte offset for PGM and a
/// 1-based line number for CSV.
class ParseError : public Error {
public:
  ParseError(const std::string& what, std::size_t position)
      : Error(what), position_(position) {}

  std::size_t position() const noexcept { return position_; }

private:
  std::size_t position_;
};

}  // namespace pmdiff
