#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace kgflock {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A field or state does not match the lattice it is used with.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Invalid physical/control constants or configuration values.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// A control law produced |u_l| > M (or a non-finite value).
class AdmissibilityError : public Error {
 public:
  AdmissibilityError(double time, std::size_t node, double value, double bound);

  double time() const noexcept { return time_; }
  std::size_t node() const noexcept { return node_; }
  double value() const noexcept { return value_; }
  double bound() const noexcept { return bound_; }

 private:
  double time_;
  std::size_t node_;
  double value_;
  double bound_;
};

/// The damping phase did not reach its exit thresholds before the timeout.
class Phase1TimeoutError : public Error {
 public:
  using Error::Error;
};

/// No horizon below the configured cap satisfies the control-budget inequality.
class HorizonSearchError : public Error {
 public:
  using Error::Error;
};

/// A phase was entered from a state that violates its entry requirement.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Value iteration hit its sweep cap before the update fell below tolerance.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, std::size_t sweeps, double residual)
      : Error(what), sweeps_(sweeps), residual_(residual) {}
  std::size_t sweeps() const noexcept { return sweeps_; }
  double residual() const noexcept { return residual_; }

 private:
  std::size_t sweeps_;
  double residual_;
};

/// Malformed configuration or data file; line is 1-based, 0 when not applicable.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line);
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace kgflock
