#pragma once

#include <stdexcept>
#include <string>

namespace bcsgap {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid construction parameters (bounds, counts, step sizes).
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the energy band.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A non-finite integrand value at a quadrature node.
class EvaluationError : public Error {
 public:
  EvaluationError(const std::string& what, std::size_t node, double abscissa)
      : Error(what), node_(node), abscissa_(abscissa) {}

  std::size_t node() const noexcept { return node_; }
  double abscissa() const noexcept { return abscissa_; }

 private:
  std::size_t node_;
  double abscissa_;
};

/// Refinement of an improper integral did not settle.
class AccuracyError : public Error {
 public:
  AccuracyError(const std::string& what, double previous, double last)
      : Error(what), previous_(previous), last_(last) {}

  double previous() const noexcept { return previous_; }
  double last() const noexcept { return last_; }

 private:
  double previous_;
  double last_;
};

/// Kernel evaluates to a non-positive value somewhere on the band.
class PositivityError : public Error {
 public:
  PositivityError(const std::string& what, double x, double xi, double value)
      : Error(what), x_(x), xi_(xi), value_(value) {}

  double x() const noexcept { return x_; }
  double xi() const noexcept { return xi_; }
  double value() const noexcept { return value_; }

 private:
  double x_;
  double xi_;
  double value_;
};

/// Finite-difference step too small to resolve the quantity.
class StepSizeError : public Error {
 public:
  using Error::Error;
};

/// Iterative linear algebra failed (stagnating power iteration, etc.).
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Linearized radius stays below one: the kernel is too weak to superconduct.
class NoTransitionError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Linearized radius stays above one even at very high temperature.
class BracketingError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Fixed-point iteration exhausted its budget.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

/// Malformed or invalid run configuration.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& what, std::string key)
      : Error(what), key_(std::move(key)) {}

  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

}  // namespace bcsgap
