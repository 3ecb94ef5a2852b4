#pragma once

#include <stdexcept>
#include <string>

namespace parcal {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid argument or inconsistent configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Points of different spatial dimension were combined.
class DimensionMismatch : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

/// A kernel was evaluated on its singular set.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A potential was evaluated at one of the atoms of the measure.
class DiagonalError : public DomainError {
 public:
  using DomainError::DomainError;
};

/// A request would exceed the configured memory budget.
class ResourceError : public Error {
 public:
  using Error::Error;
};

/// Numerical work finished without reaching the requested accuracy.
/// The best available estimate travels with the exception.
class ToleranceNotMet : public Error {
 public:
  ToleranceNotMet(const std::string& what, double best_estimate, double error_estimate)
      : Error(what), best_(best_estimate), error_(error_estimate) {}

  double best_estimate() const noexcept { return best_; }
  double error_estimate() const noexcept { return error_; }

 private:
  double best_;
  double error_;
};

/// Quadrature error of a corner experiment exceeds half of its value.
class RefineRequired : public ToleranceNotMet {
 public:
  using ToleranceNotMet::ToleranceNotMet;
};

}  // namespace parcal
