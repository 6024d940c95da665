#pragma once

#include <stdexcept>
#include <string>

namespace latcap {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid user input: malformed config, bad shape parameters, dimension
/// mismatches, parameters outside a kernel's domain.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A documented precondition of an operation was violated by otherwise
/// well-formed inputs (for example overlapping sets where disjointness is
/// required).
class PreconditionError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

/// Parameters outside the domain where a kernel is defined.
class DomainError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

/// A numerical routine failed to reach its accuracy target.
class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what, double diagnostic = 0.0)
      : Error(what), diagnostic_(diagnostic) {}

  /// Routine-specific diagnostic: condition estimate, best duality gap, ...
  double diagnostic() const noexcept { return diagnostic_; }

 private:
  double diagnostic_;
};

/// A Monte Carlo sampler kept exhausting its node budget.
class BudgetError : public Error {
 public:
  using Error::Error;
};

}  // namespace latcap
