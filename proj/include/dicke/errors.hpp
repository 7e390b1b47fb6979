#pragma once

#include <stdexcept>
#include <string>

namespace dicke {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A formula is singular or an argument is outside its mathematical domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

// An operation that only exists in one phase was asked for in the other.
class PhaseError : public Error {
 public:
  using Error::Error;
};

// Parameters violate a type invariant.
class InvalidParameter : public Error {
 public:
  using Error::Error;
};

// Model features the Gaussian engine cannot represent (e.g. nonlinear jumps).
class UnsupportedModel : public Error {
 public:
  using Error::Error;
};

// Drift matrix is not strictly Hurwitz, so no unique steady state exists.
class MarginalStability : public Error {
 public:
  using Error::Error;
};

class IntegrationError : public Error {
 public:
  IntegrationError(const std::string& what, double time)
      : Error(what + " (t = " + std::to_string(time) + ")"), time_(time) {}

  double time() const noexcept { return time_; }

 private:
  double time_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace dicke
