#pragma once

#include <stdexcept>
#include <string>

namespace rpi {

/// Argument outside the mathematical domain of an operation (e.g. x < 0 for
/// an integrated-tail CDF, a negative horizon).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Caller violated a documented precondition (invalid law parameters,
/// mismatched dimensions, a CDF that is not a CDF).
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Experiment configuration failed schema validation. `field()` is the JSON
/// path of the offending entry, e.g. "kernel.eta.rate".
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::runtime_error(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

/// The stationary tail bound did not drop below the requested tolerance
/// before the window half-width limit was reached.
class TruncationError : public std::runtime_error {
 public:
  TruncationError(const std::string& message, double c_reached, double bound)
      : std::runtime_error(message), c_reached_(c_reached), bound_(bound) {}
  double c_reached() const { return c_reached_; }
  double bound() const { return bound_; }

 private:
  double c_reached_;
  double bound_;
};

}  // namespace rpi
