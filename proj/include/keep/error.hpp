#pragma once

#include <stdexcept>
#include <string>

namespace keep {

// Base for every failure raised by the library. The CLI maps the concrete
// subclasses onto process exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or missing input data (files, ids, graph structure).
class InputError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration value. `field()` names the offending key.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& what)
      : Error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

// NaN/Inf parameters, divergence and similar numerical breakdowns.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace keep
