#pragma once

#include <stdexcept>
#include <string>

namespace casimir {

/// Base of all library errors. The subclasses map one-to-one onto the CLI
/// exit codes (config 2, data 3, convergence 4).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid parameters or configuration (precondition violations).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent input data (optical tables, datasets, fits).
class DataError : public Error {
 public:
  using Error::Error;
};

/// A quadrature or series failed to reach its tolerance.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace casimir
