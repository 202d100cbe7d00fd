#pragma once

#include <stdexcept>
#include <string>

namespace svgp {

// Root of every error the engine raises. The C API maps each subclass to a
// status code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

// Cholesky failed on every rung of the jitter ladder.
class FactorizationError : public Error {
 public:
  using Error::Error;
};

class ArityError : public Error {
 public:
  using Error::Error;
};

class NonFiniteError : public Error {
 public:
  using Error::Error;
};

class UnsupportedMean : public Error {
 public:
  using Error::Error;
};

class MissingLatentRow : public Error {
 public:
  using Error::Error;
};

class DivergenceError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

// Checkpoint or config written by a newer (or unknown) format version.
class VersionError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

}  // namespace svgp
