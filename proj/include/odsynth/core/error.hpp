#pragma once

#include <stdexcept>
#include <string>

namespace odsynth {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent input data (files, matrices, labels).
class DataError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration values or ranges.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

// A rejection sampler or resampling loop exhausted its budget.
class GenerationStalled : public Error {
 public:
  using Error::Error;
};

// Training produced a non-finite loss.
class TrainingDiverged : public Error {
 public:
  using Error::Error;
};

}  // namespace odsynth
