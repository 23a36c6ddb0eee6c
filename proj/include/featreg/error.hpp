#pragma once

#include <stdexcept>
#include <string>

namespace featreg {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numeric parameter is outside its admissible range.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Input data is malformed, non-finite or inconsistent.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Matrix or vector dimensions do not chain.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A documented precondition on a matrix argument does not hold.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// An experiment configuration is incomplete or contradictory.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Optimisation diverged or could not be carried out.
class TrainingError : public Error {
 public:
  using Error::Error;
};

}  // namespace featreg
