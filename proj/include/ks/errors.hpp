#pragma once

#include <stdexcept>
#include <string>

namespace ks {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Invalid user input: bad parameters, grid, config text, order k.
class ConfigError : public Error {
public:
  using Error::Error;
};

/// Field length does not match the grid it is used with.
class ShapeError : public Error {
public:
  using Error::Error;
};

/// Operation needs a fully warmed history (k levels) but got fewer.
class StateError : public Error {
public:
  using Error::Error;
};

/// Anything that went wrong while marching: solver failure, NaN, bad scalars.
class NumericalError : public Error {
public:
  using Error::Error;
};

/// Argument outside the mathematical domain (e.g. log of a nonpositive density).
class DomainError : public NumericalError {
public:
  using NumericalError::NumericalError;
};

/// Quadratic energy part vanished so the correction scalar is undetermined.
class DegenerateFieldError : public NumericalError {
public:
  using NumericalError::NumericalError;
};

/// Energy correction scalar came out nonpositive; the step size is too large.
class NonpositiveCorrectionError : public NumericalError {
public:
  using NumericalError::NumericalError;
};

class IoError : public Error {
public:
  using Error::Error;
};

} // namespace ks
