#pragma once

#include <stdexcept>
#include <string>

namespace lgq {

// Base class for every error raised by the library. Callers that only care
// about "something went wrong in lgq" can catch this.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Matrix or vector shapes that cannot work together.
class InvalidDimensionError : public Error {
 public:
  using Error::Error;
};

// A value is outside its documented domain (negative dt, asymmetric matrix...).
class InvalidInputError : public Error {
 public:
  using Error::Error;
};

// A model whose noise description is not a valid covariance.
class InvalidModelError : public Error {
 public:
  using Error::Error;
};

// Two trajectories or records that do not live on the same time grid.
class GridMismatchError : public Error {
 public:
  using Error::Error;
};

// A Riccati flow that failed to settle, or produced non-finite numbers.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

// Two routes that must agree did not. Indicates a bug, not bad input.
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

}  // namespace lgq
