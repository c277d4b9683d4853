#pragma once

#include <stdexcept>
#include <string>

namespace phasetomo {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or out-of-contract input (non-finite values, bad shapes, empty data).
class InputError : public Error {
 public:
  using Error::Error;
};

/// A trajectory that does not encircle the phase-space origin, or an energy
/// outside the tabulated range of a frequency-shift curve.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Iterative solve did not converge (e.g. perturbation too strong).
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

/// Numerical discretization judged too coarse for the requested accuracy.
class RefinementError : public Error {
 public:
  using Error::Error;
};

/// Wave-function grid cannot represent the requested state.
class GridError : public Error {
 public:
  using Error::Error;
};

/// Probability reached the edge of the simulation box.
class BoundaryError : public Error {
 public:
  using Error::Error;
};

/// File could not be parsed or written.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace phasetomo
