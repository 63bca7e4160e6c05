#pragma once

#include <stdexcept>
#include <string>

namespace pmelab {

// Failures of the time integration itself (distinct from usage/config errors,
// which are reported as std::invalid_argument / std::domain_error).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Metric scale r0^2 - 2t of the shrinking sphere reached zero.
class ExtinctionError : public NumericalError {
 public:
  explicit ExtinctionError(double t)
      : NumericalError("shrinking sphere extinct at t = " + std::to_string(t)),
        time(t) {}
  double time;
};

// An accepted step produced a nonpositive pressure value.
class PositivityLossError : public NumericalError {
 public:
  explicit PositivityLossError(double t)
      : NumericalError("pressure lost positivity at t = " + std::to_string(t) +
                       "; reduce the CFL safety factor"),
        time(t) {}
  double time;
};

// Non-finite values appeared during stepping.
class InstabilityError : public NumericalError {
 public:
  explicit InstabilityError(double t)
      : NumericalError("non-finite pressure values at t = " + std::to_string(t)),
        time(t) {}
  double time;
};

}  // namespace pmelab
