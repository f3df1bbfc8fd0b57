#pragma once

#include <complex>
#include <stdexcept>
#include <string>

namespace oudens {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Shape or dimensionality of an input does not match the operation.
struct DimensionError : Error {
  using Error::Error;
};

// An argument is outside the operation's admissible range.
struct ParameterError : Error {
  using Error::Error;
};

// A quadrature or refinement loop hit its limit; carries the best estimate.
struct AccuracyError : Error {
  std::complex<double> best_estimate;
  double last_change;
  AccuracyError(const std::string& msg, std::complex<double> estimate, double change)
      : Error(msg), best_estimate(estimate), last_change(change) {}
};

// A rejection sampler exceeded its attempt budget.
struct SamplingError : Error {
  using Error::Error;
};

// A constructed matrix is too ill-conditioned to use.
struct ConditioningError : Error {
  using Error::Error;
};

// A grid or sample set does not cover enough probability mass.
struct CoverageError : Error {
  using Error::Error;
};

// The requested case is outside what this build supports.
struct UnsupportedError : Error {
  using Error::Error;
};

}  // namespace oudens
