#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "oudens/levy.hpp"
#include "oudens/linalg.hpp"
#include "oudens/rng.hpp"

namespace oudens {

enum class SmallJumpMode {
  kCompensateDrift,     // drop jumps below the cutoff, fold their mean into the drift
  kGaussianSubstitute,  // replace them by Brownian motion with matched covariance
};

struct SimConfig {
  int step_count = 256;            // Riemann grid for the continuous part
  double small_jump_cutoff = 1e-3; // epsilon, in (0, 1]
  SmallJumpMode small_jump_mode = SmallJumpMode::kGaussianSubstitute;
  int sample_count = 1;
  std::uint64_t seed = 0;
};

// Endpoint draws of X_t^x; one column per sample. Reproducible from
// (seed, config) alone: sample i uses the counter stream keyed by i.
struct EndpointSample {
  Matrix values;  // n x sample_count
  double t = 0.0;
  Vector x;
  std::string scheme;
  std::uint64_t seed = 0;

  int dim() const { return static_cast<int>(values.rows()); }
  int count() const { return static_cast<int>(values.cols()); }
};

// Symmetric alpha-stable increment over dt with characteristic function
// e^{-dt * scale * |h|^alpha} (Chambers-Mallows-Stuck). alpha = 1 is not
// supported in this version.
double sample_stable_increment(double alpha, double scale, double dt, RngStream& rng);

// Simulates X_t^x = e^{tA}x + int_0^t e^{(t-s)A} B dZ_s: drift and Wiener
// increments on a uniform grid (applied at panel midpoints), jumps above the
// cutoff at exact exponential event times, and the configured small-jump
// treatment. All propagation uses exact matrix exponentials.
EndpointSample sample_path_endpoint(const OUSystem& sys, const LevyTriplet& triplet, double t,
                                    const Vector& x, const SimConfig& cfg, int threads = 0);

struct CompoundConvolutionResult {
  EndpointSample sample;
  double zero_atom_freq = 0.0;      // empirical P(no jump before t)
  double expected_zero_atom = 0.0;  // e^{-mass * t}
};

// Exact-in-time draws of int_0^t e^{sA} B dZ^N_s for the compound Poisson
// process with the truncated intensity: exponential inter-arrival times and
// marks from the normalized truncated measure.
CompoundConvolutionResult sample_compound_convolution(const OUSystem& sys,
                                                      const TruncatedMeasure& tm, double t,
                                                      const SimConfig& cfg, int threads = 0);

// The degenerate 2-d system driven by scalar noise: X^1 = x0^1 + Z_t,
// X^2 = x0^2 + x0^1 t + int_0^t Z_s ds, with the path integral accumulated
// between jump/grid events.
EndpointSample kolmogorov_example(const Vector& x0, double t, const LevyTriplet& z_triplet,
                                  const SimConfig& cfg, int threads = 0);

struct McEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  int count = 0;
};

McEstimate mc_estimate(const EndpointSample& samples,
                       const std::function<double(const Vector&)>& f);

}  // namespace oudens
