#pragma once

#include <functional>
#include <vector>

#include "oudens/charfn.hpp"
#include "oudens/levy.hpp"
#include "oudens/linalg.hpp"

namespace oudens {

// Spatial/frequency grid for Fourier inversion. The frequency grid covers
// [-H, H)^dim with points_per_axis samples per axis; the spatial grid then has
// spacing pi/H around `center`.
struct GridSpec {
  int dim = 1;
  int points_per_axis = 128;  // power of two, >= 16
  double freq_radius = 16.0;  // H
  Vector center;

  void validate() const;
  double cell_width() const { return 3.14159265358979323846 / freq_radius; }
};

struct DensityGrid {
  GridSpec spec;
  double t = 0.0;
  std::vector<int> beta;        // derivative multi-index, all zero for the density
  std::vector<double> values;   // row-major over the spatial grid
  double truncation_error_bound = 0.0;
  double riemann_mass = 0.0;    // cell volume times sum of values
  double sup_norm = 0.0;

  std::size_t size() const { return values.size(); }
  // coordinate of grid index j along one axis
  double coord(int axis, int index) const;
  // row-major flattening (first axis slowest)
  std::size_t flat_index(const std::vector<int>& idx) const;
};

// Fourier inversion of the OU characteristic function to the density of
// X_t^x - e^{tA}x on the grid. Refuses when the decay probe flags the
// envelope as non-decaying (finite jump measures).
DensityGrid invert_density(const OUSystem& sys, const LevyTriplet& triplet, double t,
                           const GridSpec& spec, const ExponentQuadConfig& cfg = {},
                           int threads = 1);

// Inverts (-i h)^beta mu_hat: the partial derivative D^beta of the density.
DensityGrid derivative_grid(const OUSystem& sys, const LevyTriplet& triplet, double t,
                            const GridSpec& spec, const std::vector<int>& beta,
                            const ExponentQuadConfig& cfg = {}, int threads = 1);

struct TransitionValue {
  double value = 0.0;
  double captured_mass = 0.0;  // Riemann mass of the grid used
  bool coverage_ok = true;     // captured_mass >= 0.999
};

// P_t f(x) as a Riemann sum of f(e^{tA}x + y) against the density grid.
TransitionValue transition_apply(const OUSystem& sys, const LevyTriplet& triplet, double t,
                                 const Vector& x, const std::function<double(const Vector&)>& f,
                                 const GridSpec& spec, const ExponentQuadConfig& cfg = {},
                                 int threads = 1);

// Same, reusing a precomputed grid (the grid's x-offset is applied here).
TransitionValue transition_apply(const DensityGrid& grid, const OUSystem& sys, double t,
                                 const Vector& x, const std::function<double(const Vector&)>& f);

struct ModulusRow {
  double delta;
  double omega;        // max |P_t f(x) - P_t f(x')| over pairs with |x-x'| <= delta
  double shift_bound;  // L1 bound: sup over such pairs of int |p(y - e^{tA}(x-x')) - p(y)| dy
  bool within_bound;
};

struct ModulusTable {
  std::vector<ModulusRow> rows;
  bool all_within = true;
};

// Modulus of continuity of P_t f over the probe points, against the
// total-variation shift bound computed from the density grid.
ModulusTable strong_feller_probe(const OUSystem& sys, const LevyTriplet& triplet, double t,
                                 const std::function<double(const Vector&)>& f,
                                 const std::vector<Vector>& x_grid,
                                 const std::vector<double>& deltas, const GridSpec& spec,
                                 const ExponentQuadConfig& cfg = {});

struct PushforwardConfig {
  Vector box_lo, box_hi;  // integration box for the marginalised coordinates
  int panels = 64;
  int order = 16;
  double condition_limit = 1e8;
};

// Density of the image of a measure with density h under an onto linear map
// L: completes L's rows to an invertible S with greedily chosen canonical
// vectors, then marginalises h over the remaining coordinates.
std::vector<double> pushforward_density(const Matrix& L,
                                        const std::function<double(const Vector&)>& h_density,
                                        const std::vector<Vector>& eval_points,
                                        const PushforwardConfig& cfg);

}  // namespace oudens
