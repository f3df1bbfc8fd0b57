#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "oudens/linalg.hpp"
#include "oudens/rng.hpp"

namespace oudens {

// Rotation-invariant alpha-stable jump measure: Levy density
// density_scale * |z|^{-dim-alpha}. The characteristic exponent is then
// psi_scale * |s|^alpha; the two scales are tied by a closed-form constant and
// both are stored.
struct StableSpec {
  double alpha = 1.5;
  int dim = 1;
  double psi_scale = 1.0;      // coefficient of |s|^alpha in the exponent
  double density_scale = 0.0;  // coefficient of |z|^{-dim-alpha} in the Levy density
};

// Finite jump measure with a density supported in an axis box. Everything
// about it (mass, moments, exponent) is evaluated by quadrature.
struct CompoundPoissonSpec {
  int dim = 1;
  std::function<double(const Vector&)> density;
  double total_mass = 0.0;
  double support_radius = 0.0;
  Vector box_lo, box_hi;       // support box; density must vanish outside
  double density_bound = 0.0;  // sup of the density (estimated if not given)
};

class LevyMeasureSpec;

struct SumSpec {
  std::vector<LevyMeasureSpec> parts;
};

// Parametric Levy measure. Parametric rather than black-box on purpose: the
// moment bounds and truncation masses need closed forms or controlled
// quadrature, and arbitrary measures offer neither.
class LevyMeasureSpec {
 public:
  using Variant = std::variant<StableSpec, CompoundPoissonSpec, SumSpec>;

  static LevyMeasureSpec isotropic_stable(double alpha, int dim, double psi_scale);
  static LevyMeasureSpec isotropic_stable_from_density(double alpha, int dim,
                                                       double density_scale);
  // Verifies at construction that the density integrates to total_mass
  // (tolerance 1e-6) and estimates density_bound when not supplied.
  static LevyMeasureSpec compound_poisson(int dim, std::function<double(const Vector&)> density,
                                          double total_mass, double support_radius,
                                          double density_bound = 0.0);
  static LevyMeasureSpec compound_poisson_box(int dim, std::function<double(const Vector&)> density,
                                              double total_mass, Vector box_lo, Vector box_hi,
                                              double density_bound = 0.0);
  static LevyMeasureSpec sum_of(std::vector<LevyMeasureSpec> parts);

  const Variant& variant() const { return v_; }
  int dim() const;
  bool is_finite() const;  // finite total mass (true for compound Poisson only)

 private:
  explicit LevyMeasureSpec(Variant v) : v_(std::move(v)) {}
  Variant v_;
};

// ---- closed-form constants for the isotropic stable family ----

// int_0^inf (1 - cos u) u^{-1-alpha} du, stable for all alpha in (0,2).
double stable_cosine_integral(double alpha);
// int_{S^{d-1}} |<theta, e>|^alpha dsigma(theta)
double sphere_moment(int dim, double alpha);
// surface area of S^{d-1}
double sphere_surface(int dim);
// psi_scale = density_scale * sphere_moment * stable_cosine_integral
double stable_psi_scale_from_density(double alpha, int dim, double density_scale);

// ---- measure queries (dispatch over the variant) ----

// -integral of (e^{i<s,y>} - 1 - i<s,y> 1_{|y|<=1}) nu(dy); the jump part of
// the Levy-Khintchine exponent. Closed form for stable, quadrature for
// compound Poisson (relative tolerance 1e-8, dyadic refinement; throws
// AccuracyError carrying the best estimate on failure).
std::complex<double> jump_exponent(const LevyMeasureSpec& nu, const Vector& s);

// nu({inner <= |y| <= outer}); outer may be +inf for the stable family.
double shell_mass(const LevyMeasureSpec& nu, double inner, double outer);

// integral of y over {inner < |y| <= outer} (drift compensation helper).
Vector band_mean(const LevyMeasureSpec& nu, double inner, double outer);

// integral of y y^T over {|y| <= eps} (Gaussian-substitution covariance).
Matrix small_ball_second_moment(const LevyMeasureSpec& nu, double eps);

// integral of <z,h>^2 over {|<z,h>| <= r} for a unit direction h.
double directional_moment(const LevyMeasureSpec& nu, const Vector& h, double r);

// ---- Levy-Khintchine triplet ----

struct LevyTriplet {
  Matrix Q;     // d x d symmetric PSD Gaussian covariance
  Vector a;     // drift
  std::optional<LevyMeasureSpec> nu;
  int dim;

  LevyTriplet(Matrix q, Vector drift, std::optional<LevyMeasureSpec> measure);

  static LevyTriplet gaussian(Matrix q);
  static LevyTriplet pure_jump(LevyMeasureSpec measure);
  static LevyTriplet drift_only(Vector drift);
};

// psi(s) = <Qs,s>/2 - i<a,s> + jump_exponent(nu, s); Re psi >= 0.
std::complex<double> levy_exponent(const LevyTriplet& triplet, const Vector& s);

// ---- directional small-ball moment check ----

struct MomentCheckRow {
  int direction_index;
  double r;
  double moment;    // I(h, r)
  double required;  // C * r^{2-alpha}
  double ratio;
};

struct MomentCheckReport {
  bool satisfied = false;
  double worst_ratio = 0.0;
  std::vector<Vector> directions;
  std::vector<MomentCheckRow> rows;
  // Rescaled form: same ratios restricted to |k| = 1/r >= c0.
  double rescaled_c0 = 1.0;
  bool rescaled_satisfied = false;
  double rescaled_worst_ratio = 0.0;
};

// Checks I(h,r) >= C r^{2-alpha} over deterministic directions (from seed)
// and the given positive decreasing radii.
MomentCheckReport directional_moment_check(const LevyMeasureSpec& nu, double alpha, double C,
                                           const std::vector<double>& r_grid, int dir_count,
                                           std::uint64_t seed, double c0 = 1.0);

// ---- truncation to a finite shell (the compound-Poisson approximation) ----

struct TruncatedMeasure {
  LevyMeasureSpec base;
  double inner_radius;
  double outer_radius;  // +inf allowed when the base has finite tail mass
  double mass;
  std::string sampler_kind;
  std::vector<double> component_masses;  // per part, for sums
};

TruncatedMeasure truncate_measure(const LevyMeasureSpec& nu, double inner_radius,
                                  double outer_radius);

// One draw from the normalized truncated measure nu_N / mass.
Vector sample_jump(const TruncatedMeasure& tm, RngStream& rng);

}  // namespace oudens
