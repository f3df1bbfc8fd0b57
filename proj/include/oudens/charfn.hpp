#pragma once

#include <atomic>
#include <complex>
#include <cstdint>
#include <memory>
#include <mutex>
#include <vector>

#include "oudens/levy.hpp"
#include "oudens/linalg.hpp"

namespace oudens {

struct ExponentQuadConfig {
  int node_count = 16;
  int panel_count = 8;
  int refinement_limit = 6;
  double rel_tol = 1e-9;
};

// Precomputes the quadrature nodes s_i on [0,t] together with B^T e^{s_i A^T},
// so grids of frequencies can be swept without re-exponentiating A. Levels
// hold successively doubled panel counts for refinement checks.
class ExponentQuadrature {
 public:
  ExponentQuadrature(const OUSystem& sys, const LevyTriplet& triplet, double t,
                     const ExponentQuadConfig& cfg = {});

  // Phi(t, h) = int_0^t psi(B^T e^{s A^T} h) ds, refined until the relative
  // change is below cfg.rel_tol. Throws AccuracyError past the refinement
  // budget.
  std::complex<double> exponent(const Vector& h) const;

  double horizon() const { return t_; }

 private:
  struct Level {
    std::vector<double> weights;
    std::vector<Matrix> bte;  // B^T e^{s_i A^T}, one d x n block per node
  };
  struct LevelGuard {
    std::mutex mu;
    std::atomic<std::size_t> built{0};
  };
  std::complex<double> evaluate_level(const Level& level, const Vector& h) const;
  void ensure_level(std::size_t idx) const;

  const LevyTriplet* triplet_;
  Matrix a_transpose_;
  Matrix b_transpose_;
  double t_;
  ExponentQuadConfig cfg_;
  mutable std::vector<Level> levels_;
  std::unique_ptr<LevelGuard> guard_ = std::make_unique<LevelGuard>();
};

// Phi(t,h) as above; one-shot convenience over ExponentQuadrature.
std::complex<double> ou_exponent(const OUSystem& sys, const LevyTriplet& triplet, double t,
                                 const Vector& h, const ExponentQuadConfig& cfg = {});

// Characteristic function of X_t^x: e^{i<e^{tA^T}h, x>} e^{-Phi(t,h)}.
std::complex<double> ou_charfn(const OUSystem& sys, const LevyTriplet& triplet, double t,
                               const Vector& x, const Vector& h,
                               const ExponentQuadConfig& cfg = {});

// Empirical certificate for the |mu_hat_t(y)| <= c e^{-a |y|^alpha} envelope:
// |mu_hat| along rays, with a shared-alpha, per-ray-amplitude least squares
// fit in log scale. fitted_a_t is the weakest (smallest) per-ray rate, the
// binding one for an upper envelope.
struct DecayReport {
  std::vector<Vector> directions;
  std::vector<double> radii;
  Eigen::MatrixXd envelope;  // ray x radius, values of |mu_hat_t|
  std::vector<double> ray_rate;
  std::vector<double> ray_log_c;
  double fitted_a_t = 0.0;
  double fitted_alpha = 0.0;
  double fitted_log_c = 0.0;
  double fit_residual = 0.0;  // RMS log residual / log range
  bool saturated = false;     // too many underflowed points to fit
  bool non_decaying = false;  // envelope does not decay like a stretched exponential
};

DecayReport decay_probe(const OUSystem& sys, const LevyTriplet& triplet, double t, int ray_count,
                        double r_max, int radius_count = 32,
                        const ExponentQuadConfig& cfg = {}, std::uint64_t seed = 0);

// Smallest H with fitted envelope c e^{-a H^alpha} below target; falls back
// to `fallback` when the fit is unusable.
double choose_freq_radius(const DecayReport& report, double target = 1e-7,
                          double fallback = 16.0);

// Predicted envelope value at radius rho from the fit.
double envelope_at(const DecayReport& report, double rho);

}  // namespace oudens
