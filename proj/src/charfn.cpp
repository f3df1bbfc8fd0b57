#include "oudens/charfn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "oudens/errors.hpp"
#include "oudens/quadrature.hpp"

namespace oudens {

ExponentQuadrature::ExponentQuadrature(const OUSystem& sys, const LevyTriplet& triplet, double t,
                                       const ExponentQuadConfig& cfg)
    : triplet_(&triplet),
      a_transpose_(sys.A.transpose()),
      b_transpose_(sys.B.transpose()),
      t_(t),
      cfg_(cfg) {
  if (t < 0.0) throw ParameterError("ou_exponent: t must be >= 0");
  if (triplet.dim != sys.noise_dim())
    throw DimensionError("ou_exponent: triplet dimension must match the noise dimension");
  if (cfg.node_count < 2) throw ParameterError("ExponentQuadConfig: node_count must be >= 2");
  if (cfg.panel_count < 1) throw ParameterError("ExponentQuadConfig: panel_count must be >= 1");
  if (!(cfg.rel_tol > 0.0)) throw ParameterError("ExponentQuadConfig: rel_tol must be > 0");
  levels_.reserve(cfg.refinement_limit + 1);
  ensure_level(0);
}

void ExponentQuadrature::ensure_level(std::size_t idx) const {
  LevelGuard& g = *guard_;
  if (idx < g.built.load(std::memory_order_acquire)) return;
  std::lock_guard<std::mutex> lock(g.mu);
  while (g.built.load(std::memory_order_relaxed) <= idx) {
    const std::size_t level_idx = g.built.load(std::memory_order_relaxed);
    const int panels = cfg_.panel_count << level_idx;
    const GaussLegendre& rule = gauss_legendre(cfg_.node_count);
    Level level;
    const double width = t_ / panels;
    level.weights.reserve(panels * rule.nodes.size());
    level.bte.reserve(panels * rule.nodes.size());
    for (int p = 0; p < panels; ++p) {
      const double mid = (p + 0.5) * width;
      const double half = 0.5 * width;
      for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        const double s = mid + half * rule.nodes[i];
        level.weights.push_back(half * rule.weights[i]);
        level.bte.push_back(b_transpose_ * mat_exp(a_transpose_, s));
      }
    }
    levels_.push_back(std::move(level));
    g.built.store(level_idx + 1, std::memory_order_release);
  }
}

std::complex<double> ExponentQuadrature::evaluate_level(const Level& level,
                                                        const Vector& h) const {
  std::complex<double> acc{};
  for (std::size_t i = 0; i < level.weights.size(); ++i) {
    acc += level.weights[i] * levy_exponent(*triplet_, level.bte[i] * h);
  }
  return acc;
}

std::complex<double> ExponentQuadrature::exponent(const Vector& h) const {
  if (h.size() != a_transpose_.rows()) throw DimensionError("ou_exponent: h dimension");
  require_finite(h, "ou_exponent h");
  if (t_ == 0.0) return {0.0, 0.0};
  ensure_level(0);
  std::complex<double> prev = evaluate_level(levels_[0], h);
  double change = std::abs(prev);
  for (int r = 1; r <= cfg_.refinement_limit; ++r) {
    ensure_level(r);
    const std::complex<double> cur = evaluate_level(levels_[r], h);
    change = std::abs(cur - prev);
    prev = cur;
    if (change <= cfg_.rel_tol * std::max(std::abs(cur), 1.0)) return cur;
  }
  if (change <= cfg_.rel_tol * std::max(std::abs(prev), 1.0)) return prev;
  throw AccuracyError("ou_exponent: refinement limit exceeded", prev,
                      change / std::max(std::abs(prev), 1e-300));
}

std::complex<double> ou_exponent(const OUSystem& sys, const LevyTriplet& triplet, double t,
                                 const Vector& h, const ExponentQuadConfig& cfg) {
  ExponentQuadrature quad(sys, triplet, t, cfg);
  return quad.exponent(h);
}

std::complex<double> ou_charfn(const OUSystem& sys, const LevyTriplet& triplet, double t,
                               const Vector& x, const Vector& h, const ExponentQuadConfig& cfg) {
  if (x.size() != sys.state_dim()) throw DimensionError("ou_charfn: x dimension");
  const std::complex<double> phi = ou_exponent(sys, triplet, t, h, cfg);
  const double phase = (mat_exp(sys.A, t).transpose() * h).dot(x);
  return std::exp(std::complex<double>(-phi.real(), phase - phi.imag()));
}

namespace {

// For a fixed stretch exponent, fits z ~ b - a rho^lambda per ray and returns
// the total squared residual.
struct StretchFit {
  double sse = 0.0;
  std::vector<double> rate;
  std::vector<double> intercept;
};

StretchFit fit_for_lambda(const std::vector<std::vector<double>>& z_by_ray,
                          const std::vector<double>& radii, double lambda) {
  StretchFit fit;
  fit.rate.reserve(z_by_ray.size());
  fit.intercept.reserve(z_by_ray.size());
  std::vector<double> x(radii.size());
  for (std::size_t i = 0; i < radii.size(); ++i) x[i] = -std::pow(radii[i], lambda);
  double mean_x = 0.0;
  for (double v : x) mean_x += v;
  mean_x /= x.size();
  double var_x = 0.0;
  for (double v : x) var_x += (v - mean_x) * (v - mean_x);
  for (const auto& z : z_by_ray) {
    double mean_z = 0.0;
    for (double v : z) mean_z += v;
    mean_z /= z.size();
    double cov = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) cov += (x[i] - mean_x) * (z[i] - mean_z);
    const double slope = var_x > 1e-300 ? cov / var_x : 0.0;
    const double icept = mean_z - slope * mean_x;
    double sse = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
      const double resid = z[i] - icept - slope * x[i];
      sse += resid * resid;
    }
    fit.sse += sse;
    fit.rate.push_back(slope);
    fit.intercept.push_back(icept);
  }
  return fit;
}

}  // namespace

DecayReport decay_probe(const OUSystem& sys, const LevyTriplet& triplet, double t, int ray_count,
                        double r_max, int radius_count, const ExponentQuadConfig& cfg,
                        std::uint64_t seed) {
  if (!(t > 0.0)) throw ParameterError("decay_probe: t must be > 0");
  if (ray_count < 1) throw ParameterError("decay_probe: ray_count must be >= 1");
  if (!(r_max > 1.0)) throw ParameterError("decay_probe: r_max must be > 1");
  if (radius_count < 4) throw ParameterError("decay_probe: radius_count must be >= 4");
  if (!rank_condition(sys).satisfied)
    throw ParameterError("decay_probe: system fails the controllability rank condition");

  DecayReport report;
  report.directions = sphere_directions(sys.state_dim(), ray_count, seed);
  report.radii.resize(radius_count);
  for (int i = 0; i < radius_count; ++i) {
    report.radii[i] = std::pow(r_max, static_cast<double>(i) / (radius_count - 1));
  }
  report.envelope.resize(ray_count, radius_count);

  ExponentQuadrature quad(sys, triplet, t, cfg);
  // fit on -Re Phi directly: it equals log|mu_hat| and never underflows
  std::vector<std::vector<double>> log_env(ray_count, std::vector<double>(radius_count));
  double min_re_phi = std::numeric_limits<double>::infinity();
  for (int u = 0; u < ray_count; ++u) {
    for (int i = 0; i < radius_count; ++i) {
      const std::complex<double> phi = quad.exponent(report.radii[i] * report.directions[u]);
      log_env[u][i] = -phi.real();
      min_re_phi = std::min(min_re_phi, phi.real());
      report.envelope(u, i) = std::min(1.0, std::exp(-phi.real()));
    }
  }
  report.saturated = min_re_phi > 745.0;

  // coarse scan then golden-section on the stretch exponent
  const double lo_lambda = 0.05, hi_lambda = 2.5;
  double best_lambda = lo_lambda;
  double best_sse = std::numeric_limits<double>::infinity();
  const int scan = 50;
  for (int k = 0; k <= scan; ++k) {
    const double lam = lo_lambda + (hi_lambda - lo_lambda) * k / scan;
    const double sse = fit_for_lambda(log_env, report.radii, lam).sse;
    if (sse < best_sse) {
      best_sse = sse;
      best_lambda = lam;
    }
  }
  const double step = (hi_lambda - lo_lambda) / scan;
  double a = std::max(lo_lambda, best_lambda - step);
  double b = std::min(hi_lambda, best_lambda + step);
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - gr * (b - a);
  double d = a + gr * (b - a);
  double fc = fit_for_lambda(log_env, report.radii, c).sse;
  double fd = fit_for_lambda(log_env, report.radii, d).sse;
  for (int iter = 0; iter < 80 && (b - a) > 1e-10; ++iter) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - gr * (b - a);
      fc = fit_for_lambda(log_env, report.radii, c).sse;
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + gr * (b - a);
      fd = fit_for_lambda(log_env, report.radii, d).sse;
    }
  }
  const double lambda = 0.5 * (a + b);
  StretchFit fit = fit_for_lambda(log_env, report.radii, lambda);

  report.fitted_alpha = lambda;
  report.ray_rate = fit.rate;
  report.ray_log_c = fit.intercept;
  report.fitted_a_t = *std::min_element(fit.rate.begin(), fit.rate.end());
  report.fitted_log_c = *std::max_element(fit.intercept.begin(), fit.intercept.end());

  double lo_z = std::numeric_limits<double>::infinity();
  double hi_z = -std::numeric_limits<double>::infinity();
  std::size_t n_points = 0;
  for (const auto& z : log_env) {
    for (double v : z) {
      lo_z = std::min(lo_z, v);
      hi_z = std::max(hi_z, v);
      ++n_points;
    }
  }
  const double range = hi_z - lo_z;
  report.fit_residual = range > 1e-12 ? std::sqrt(fit.sse / n_points) / range : 0.0;

  const bool structurally_flat =
      triplet.nu && triplet.nu->is_finite() && triplet.Q.isZero(0.0);
  report.non_decaying = structurally_flat || report.fitted_a_t <= 1e-8 ||
                        report.fitted_alpha <= 0.1 || range <= 1e-12;
  return report;
}

double choose_freq_radius(const DecayReport& report, double target, double fallback) {
  if (report.non_decaying || report.fitted_a_t <= 0.0 || report.fitted_alpha <= 0.05)
    return fallback;
  const double need = report.fitted_log_c - std::log(target);
  if (need <= 0.0) return 1.0;
  return std::max(1.0, std::pow(need / report.fitted_a_t, 1.0 / report.fitted_alpha));
}

double envelope_at(const DecayReport& report, double rho) {
  return std::exp(report.fitted_log_c - report.fitted_a_t * std::pow(rho, report.fitted_alpha));
}

}  // namespace oudens
