#include "oudens/simulate.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <vector>

#include "oudens/errors.hpp"
#include "oudens/parallel.hpp"

namespace oudens {

namespace {

constexpr double kPi = std::numbers::pi;

// e^{sA} v without temporaries; sub-stepped truncated Taylor as in
// expm_action, but with caller-owned scratch for the per-event hot path.
struct ExpScratch {
  Vector term, tmp;
};

void expm_action_inplace(const Matrix& a, double norm_a, double s, Vector& v, ExpScratch& sc) {
  if (s == 0.0) return;
  const double norm = std::abs(s) * norm_a;
  const int substeps = std::max(1, static_cast<int>(std::ceil(norm / 0.5)));
  const double h = s / substeps;
  for (int step = 0; step < substeps; ++step) {
    sc.term = v;
    for (int k = 1; k <= 20; ++k) {
      sc.tmp.noalias() = a * sc.term;
      sc.term = (h / k) * sc.tmp;
      v += sc.term;
      if (sc.term.lpNorm<Eigen::Infinity>() <= 1e-18 * (1.0 + v.lpNorm<Eigen::Infinity>()))
        break;
    }
  }
}

Matrix psd_sqrt(const Matrix& q) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(q);
  Vector ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

void validate_sim_config(const SimConfig& cfg) {
  if (cfg.step_count < 1) throw ParameterError("SimConfig: step_count must be >= 1");
  if (cfg.sample_count < 1) throw ParameterError("SimConfig: sample_count must be >= 1");
  if (!(cfg.small_jump_cutoff > 0.0) || cfg.small_jump_cutoff > 1.0)
    throw ParameterError("SimConfig: small_jump_cutoff must be in (0, 1]");
}

// Everything shared across samples in sample_path_endpoint.
struct PathModel {
  double t;
  int steps;
  double dt;
  double sqrt_dt;
  int noise_dim;
  Vector drift_step;           // (a - band compensation) * dt
  Matrix diffusion;            // square root of Q plus any substituted small-jump covariance
  bool has_diffusion = false;
  std::optional<TruncatedMeasure> big_jumps;
  double jump_rate = 0.0;
  double norm_a = 0.0;
};

PathModel build_path_model(const OUSystem& sys, const LevyTriplet& triplet, double t,
                           const SimConfig& cfg) {
  PathModel m;
  m.t = t;
  m.steps = cfg.step_count;
  m.dt = t / cfg.step_count;
  m.sqrt_dt = std::sqrt(m.dt);
  m.noise_dim = triplet.dim;
  m.norm_a = sys.A.cwiseAbs().rowwise().sum().maxCoeff();

  Vector drift = triplet.a;
  Matrix q_total = triplet.Q;
  if (triplet.nu) {
    const double eps = cfg.small_jump_cutoff;
    if (eps < 1.0) drift -= band_mean(*triplet.nu, eps, 1.0);
    if (cfg.small_jump_mode == SmallJumpMode::kGaussianSubstitute) {
      q_total += small_ball_second_moment(*triplet.nu, eps);
    }
    m.big_jumps = truncate_measure(*triplet.nu, eps, std::numeric_limits<double>::infinity());
    m.jump_rate = m.big_jumps->mass;
  }
  m.drift_step = drift * m.dt;
  if (q_total.cwiseAbs().maxCoeff() > 0.0) {
    m.diffusion = psd_sqrt(q_total);
    m.has_diffusion = true;
  }
  return m;
}

}  // namespace

double sample_stable_increment(double alpha, double scale, double dt, RngStream& rng) {
  if (alpha <= 0.0 || alpha >= 2.0)
    throw ParameterError("sample_stable_increment: alpha must be in (0,2)");
  if (alpha == 1.0)
    throw UnsupportedError("sample_stable_increment: alpha = 1 not supported in v1");
  if (!(scale > 0.0) || !(dt > 0.0))
    throw ParameterError("sample_stable_increment: scale and dt must be > 0");
  const double v = kPi * (rng.uniform01() - 0.5);
  const double e = rng.exponential(1.0);
  // Chambers-Mallows-Stuck, symmetric case: unit draw has cf e^{-|h|^alpha}
  const double s = std::sin(alpha * v) / std::pow(std::cos(v), 1.0 / alpha) *
                   std::pow(std::cos(v - alpha * v) / e, (1.0 - alpha) / alpha);
  return std::pow(dt * scale, 1.0 / alpha) * s;
}

EndpointSample sample_path_endpoint(const OUSystem& sys, const LevyTriplet& triplet, double t,
                                    const Vector& x, const SimConfig& cfg, int threads) {
  validate_sim_config(cfg);
  if (!(t > 0.0)) throw ParameterError("sample_path_endpoint: t must be > 0");
  if (x.size() != sys.state_dim()) throw DimensionError("sample_path_endpoint: x dimension");
  if (triplet.dim != sys.noise_dim())
    throw DimensionError("sample_path_endpoint: triplet dimension must match noise dimension");

  const PathModel model = build_path_model(sys, triplet, t, cfg);
  const Vector mean_flow = mat_exp(sys.A, t) * x;
  const Matrix& A = sys.A;
  const Matrix& B = sys.B;

  EndpointSample out;
  out.values.resize(sys.state_dim(), cfg.sample_count);
  out.t = t;
  out.x = x;
  out.scheme = "grid-midpoint+exact-jump-times";
  out.seed = cfg.seed;

  parallel_for(cfg.sample_count, threads, [&](std::size_t begin, std::size_t end) {
    ExpScratch sc;
    Vector v(sys.state_dim());
    Vector noise(model.noise_dim);
    Vector incr(model.noise_dim);
    for (std::size_t i = begin; i < end; ++i) {
      RngStream rng(cfg.seed, i);
      v.setZero();
      double cur = 0.0;
      double next_jump = model.jump_rate > 0.0 ? rng.exponential(model.jump_rate)
                                               : std::numeric_limits<double>::infinity();
      for (int k = 0; k < model.steps; ++k) {
        const double mid = (k + 0.5) * model.dt;
        while (next_jump < mid && next_jump <= model.t) {
          expm_action_inplace(A, model.norm_a, next_jump - cur, v, sc);
          cur = next_jump;
          v.noalias() += B * sample_jump(*model.big_jumps, rng);
          next_jump += rng.exponential(model.jump_rate);
        }
        expm_action_inplace(A, model.norm_a, mid - cur, v, sc);
        cur = mid;
        incr = model.drift_step;
        if (model.has_diffusion) {
          for (int c = 0; c < model.noise_dim; ++c) noise[c] = rng.normal();
          incr.noalias() += model.sqrt_dt * (model.diffusion * noise);
        }
        v.noalias() += B * incr;
      }
      while (next_jump <= model.t) {
        expm_action_inplace(A, model.norm_a, next_jump - cur, v, sc);
        cur = next_jump;
        v.noalias() += B * sample_jump(*model.big_jumps, rng);
        next_jump += rng.exponential(model.jump_rate);
      }
      expm_action_inplace(A, model.norm_a, model.t - cur, v, sc);
      out.values.col(i) = mean_flow + v;
    }
  });
  return out;
}

CompoundConvolutionResult sample_compound_convolution(const OUSystem& sys,
                                                      const TruncatedMeasure& tm, double t,
                                                      const SimConfig& cfg, int threads) {
  validate_sim_config(cfg);
  if (!(t > 0.0)) throw ParameterError("sample_compound_convolution: t must be > 0");
  if (!(tm.mass > 0.0)) throw ParameterError("sample_compound_convolution: mass must be > 0");
  if (tm.base.dim() != sys.noise_dim())
    throw DimensionError("sample_compound_convolution: measure dimension");

  const Matrix& A = sys.A;
  const Matrix& B = sys.B;
  const double norm_a = A.cwiseAbs().rowwise().sum().maxCoeff();

  CompoundConvolutionResult result;
  result.expected_zero_atom = std::exp(-tm.mass * t);
  result.sample.values.resize(sys.state_dim(), cfg.sample_count);
  result.sample.t = t;
  result.sample.x = Vector::Zero(sys.state_dim());
  result.sample.scheme = "compound-convolution-exact";
  result.sample.seed = cfg.seed;

  std::vector<char> is_zero(cfg.sample_count, 0);
  parallel_for(cfg.sample_count, threads, [&](std::size_t begin, std::size_t end) {
    ExpScratch sc;
    std::vector<double> times;
    std::vector<Vector> marks;
    Vector v(sys.state_dim());
    for (std::size_t i = begin; i < end; ++i) {
      RngStream rng(cfg.seed, i);
      times.clear();
      marks.clear();
      double cum = rng.exponential(tm.mass);
      while (cum <= t) {
        times.push_back(cum);
        marks.push_back(sample_jump(tm, rng));
        cum += rng.exponential(tm.mass);
      }
      if (times.empty()) {
        is_zero[i] = 1;
        result.sample.values.col(i).setZero();
        continue;
      }
      // sum_j e^{sigma_j A} B U_j accumulated right-to-left so every
      // exponent applied is a nonnegative gap
      v.noalias() = B * marks.back();
      for (int j = static_cast<int>(times.size()) - 2; j >= 0; --j) {
        expm_action_inplace(A, norm_a, times[j + 1] - times[j], v, sc);
        v.noalias() += B * marks[j];
      }
      expm_action_inplace(A, norm_a, times[0], v, sc);
      result.sample.values.col(i) = v;
    }
  });
  long zeros = 0;
  for (char z : is_zero) zeros += z;
  result.zero_atom_freq = static_cast<double>(zeros) / cfg.sample_count;
  return result;
}

EndpointSample kolmogorov_example(const Vector& x0, double t, const LevyTriplet& z_triplet,
                                  const SimConfig& cfg, int threads) {
  validate_sim_config(cfg);
  if (x0.size() != 2) throw DimensionError("kolmogorov_example: x0 must be 2-dimensional");
  if (z_triplet.dim != 1) throw DimensionError("kolmogorov_example: driving noise must be 1-d");
  if (!(t > 0.0)) throw ParameterError("kolmogorov_example: t must be > 0");

  // same decomposition as sample_path_endpoint, on the scalar path z
  Matrix a2(2, 2);
  a2 << 0, 0, 1, 0;
  Matrix b2(2, 1);
  b2 << 1, 0;
  const OUSystem proxy(a2, b2);
  const PathModel model = build_path_model(proxy, z_triplet, t, cfg);

  EndpointSample out;
  out.values.resize(2, cfg.sample_count);
  out.t = t;
  out.x = x0;
  out.scheme = "kolmogorov-pathwise-integral";
  out.seed = cfg.seed;

  parallel_for(cfg.sample_count, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      RngStream rng(cfg.seed, i);
      double z = 0.0;
      double integral = 0.0;
      double cur = 0.0;
      double next_jump = model.jump_rate > 0.0 ? rng.exponential(model.jump_rate)
                                               : std::numeric_limits<double>::infinity();
      const double sigma = model.has_diffusion ? model.diffusion(0, 0) : 0.0;
      for (int k = 0; k < model.steps; ++k) {
        const double mid = (k + 0.5) * model.dt;
        while (next_jump < mid && next_jump <= t) {
          integral += z * (next_jump - cur);
          cur = next_jump;
          Vector mark = sample_jump(*model.big_jumps, rng);
          z += mark[0];
          next_jump += rng.exponential(model.jump_rate);
        }
        integral += z * (mid - cur);
        cur = mid;
        double incr = model.drift_step[0];
        if (model.has_diffusion) incr += model.sqrt_dt * sigma * rng.normal();
        z += incr;
      }
      while (next_jump <= t) {
        integral += z * (next_jump - cur);
        cur = next_jump;
        Vector mark = sample_jump(*model.big_jumps, rng);
        z += mark[0];
        next_jump += rng.exponential(model.jump_rate);
      }
      integral += z * (t - cur);
      out.values(0, i) = x0[0] + z;
      out.values(1, i) = x0[1] + x0[0] * t + integral;
    }
  });
  return out;
}

McEstimate mc_estimate(const EndpointSample& samples,
                       const std::function<double(const Vector&)>& f) {
  const int n = samples.count();
  if (n < 1) throw ParameterError("mc_estimate: empty sample");
  double mean = 0.0;
  std::vector<double> vals(n);
  for (int i = 0; i < n; ++i) {
    vals[i] = f(samples.values.col(i));
    mean += vals[i];
  }
  mean /= n;
  double var = 0.0;
  for (double v : vals) var += (v - mean) * (v - mean);
  var = n > 1 ? var / (n - 1) : 0.0;
  return {mean, std::sqrt(var / n), n};
}

}  // namespace oudens
