#include "oudens/simulate.hpp"

#include <cmath>
#include <complex>

#include "doctest.h"
#include "oudens/charfn.hpp"
#include "oudens/errors.hpp"

using namespace oudens;

namespace {

Vector vec1(double x) {
  Vector v(1);
  v << x;
  return v;
}

Vector vec2(double x, double y) {
  Vector v(2);
  v << x, y;
  return v;
}

OUSystem scalar_ou(double lambda) {
  Matrix a(1, 1), b(1, 1);
  a << -lambda;
  b << 1.0;
  return OUSystem(a, b);
}

OUSystem kolmogorov_system() {
  Matrix a(2, 2), b(2, 1);
  a << 0, 0, 1, 0;
  b << 1, 0;
  return OUSystem(a, b);
}

std::complex<double> empirical_cf_1d(const EndpointSample& s, double h) {
  std::complex<double> acc{};
  for (int i = 0; i < s.count(); ++i) acc += std::polar(1.0, h * s.values(0, i));
  return acc / static_cast<double>(s.count());
}

// conservative CLT band for |cf_hat - cf|: each part has variance <= 1/(2n)
double cf_band(int n) { return 3.0 * std::sqrt(2.0 / n); }

}  // namespace

TEST_CASE("sample_stable_increment matches its characteristic function") {
  const double alpha = 1.5, scale = 1.0, dt = 0.7;
  RngStream rng(1234);
  const int n = 100000;
  std::vector<double> draws(n);
  for (int i = 0; i < n; ++i) draws[i] = sample_stable_increment(alpha, scale, dt, rng);
  for (double h : {0.5, 1.0, 2.0}) {
    std::complex<double> acc{};
    for (double d : draws) acc += std::polar(1.0, h * d);
    acc /= static_cast<double>(n);
    const double expected = std::exp(-dt * scale * std::pow(h, alpha));
    CHECK(std::abs(acc - std::complex<double>(expected, 0.0)) < cf_band(n));
  }
  // symmetry through the sign count
  int positives = 0;
  for (double d : draws) positives += d > 0.0 ? 1 : 0;
  CHECK(std::abs(positives / static_cast<double>(n) - 0.5) < 3.0 * 0.5 / std::sqrt(n));
}

TEST_CASE("sample_stable_increment rejects alpha = 1 and bad parameters") {
  RngStream rng(1);
  CHECK_THROWS_AS(sample_stable_increment(1.0, 1.0, 1.0, rng), UnsupportedError);
  CHECK_THROWS_AS(sample_stable_increment(2.5, 1.0, 1.0, rng), ParameterError);
  CHECK_THROWS_AS(sample_stable_increment(1.5, -1.0, 1.0, rng), ParameterError);
}

TEST_CASE("gaussian endpoint sampling reproduces N(x, tI)") {
  const OUSystem sys(Matrix::Zero(2, 2), Matrix::Identity(2, 2));
  const LevyTriplet triplet = LevyTriplet::gaussian(Matrix::Identity(2, 2));
  SimConfig cfg;
  cfg.sample_count = 100000;
  cfg.step_count = 64;
  cfg.seed = 55;
  const double t = 1.3;
  const auto out = sample_path_endpoint(sys, triplet, t, vec2(0.5, -1.0), cfg);
  const Vector mean = out.values.rowwise().mean();
  CHECK(std::abs(mean[0] - 0.5) < 3.0 * std::sqrt(t / cfg.sample_count));
  CHECK(std::abs(mean[1] + 1.0) < 3.0 * std::sqrt(t / cfg.sample_count));
  Matrix centered = out.values.colwise() - mean;
  const Matrix cov = centered * centered.transpose() / (cfg.sample_count - 1.0);
  // var of the sample variance of a gaussian is 2 t^2 / n
  const double band = 3.0 * t * std::sqrt(2.0 / cfg.sample_count);
  CHECK(std::abs(cov(0, 0) - t) < band);
  CHECK(std::abs(cov(1, 1) - t) < band);
  CHECK(std::abs(cov(0, 1)) < band);
}

TEST_CASE("drift-only endpoints are deterministic") {
  const OUSystem sys(Matrix::Zero(2, 2), Matrix::Identity(2, 2));
  const LevyTriplet triplet = LevyTriplet::drift_only(vec2(0.7, -0.2));
  SimConfig cfg;
  cfg.sample_count = 3;
  cfg.step_count = 17;
  const double t = 2.0;
  const auto out = sample_path_endpoint(sys, triplet, t, vec2(1.0, 1.0), cfg);
  for (int i = 0; i < 3; ++i) {
    CHECK(out.values(0, i) == doctest::Approx(1.0 + t * 0.7).epsilon(1e-13));
    CHECK(out.values(1, i) == doctest::Approx(1.0 - t * 0.2).epsilon(1e-13));
  }
}

TEST_CASE("stable OU endpoint law matches the characteristic function") {
  const OUSystem sys = scalar_ou(1.0);
  const LevyTriplet triplet =
      LevyTriplet::pure_jump(LevyMeasureSpec::isotropic_stable(1.5, 1, 1.0));
  SimConfig cfg;
  cfg.sample_count = 40000;
  cfg.step_count = 128;
  cfg.small_jump_cutoff = 0.005;
  cfg.small_jump_mode = SmallJumpMode::kGaussianSubstitute;
  cfg.seed = 99;
  const auto out = sample_path_endpoint(sys, triplet, 1.0, vec1(0.0), cfg);
  for (double h : {0.5, 1.0, 2.0}) {
    const auto expected = ou_charfn(sys, triplet, 1.0, vec1(0.0), vec1(h));
    CHECK(std::abs(empirical_cf_1d(out, h) - expected) < cf_band(cfg.sample_count));
  }
}

TEST_CASE("compensate-drift mode also matches, more loosely") {
  const OUSystem sys = scalar_ou(1.0);
  const LevyTriplet triplet =
      LevyTriplet::pure_jump(LevyMeasureSpec::isotropic_stable(1.5, 1, 1.0));
  SimConfig cfg;
  cfg.sample_count = 40000;
  cfg.step_count = 128;
  cfg.small_jump_cutoff = 0.002;
  cfg.small_jump_mode = SmallJumpMode::kCompensateDrift;
  cfg.seed = 100;
  const auto out = sample_path_endpoint(sys, triplet, 1.0, vec1(0.0), cfg);
  for (double h : {0.5, 1.0}) {
    const auto expected = ou_charfn(sys, triplet, 1.0, vec1(0.0), vec1(h));
    // dropping the small jumps loses a little mass spread; widen the band
    CHECK(std::abs(empirical_cf_1d(out, h) - expected) < cf_band(cfg.sample_count) + 0.01);
  }
}

TEST_CASE("endpoint sampling is deterministic and thread-count independent") {
  const OUSystem sys = scalar_ou(0.7);
  Matrix q(1, 1);
  q << 0.3;
  const LevyTriplet triplet(q, vec1(0.1), LevyMeasureSpec::isotropic_stable(1.2, 1, 0.4));
  SimConfig cfg;
  cfg.sample_count = 500;
  cfg.step_count = 32;
  cfg.seed = 777;
  const auto a = sample_path_endpoint(sys, triplet, 0.8, vec1(0.2), cfg, 1);
  const auto b = sample_path_endpoint(sys, triplet, 0.8, vec1(0.2), cfg, 4);
  const auto c = sample_path_endpoint(sys, triplet, 0.8, vec1(0.2), cfg, 3);
  CHECK((a.values - b.values).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.values - c.values).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("refinement consistency: halving the step leaves the law unchanged") {
  const OUSystem sys = scalar_ou(1.0);
  Matrix q(1, 1);
  q << 1.0;
  const LevyTriplet triplet(q, vec1(0.5), std::nullopt);
  SimConfig coarse;
  coarse.sample_count = 40000;
  coarse.step_count = 64;
  coarse.seed = 4242;
  SimConfig fine = coarse;
  fine.step_count = 128;
  fine.seed = 4243;
  const auto a = sample_path_endpoint(sys, triplet, 1.0, vec1(0.0), coarse);
  const auto b = sample_path_endpoint(sys, triplet, 1.0, vec1(0.0), fine);
  for (double h : {0.5, 1.5}) {
    CHECK(std::abs(empirical_cf_1d(a, h) - empirical_cf_1d(b, h)) <
          std::sqrt(2.0) * cf_band(coarse.sample_count));
  }
}

TEST_CASE("compound convolution zero atom matches e^{-c_N t}") {
  // stable alpha = 1, density scale 1, shell [0.1, 1]: c_N = 18 is too large
  // for a clean zero-atom check, so use [0.5, 1] where c_N = 2
  const auto nu = LevyMeasureSpec::isotropic_stable_from_density(1.0, 1, 1.0);
  const auto tm = truncate_measure(nu, 0.5, 1.0);
  REQUIRE(tm.mass == doctest::Approx(2.0).epsilon(1e-12));
  SimConfig cfg;
  cfg.sample_count = 100000;
  cfg.seed = 31;
  const auto result = sample_compound_convolution(scalar_ou(1.0), tm, 1.0, cfg);
  const double p = std::exp(-2.0);
  const double sigma = std::sqrt(p * (1.0 - p) / cfg.sample_count);
  CHECK(result.expected_zero_atom == doctest::Approx(p).epsilon(1e-12));
  CHECK(std::abs(result.zero_atom_freq - p) < 3.0 * sigma);
}

TEST_CASE("compound convolution with A = 0 has the compound-poisson mean") {
  const auto cp = LevyMeasureSpec::compound_poisson_box(
      1, [](const Vector& y) { return y[0] >= 1.0 && y[0] <= 2.0 ? 1.0 : 0.0; }, 1.0, vec1(1.0),
      vec1(2.0), 1.0);
  const auto tm = truncate_measure(cp, 1.0, 2.0);
  const OUSystem sys(Matrix::Zero(1, 1), Matrix::Identity(1, 1));
  SimConfig cfg;
  cfg.sample_count = 100000;
  cfg.seed = 77;
  const double t = 1.0;
  const auto result = sample_compound_convolution(sys, tm, t, cfg);
  // mean = t * c_N * mean(nu_N / c_N) = 1 * 1 * 1.5; variance of one sample is
  // t c_N E[U^2] = second moment of U ~ Uniform[1,2]: (2^3-1)/3 = 7/3
  const double mean = result.sample.values.row(0).mean();
  const double band = 3.0 * std::sqrt(7.0 / 3.0 / cfg.sample_count);
  CHECK(std::abs(mean - 1.5) < band);
}

TEST_CASE("compound convolution at vanishing t is the zero atom") {
  const auto nu = LevyMeasureSpec::isotropic_stable_from_density(1.0, 1, 1.0);
  const auto tm = truncate_measure(nu, 0.5, 1.0);
  SimConfig cfg;
  cfg.sample_count = 2000;
  cfg.seed = 5;
  const auto result = sample_compound_convolution(scalar_ou(1.0), tm, 1e-9, cfg);
  CHECK(result.zero_atom_freq == 1.0);
}

TEST_CASE("kolmogorov example with pure drift is exact calculus") {
  const LevyTriplet triplet = LevyTriplet::drift_only(vec1(0.8));
  SimConfig cfg;
  cfg.sample_count = 2;
  cfg.step_count = 64;
  const double t = 1.5;
  const Vector x0 = vec2(0.3, -0.4);
  const auto out = kolmogorov_example(x0, t, triplet, cfg);
  // X^1 = x0^1 + a t; X^2 = x0^2 + x0^1 t + a t^2 / 2
  CHECK(out.values(0, 0) == doctest::Approx(0.3 + 0.8 * t).epsilon(1e-12));
  CHECK(out.values(1, 0) ==
        doctest::Approx(-0.4 + 0.3 * t + 0.8 * t * t / 2.0).epsilon(1e-12));
}

TEST_CASE("kolmogorov example with wiener noise has the known covariance") {
  const LevyTriplet triplet = LevyTriplet::gaussian(Matrix::Identity(1, 1));
  SimConfig cfg;
  cfg.sample_count = 100000;
  cfg.step_count = 512;
  cfg.seed = 313;
  const double t = 1.0;
  const auto out = kolmogorov_example(vec2(0.0, 0.0), t, triplet, cfg);
  const Vector mean = out.values.rowwise().mean();
  Matrix centered = out.values.colwise() - mean;
  const Matrix cov = centered * centered.transpose() / (cfg.sample_count - 1.0);
  // Ito isometry: Cov = [[t, t^2/2], [t^2/2, t^3/3]]
  const double n = cfg.sample_count;
  CHECK(std::abs(cov(0, 0) - t) < 3.0 * t * std::sqrt(2.0 / n));
  CHECK(std::abs(cov(1, 1) - t * t * t / 3.0) < 3.0 * (t * t * t / 3.0) * std::sqrt(2.0 / n));
  CHECK(std::abs(cov(0, 1) - t * t / 2.0) < 3.0 * t * t * std::sqrt(2.0 / n));
}

TEST_CASE("kolmogorov example agrees in law with the equivalent system") {
  const LevyTriplet triplet =
      LevyTriplet::pure_jump(LevyMeasureSpec::isotropic_stable(1.5, 1, 1.0));
  SimConfig cfg;
  cfg.sample_count = 30000;
  cfg.step_count = 128;
  cfg.small_jump_cutoff = 0.005;
  cfg.seed = 17;
  const double t = 1.0;
  const Vector x0 = vec2(0.2, 0.1);
  const auto kol = kolmogorov_example(x0, t, triplet, cfg);
  SimConfig cfg2 = cfg;
  cfg2.seed = 18;
  const auto sys = kolmogorov_system();
  const auto direct = sample_path_endpoint(sys, triplet, t, x0, cfg2);
  const std::vector<Vector> freqs{vec2(0.5, 0.0), vec2(0.0, 0.7), vec2(0.4, -0.6),
                                  vec2(1.0, 1.0)};
  for (const auto& h : freqs) {
    std::complex<double> cf1{}, cf2{};
    for (int i = 0; i < cfg.sample_count; ++i) {
      cf1 += std::polar(1.0, h.dot(kol.values.col(i)));
      cf2 += std::polar(1.0, h.dot(direct.values.col(i)));
    }
    cf1 /= static_cast<double>(cfg.sample_count);
    cf2 /= static_cast<double>(cfg.sample_count);
    CHECK(std::abs(cf1 - cf2) < std::sqrt(2.0) * cf_band(cfg.sample_count));
  }
}

TEST_CASE("compound part and substituted residual are uncorrelated") {
  // mirrors the independence of (Z^N) and (Z - Z^N): the two parts come from
  // disjoint streams, so their empirical correlation must vanish
  const auto nu = LevyMeasureSpec::isotropic_stable(1.5, 1, 1.0);
  const auto tm = truncate_measure(nu, 0.5, std::numeric_limits<double>::infinity());
  const OUSystem sys = scalar_ou(1.0);
  SimConfig cfg;
  cfg.sample_count = 20000;
  cfg.seed = 1001;
  const auto big = sample_compound_convolution(sys, tm, 1.0, cfg);
  Matrix q_small = small_ball_second_moment(nu, 0.5);
  const LevyTriplet residual(q_small, vec1(0.0), std::nullopt);
  SimConfig cfg2 = cfg;
  cfg2.seed = 2002;
  cfg2.step_count = 64;
  const auto small = sample_path_endpoint(sys, residual, 1.0, vec1(0.0), cfg2);
  const double n = cfg.sample_count;
  const double mean_big = big.sample.values.row(0).mean();
  const double mean_small = small.values.row(0).mean();
  double cov = 0.0, var_b = 0.0, var_s = 0.0;
  for (int i = 0; i < cfg.sample_count; ++i) {
    const double db = big.sample.values(0, i) - mean_big;
    const double ds = small.values(0, i) - mean_small;
    cov += db * ds;
    var_b += db * db;
    var_s += ds * ds;
  }
  const double corr = cov / std::sqrt(var_b * var_s);
  CHECK(std::abs(corr) < 3.0 / std::sqrt(n));
}

TEST_CASE("mc_estimate") {
  const OUSystem sys(Matrix::Zero(1, 1), Matrix::Identity(1, 1));
  const LevyTriplet triplet = LevyTriplet::gaussian(Matrix::Identity(1, 1));
  SimConfig cfg;
  cfg.sample_count = 20000;
  cfg.step_count = 16;
  cfg.seed = 2024;
  const auto out = sample_path_endpoint(sys, triplet, 1.0, vec1(0.0), cfg);
  SUBCASE("constants have zero standard error") {
    const auto est = mc_estimate(out, [](const Vector&) { return 3.25; });
    CHECK(est.mean == 3.25);
    CHECK(est.std_error == 0.0);
  }
  SUBCASE("cos<h,z> estimates the real part of the gaussian cf") {
    const double h = 1.2;
    const auto est = mc_estimate(out, [&](const Vector& z) { return std::cos(h * z[0]); });
    const double expected = std::exp(-0.5 * h * h);
    CHECK(std::abs(est.mean - expected) < 3.0 * est.std_error);
  }
  SUBCASE("standard error contracts like 1/sqrt(n)") {
    SimConfig big = cfg;
    big.sample_count = 16 * cfg.sample_count;
    const auto out16 = sample_path_endpoint(sys, triplet, 1.0, vec1(0.0), big);
    const auto f = [](const Vector& z) { return z[0] * z[0]; };
    const double r = mc_estimate(out, f).std_error / mc_estimate(out16, f).std_error;
    CHECK(r > 3.0);
    CHECK(r < 5.0);
  }
}
