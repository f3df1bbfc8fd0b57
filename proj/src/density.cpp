#include "oudens/density.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "oudens/errors.hpp"
#include "oudens/parallel.hpp"
#include "oudens/quadrature.hpp"

namespace oudens {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr std::complex<double> kI{0.0, 1.0};

bool is_power_of_two(int v) { return v > 0 && (v & (v - 1)) == 0; }

// In-place forward radix-2 FFT: X_j = sum_k x_k e^{-2 pi i jk / n}.
void fft_forward(std::vector<std::complex<double>>& a) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double angle = -2.0 * kPi / static_cast<double>(len);
    const std::complex<double> wlen(std::cos(angle), std::sin(angle));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const std::complex<double> u = a[i + k];
        const std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
}

// FFT along each axis of a row-major dim-dimensional cube of side m.
void fft_axes(std::vector<std::complex<double>>& data, int dim, int m) {
  const std::size_t total = data.size();
  std::vector<std::complex<double>> line(m);
  for (int axis = 0; axis < dim; ++axis) {
    // stride of the axis in the row-major layout (first axis slowest)
    std::size_t stride = 1;
    for (int a = axis + 1; a < dim; ++a) stride *= m;
    const std::size_t lines = total / m;
    for (std::size_t l = 0; l < lines; ++l) {
      // base offset of this line: expand l over the remaining axes
      std::size_t base = 0;
      std::size_t rem = l;
      std::size_t run = 1;
      for (int a = dim - 1; a >= 0; --a) {
        if (a == axis) {
          run *= m;
          continue;
        }
        base += (rem % m) * run;
        rem /= m;
        run *= m;
      }
      for (int k = 0; k < m; ++k) line[k] = data[base + k * stride];
      fft_forward(line);
      for (int k = 0; k < m; ++k) data[base + k * stride] = line[k];
    }
  }
}

struct GridCheck {
  int m;
  double dh;
  double dy;
};

GridCheck validated(const GridSpec& spec) {
  spec.validate();
  return {spec.points_per_axis, 2.0 * spec.freq_radius / spec.points_per_axis,
          spec.cell_width()};
}

double envelope_tail_integral(const DecayReport& report, double H, int radial_power) {
  // int_H^inf e^{log_c - a rho^alpha} rho^{radial_power - 1} d rho
  double acc = 0.0;
  double lo = H;
  for (int i = 0; i < 500; ++i) {
    const double hi = lo * 1.5;
    const double piece = integrate(
        [&](double rho) {
          return std::exp(report.fitted_log_c -
                          report.fitted_a_t * std::pow(rho, report.fitted_alpha)) *
                 std::pow(rho, radial_power - 1);
        },
        lo, hi, 4, 32);
    acc += piece;
    if (piece < 1e-18 * std::max(acc, 1e-300)) break;
    lo = hi;
  }
  return acc;
}

DensityGrid invert_impl(const OUSystem& sys, const LevyTriplet& triplet, double t,
                        const GridSpec& spec, const std::vector<int>& beta,
                        const ExponentQuadConfig& cfg, int threads) {
  const auto [m, dh, dy] = validated(spec);
  const int dim = spec.dim;
  if (sys.state_dim() != dim)
    throw DimensionError("invert_density: grid dimension must match the state dimension");
  if (!(t > 0.0)) throw ParameterError("invert_density: t must be > 0");
  const RankResult rank = rank_condition(sys);
  if (!rank.satisfied)
    throw ParameterError("invert_density: controllability rank condition fails (rank " +
                         std::to_string(rank.rank) + " of " + std::to_string(dim) + ")");
  if (beta.size() != static_cast<std::size_t>(dim))
    throw ParameterError("invert_density: beta length must equal dim");
  int beta_total = 0;
  for (int b : beta) {
    if (b < 0) throw ParameterError("invert_density: beta entries must be >= 0");
    beta_total += b;
  }
  if (beta_total > 4) throw ParameterError("invert_density: |beta| <= 4 supported");

  const DecayReport report =
      decay_probe(sys, triplet, t, 2 * dim + 4, std::max(2.0, spec.freq_radius), 32, cfg);
  if (report.non_decaying)
    throw ParameterError(
        "invert_density: characteristic function envelope is non-decaying "
        "(finite Levy measure or missing noise); no smooth density is certified. "
        "fitted alpha=" +
        std::to_string(report.fitted_alpha) + ", rate=" + std::to_string(report.fitted_a_t));

  ExponentQuadrature quad(sys, triplet, t, cfg);

  std::size_t total = 1;
  for (int a = 0; a < dim; ++a) total *= m;

  // per-axis phase premultipliers (-1)^k e^{-i c k dh}
  std::vector<std::vector<std::complex<double>>> pre(dim,
                                                     std::vector<std::complex<double>>(m));
  for (int a = 0; a < dim; ++a) {
    for (int k = 0; k < m; ++k) {
      const double phase = -spec.center[a] * k * dh;
      std::complex<double> q = std::polar(1.0, phase);
      if (k % 2 == 1) q = -q;
      pre[a][k] = q;
    }
  }

  std::vector<std::complex<double>> data(total);
  const double H = spec.freq_radius;
  parallel_for(total, threads, [&](std::size_t begin, std::size_t end) {
    Vector h(dim);
    std::vector<int> idx(dim);
    for (std::size_t flat = begin; flat < end; ++flat) {
      std::size_t rem = flat;
      for (int a = dim - 1; a >= 0; --a) {
        idx[a] = static_cast<int>(rem % m);
        rem /= m;
      }
      std::complex<double> factor(1.0, 0.0);
      for (int a = 0; a < dim; ++a) {
        h[a] = -H + idx[a] * dh;
        factor *= pre[a][idx[a]];
      }
      const std::complex<double> phi = quad.exponent(h);
      std::complex<double> g = std::exp(-phi);
      for (int a = 0; a < dim; ++a) {
        for (int b = 0; b < beta[a]; ++b) g *= -kI * h[a];
      }
      data[flat] = factor * g;
    }
  });

  fft_axes(data, dim, m);

  DensityGrid grid;
  grid.spec = spec;
  grid.t = t;
  grid.beta = beta;
  grid.values.resize(total);
  const double scale = std::pow(dh / (2.0 * kPi), dim);
  // per-axis postmultipliers e^{i H y_j}
  std::vector<std::vector<std::complex<double>>> post(dim,
                                                      std::vector<std::complex<double>>(m));
  for (int a = 0; a < dim; ++a) {
    for (int j = 0; j < m; ++j) {
      const double y = spec.center[a] + (j - m / 2) * dy;
      post[a][j] = std::polar(1.0, H * y);
    }
  }
  double mass = 0.0;
  double sup = 0.0;
  std::vector<int> idx(dim, 0);
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t rem = flat;
    std::complex<double> factor(1.0, 0.0);
    for (int a = dim - 1; a >= 0; --a) {
      const int j = static_cast<int>(rem % m);
      rem /= m;
      factor *= post[a][j];
    }
    const double v = (factor * data[flat]).real() * scale;
    grid.values[flat] = v;
    mass += v;
    sup = std::max(sup, std::abs(v));
  }
  grid.riemann_mass = mass * std::pow(dy, dim);
  grid.sup_norm = sup;
  grid.truncation_error_bound = std::pow(2.0 * kPi, -dim) * sphere_surface(dim) *
                                envelope_tail_integral(report, H, dim + beta_total);
  return grid;
}

}  // namespace

void GridSpec::validate() const {
  if (dim < 1) throw ParameterError("GridSpec: dim must be >= 1");
  if (dim > 3) throw UnsupportedError("GridSpec: full grids support dim <= 3");
  if (points_per_axis < 16 || !is_power_of_two(points_per_axis))
    throw ParameterError("GridSpec: points_per_axis must be a power of two >= 16");
  if (!(freq_radius > 0.0)) throw ParameterError("GridSpec: freq_radius must be > 0");
  if (center.size() != dim) throw DimensionError("GridSpec: center dimension mismatch");
}

double DensityGrid::coord(int axis, int index) const {
  return spec.center[axis] + (index - spec.points_per_axis / 2) * spec.cell_width();
}

std::size_t DensityGrid::flat_index(const std::vector<int>& idx) const {
  std::size_t flat = 0;
  for (int a = 0; a < spec.dim; ++a) flat = flat * spec.points_per_axis + idx[a];
  return flat;
}

DensityGrid invert_density(const OUSystem& sys, const LevyTriplet& triplet, double t,
                           const GridSpec& spec, const ExponentQuadConfig& cfg, int threads) {
  return invert_impl(sys, triplet, t, spec, std::vector<int>(spec.dim, 0), cfg, threads);
}

DensityGrid derivative_grid(const OUSystem& sys, const LevyTriplet& triplet, double t,
                            const GridSpec& spec, const std::vector<int>& beta,
                            const ExponentQuadConfig& cfg, int threads) {
  return invert_impl(sys, triplet, t, spec, beta, cfg, threads);
}

TransitionValue transition_apply(const DensityGrid& grid, const OUSystem& sys, double t,
                                 const Vector& x, const std::function<double(const Vector&)>& f) {
  if (x.size() != sys.state_dim()) throw DimensionError("transition_apply: x dimension");
  const int dim = grid.spec.dim;
  const int m = grid.spec.points_per_axis;
  const double cell = std::pow(grid.spec.cell_width(), dim);
  const Vector mean = mat_exp(sys.A, t) * x;
  Vector point(dim);
  std::vector<int> idx(dim, 0);
  double acc = 0.0;
  for (std::size_t flat = 0; flat < grid.size(); ++flat) {
    std::size_t rem = flat;
    for (int a = dim - 1; a >= 0; --a) {
      idx[a] = static_cast<int>(rem % m);
      rem /= m;
    }
    for (int a = 0; a < dim; ++a) point[a] = mean[a] + grid.coord(a, idx[a]);
    acc += f(point) * grid.values[flat];
  }
  TransitionValue out;
  out.value = acc * cell;
  out.captured_mass = grid.riemann_mass;
  out.coverage_ok = grid.riemann_mass >= 0.999;
  return out;
}

TransitionValue transition_apply(const OUSystem& sys, const LevyTriplet& triplet, double t,
                                 const Vector& x, const std::function<double(const Vector&)>& f,
                                 const GridSpec& spec, const ExponentQuadConfig& cfg,
                                 int threads) {
  const DensityGrid grid = invert_density(sys, triplet, t, spec, cfg, threads);
  return transition_apply(grid, sys, t, x, f);
}

namespace {

// multilinear interpolation of the grid at an arbitrary point; 0 outside
double interp_grid(const DensityGrid& grid, const Vector& y) {
  const int dim = grid.spec.dim;
  const int m = grid.spec.points_per_axis;
  const double dy = grid.spec.cell_width();
  std::vector<int> base(dim);
  std::vector<double> frac(dim);
  for (int a = 0; a < dim; ++a) {
    const double u = (y[a] - grid.spec.center[a]) / dy + m / 2;
    const double fl = std::floor(u);
    base[a] = static_cast<int>(fl);
    frac[a] = u - fl;
    if (base[a] < 0 || base[a] + 1 >= m) return 0.0;
  }
  double acc = 0.0;
  const int corners = 1 << dim;
  std::vector<int> idx(dim);
  for (int c = 0; c < corners; ++c) {
    double w = 1.0;
    for (int a = 0; a < dim; ++a) {
      const int bit = (c >> a) & 1;
      idx[a] = base[a] + bit;
      w *= bit ? frac[a] : 1.0 - frac[a];
    }
    acc += w * grid.values[grid.flat_index(idx)];
  }
  return acc;
}

}  // namespace

ModulusTable strong_feller_probe(const OUSystem& sys, const LevyTriplet& triplet, double t,
                                 const std::function<double(const Vector&)>& f,
                                 const std::vector<Vector>& x_grid,
                                 const std::vector<double>& deltas, const GridSpec& spec,
                                 const ExponentQuadConfig& cfg) {
  if (x_grid.size() < 2) throw ParameterError("strong_feller_probe: need at least two points");
  const DensityGrid grid = invert_density(sys, triplet, t, spec, cfg);
  const Matrix flow = mat_exp(sys.A, t);
  const int dim = spec.dim;
  const int m = spec.points_per_axis;
  const double cellvol = std::pow(spec.cell_width(), dim);

  std::vector<double> ptf(x_grid.size());
  for (std::size_t i = 0; i < x_grid.size(); ++i) {
    ptf[i] = transition_apply(grid, sys, t, x_grid[i], f).value;
  }

  const double tail_allowance = 2.0 * std::max(0.0, 1.0 - grid.riemann_mass);
  ModulusTable table;
  for (double delta : deltas) {
    ModulusRow row{delta, 0.0, 0.0, true};
    for (std::size_t i = 0; i < x_grid.size(); ++i) {
      for (std::size_t j = i + 1; j < x_grid.size(); ++j) {
        const double dist = (x_grid[i] - x_grid[j]).norm();
        if (dist > delta || dist == 0.0) continue;
        row.omega = std::max(row.omega, std::abs(ptf[i] - ptf[j]));
        // L1 distance between the density and its shift by e^{tA}(x_i - x_j)
        const Vector shift = flow * (x_grid[i] - x_grid[j]);
        double l1 = 0.0;
        std::vector<int> idx(dim, 0);
        Vector point(dim);
        for (std::size_t flat = 0; flat < grid.size(); ++flat) {
          std::size_t rem = flat;
          for (int a = dim - 1; a >= 0; --a) {
            idx[a] = static_cast<int>(rem % m);
            rem /= m;
          }
          for (int a = 0; a < dim; ++a) point[a] = grid.coord(a, idx[a]) - shift[a];
          l1 += std::abs(interp_grid(grid, point) - grid.values[flat]);
        }
        row.shift_bound = std::max(row.shift_bound, l1 * cellvol + tail_allowance);
      }
    }
    row.within_bound = row.omega <= 1.05 * row.shift_bound + 2e-3;
    table.all_within = table.all_within && row.within_bound;
    table.rows.push_back(row);
  }
  return table;
}

std::vector<double> pushforward_density(const Matrix& L,
                                        const std::function<double(const Vector&)>& h_density,
                                        const std::vector<Vector>& eval_points,
                                        const PushforwardConfig& cfg) {
  const int q = static_cast<int>(L.rows());
  const int p = static_cast<int>(L.cols());
  if (p < q) throw DimensionError("pushforward_density: need p >= q");
  if (numerical_rank(L) != q)
    throw ParameterError("pushforward_density: L must be onto (numerical rank q)");

  // S has L's rows first, then canonical basis vectors chosen greedily by
  // residual norm against the span of the rows picked so far.
  Matrix S(p, p);
  S.topRows(q) = L;
  std::vector<Vector> ortho;
  for (int i = 0; i < q; ++i) {
    Vector v = L.row(i).transpose();
    for (const auto& u : ortho) v -= u.dot(v) * u;
    const double n = v.norm();
    if (n > 1e-12) ortho.push_back(v / n);
  }
  std::vector<bool> used(p, false);
  for (int slot = 0; slot < p - q; ++slot) {
    int best = -1;
    double best_resid = -1.0;
    Vector best_vec;
    for (int i = 0; i < p; ++i) {
      if (used[i]) continue;
      Vector v = Vector::Zero(p);
      v[i] = 1.0;
      for (const auto& u : ortho) v -= u.dot(v) * u;
      const double n = v.norm();
      if (n > best_resid) {
        best_resid = n;
        best = i;
        best_vec = v;
      }
    }
    if (best < 0 || best_resid < 1e-12)
      throw ConditioningError("pushforward_density: basis completion failed");
    used[best] = true;
    Vector row = Vector::Zero(p);
    row[best] = 1.0;
    S.row(q + slot) = row.transpose();
    ortho.push_back(best_vec / best_resid);
  }

  {
    Eigen::JacobiSVD<Matrix> svd(S);
    const auto& sv = svd.singularValues();
    if (sv(sv.size() - 1) <= 0.0 || sv(0) / sv(sv.size() - 1) > cfg.condition_limit)
      throw ConditioningError("pushforward_density: completed matrix too ill-conditioned");
  }
  if ((S.topRows(q) - L).cwiseAbs().maxCoeff() > 1e-10)
    throw ConditioningError("pushforward_density: projection identity violated");

  const Matrix S_inv = S.inverse();
  const double abs_det = std::abs(S.determinant());
  const int free_dims = p - q;
  if (free_dims > 0 && (cfg.box_lo.size() != free_dims || cfg.box_hi.size() != free_dims))
    throw ParameterError("pushforward_density: integration box must have p - q coordinates");

  std::vector<double> out;
  out.reserve(eval_points.size());
  for (const auto& y : eval_points) {
    if (y.size() != q) throw DimensionError("pushforward_density: eval point dimension");
    if (free_dims == 0) {
      out.push_back(h_density(S_inv * y) / abs_det);
      continue;
    }
    Vector full(p);
    full.head(q) = y;
    double acc = 0.0;
    tensor_box_foreach(cfg.box_lo, cfg.box_hi, cfg.panels, cfg.order,
                       [&](const Vector& z, double w) {
                         Vector probe = full;
                         probe.tail(free_dims) = z;
                         acc += w * h_density(S_inv * probe);
                       });
    out.push_back(acc / abs_det);
  }
  return out;
}

}  // namespace oudens
