#include "oudens/quadrature.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

#include "oudens/errors.hpp"
#include "oudens/rng.hpp"

namespace oudens {

namespace {

GaussLegendre compute_rule(int order) {
  GaussLegendre rule;
  rule.nodes.resize(order);
  rule.weights.resize(order);
  const int half = (order + 1) / 2;
  for (int i = 0; i < half; ++i) {
    // Newton iteration from the Chebyshev-based initial guess.
    double x = std::cos(std::numbers::pi * (i + 0.75) / (order + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= order; ++k) {
        const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = order * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) {
        // one polishing step after convergence
        p0 = 1.0;
        p1 = x;
        for (int k = 2; k <= order; ++k) {
          const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
          p0 = p1;
          p1 = p2;
        }
        dp = order * (x * p1 - p0) / (x * x - 1.0);
        break;
      }
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.weights[i] = w;
    rule.nodes[order - 1 - i] = x;
    rule.weights[order - 1 - i] = w;
  }
  if (order % 2 == 1) rule.nodes[order / 2] = 0.0;
  return rule;
}

}  // namespace

const GaussLegendre& gauss_legendre(int order) {
  if (order < 1) throw ParameterError("gauss_legendre: order must be >= 1");
  static std::mutex mtx;
  static std::map<int, std::unique_ptr<GaussLegendre>> cache;
  std::lock_guard<std::mutex> lock(mtx);
  auto it = cache.find(order);
  if (it == cache.end()) {
    it = cache.emplace(order, std::make_unique<GaussLegendre>(compute_rule(order))).first;
  }
  return *it->second;
}

AdaptiveResult integrate_adaptive(const std::function<std::complex<double>(double)>& f,
                                  double a, double b, int initial_panels, int order,
                                  double rel_tol, int max_refinements) {
  int panels = std::max(1, initial_panels);
  std::complex<double> prev = integrate(f, a, b, panels, order);
  double change = std::abs(prev);
  for (int r = 0; r < max_refinements; ++r) {
    panels *= 2;
    const std::complex<double> cur = integrate(f, a, b, panels, order);
    change = std::abs(cur - prev);
    prev = cur;
    // relative for |value| >= 1, absolute below (values near 0 are common)
    if (change <= rel_tol * std::max(std::abs(cur), 1.0)) {
      return {cur, true, change / std::max(std::abs(cur), 1e-300), panels};
    }
  }
  return {prev, false, change / std::max(std::abs(prev), 1e-300), panels};
}

void tensor_box_foreach(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi, int panels,
                        int order,
                        const std::function<void(const Eigen::VectorXd&, double)>& visit) {
  const int dim = static_cast<int>(lo.size());
  if (dim < 1 || hi.size() != dim) throw DimensionError("tensor_box_foreach: box dimensions");
  const GaussLegendre& rule = gauss_legendre(order);
  std::vector<std::vector<double>> xs(dim), ws(dim);
  for (int a = 0; a < dim; ++a) {
    const double width = (hi[a] - lo[a]) / panels;
    xs[a].reserve(static_cast<std::size_t>(panels) * order);
    ws[a].reserve(static_cast<std::size_t>(panels) * order);
    for (int p = 0; p < panels; ++p) {
      const double mid = lo[a] + (p + 0.5) * width;
      const double half = 0.5 * width;
      for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        xs[a].push_back(mid + half * rule.nodes[i]);
        ws[a].push_back(half * rule.weights[i]);
      }
    }
  }
  const std::size_t per_axis = xs[0].size();
  std::vector<std::size_t> idx(dim, 0);
  Eigen::VectorXd point(dim);
  while (true) {
    double w = 1.0;
    for (int a = 0; a < dim; ++a) {
      point[a] = xs[a][idx[a]];
      w *= ws[a][idx[a]];
    }
    visit(point, w);
    int axis = 0;
    while (axis < dim) {
      if (++idx[axis] < per_axis) break;
      idx[axis] = 0;
      ++axis;
    }
    if (axis == dim) break;
  }
}

std::vector<Eigen::VectorXd> sphere_directions(int dim, int count, std::uint64_t seed) {
  if (dim < 1) throw ParameterError("sphere_directions: dim must be >= 1");
  if (count < 1) throw ParameterError("sphere_directions: count must be >= 1");
  std::vector<Eigen::VectorXd> dirs;
  dirs.reserve(count);
  RngStream rng(seed, 0xd1cull);
  if (dim == 1) {
    for (int i = 0; i < count; ++i) {
      Eigen::VectorXd v(1);
      v << (i % 2 == 0 ? 1.0 : -1.0);
      dirs.push_back(v);
    }
  } else if (dim == 2) {
    const double offset = rng.uniform01();
    for (int i = 0; i < count; ++i) {
      const double theta = 2.0 * std::numbers::pi * (i + offset) / count;
      Eigen::VectorXd v(2);
      v << std::cos(theta), std::sin(theta);
      dirs.push_back(v);
    }
  } else if (dim == 3) {
    // Fibonacci spiral with a seeded azimuthal twist.
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    const double twist = 2.0 * std::numbers::pi * rng.uniform01();
    for (int i = 0; i < count; ++i) {
      const double z = count == 1 ? 0.0 : 1.0 - 2.0 * (i + 0.5) / count;
      const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
      const double phi = golden * i + twist;
      Eigen::VectorXd v(3);
      v << r * std::cos(phi), r * std::sin(phi), z;
      dirs.push_back(v);
    }
  } else {
    for (int i = 0; i < count; ++i) {
      Eigen::VectorXd v(dim);
      double norm2 = 0.0;
      do {
        for (int k = 0; k < dim; ++k) v[k] = rng.normal();
        norm2 = v.squaredNorm();
      } while (norm2 < 1e-12);
      dirs.push_back(v / std::sqrt(norm2));
    }
  }
  return dirs;
}

}  // namespace oudens
