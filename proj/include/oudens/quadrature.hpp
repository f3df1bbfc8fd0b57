#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <functional>
#include <vector>

namespace oudens {

// Gauss-Legendre rule on [-1, 1]. Rules are computed once per order and cached.
struct GaussLegendre {
  std::vector<double> nodes;
  std::vector<double> weights;
};

const GaussLegendre& gauss_legendre(int order);

// Composite Gauss-Legendre over [a, b] with equal panels.
template <typename F>
auto integrate(const F& f, double a, double b, int panels, int order)
    -> decltype(f(0.0)) {
  const GaussLegendre& rule = gauss_legendre(order);
  using R = decltype(f(0.0));
  R acc{};
  const double width = (b - a) / panels;
  for (int p = 0; p < panels; ++p) {
    const double lo = a + p * width;
    const double mid = lo + 0.5 * width;
    const double half = 0.5 * width;
    R panel_acc{};
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      panel_acc += rule.weights[i] * f(mid + half * rule.nodes[i]);
    }
    acc += half * panel_acc;
  }
  return acc;
}

// Composite rule over explicit breakpoints (panels within each segment).
// Used when the integrand has known kinks (e.g. the unit-ball indicator).
template <typename F>
auto integrate_segmented(const F& f, const std::vector<double>& breaks,
                         int panels_per_segment, int order) -> decltype(f(0.0)) {
  using R = decltype(f(0.0));
  R acc{};
  for (std::size_t s = 0; s + 1 < breaks.size(); ++s) {
    if (breaks[s + 1] <= breaks[s]) continue;
    acc += integrate(f, breaks[s], breaks[s + 1], panels_per_segment, order);
  }
  return acc;
}

struct AdaptiveResult {
  std::complex<double> value;
  bool converged;
  double last_rel_change;
  int panels_used;
};

// Doubles the panel count until the relative change drops below rel_tol or
// the refinement budget runs out.
AdaptiveResult integrate_adaptive(const std::function<std::complex<double>(double)>& f,
                                  double a, double b, int initial_panels, int order,
                                  double rel_tol, int max_refinements);

// Visits tensorized composite Gauss-Legendre points over an axis box,
// calling visit(point, weight) for each node.
void tensor_box_foreach(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi, int panels,
                        int order,
                        const std::function<void(const Eigen::VectorXd&, double)>& visit);

// Deterministic unit directions: the seed fixes the orientation, the points
// are low-discrepancy for dim <= 3 and seeded-uniform above.
std::vector<Eigen::VectorXd> sphere_directions(int dim, int count, std::uint64_t seed);

}  // namespace oudens
