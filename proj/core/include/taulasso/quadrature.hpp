#pragma once

#include <utility>
#include <vector>

namespace taulasso {

/// Gauss-Hermite nodes/weights for weight function exp(-x^2), computed via
/// the Golub-Welsch eigenvalue method. Cached per order.
struct GaussHermite {
  std::vector<double> nodes;
  std::vector<double> weights;
};

const GaussHermite& gauss_hermite(int order);

/// E[f(Z)] for standard normal Z via Gauss-Hermite quadrature.
template <typename F>
double normal_expectation(F&& f, int order = 128) {
  const GaussHermite& gh = gauss_hermite(order);
  constexpr double inv_sqrt_pi = 0.5641895835477562869;
  constexpr double sqrt2 = 1.4142135623730950488;
  double acc = 0.0;
  for (std::size_t i = 0; i < gh.nodes.size(); ++i)
    acc += gh.weights[i] * f(sqrt2 * gh.nodes[i]);
  return acc * inv_sqrt_pi;
}

}  // namespace taulasso
