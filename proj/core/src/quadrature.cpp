#include "taulasso/quadrature.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <map>
#include <mutex>

namespace taulasso {

namespace {

GaussHermite compute(int order) {
  // Jacobi matrix of the orthonormal Hermite recurrence: zero diagonal,
  // off-diagonal sqrt(k/2). Eigenvalues are the nodes; weights follow from
  // the first eigenvector components with mu0 = integral of exp(-x^2) = sqrt(pi).
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(order, order);
  for (int k = 1; k < order; ++k) {
    double b = std::sqrt(k / 2.0);
    J(k, k - 1) = b;
    J(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  const double sqrt_pi = 1.7724538509055160273;
  GaussHermite gh;
  gh.nodes.resize(order);
  gh.weights.resize(order);
  for (int i = 0; i < order; ++i) {
    gh.nodes[i] = es.eigenvalues()(i);
    double v0 = es.eigenvectors()(0, i);
    gh.weights[i] = sqrt_pi * v0 * v0;
  }
  return gh;
}

}  // namespace

const GaussHermite& gauss_hermite(int order) {
  static std::map<int, GaussHermite> cache;
  static std::mutex mutex;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(order);
  if (it == cache.end()) it = cache.emplace(order, compute(order)).first;
  return it->second;
}

}  // namespace taulasso
