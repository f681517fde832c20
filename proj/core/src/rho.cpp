#include "taulasso/rho.hpp"

#include <cmath>

#include "taulasso/quadrature.hpp"

namespace taulasso {

namespace {

inline void check_c(double c) {
  if (!(c > 0.0)) throw InvalidParameterError("bisquare: clipping constant must be > 0");
}

}  // namespace

double bisquare_rho(double t, double c) {
  check_c(c);
  double u = (t / c) * (t / c);
  if (u >= 1.0) return 1.0;
  double v = 1.0 - u;
  return 1.0 - v * v * v;
}

double bisquare_psi(double t, double c) {
  check_c(c);
  double u = (t / c) * (t / c);
  if (u >= 1.0) return 0.0;
  double v = 1.0 - u;
  return 6.0 * t / (c * c) * v * v;
}

double bisquare_psi_prime(double t, double c) {
  check_c(c);
  double u = (t / c) * (t / c);
  if (u >= 1.0) return 0.0;
  return 6.0 / (c * c) * (1.0 - u) * (1.0 - 5.0 * u);
}

double bisquare_weight(double t, double c) {
  check_c(c);
  double u = (t / c) * (t / c);
  if (u >= 1.0) return 0.0;
  double v = 1.0 - u;
  return 6.0 / (c * c) * v * v;
}

double bisquare_saturation_term(double t, double c) {
  check_c(c);
  double u = (t / c) * (t / c);
  if (u >= 1.0) return 2.0;
  return u * u * (6.0 - 4.0 * u);
}

double bisquare_rho_inverse(double value, double c) {
  check_c(c);
  if (!(value >= 0.0 && value < 1.0))
    throw InvalidParameterError("bisquare: rho inverse defined on [0, 1)");
  return c * std::sqrt(1.0 - std::cbrt(1.0 - value));
}

double RhoFamily::mean_rho(const Eigen::ArrayXd& t) const {
  Eigen::ArrayXd u = (t / c).square().min(1.0);
  return (1.0 - (1.0 - u).cube()).mean();
}

double normal_rho_expectation(double c) {
  check_c(c);
  return normal_expectation([c](double z) { return bisquare_rho(z, c); }, 256);
}

double calibrate_breakdown(double delta) {
  if (!(delta > 0.0 && delta <= 0.5))
    throw InvalidParameterError("calibrate_breakdown: delta must be in (0, 0.5]");
  // E_Phi[rho(Z; c)] is strictly decreasing in c, so bisection is safe.
  double lo = 0.1, hi = 20.0;
  for (int it = 0; it < 200 && hi - lo > 1e-10; ++it) {
    double mid = 0.5 * (lo + hi);
    if (normal_rho_expectation(mid) > delta)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace taulasso
