#include "taulasso/scale.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace taulasso {

namespace {

void check_residuals(const VectorXd& r) {
  if (r.size() == 0) throw InvalidInputError("scale: empty residual vector");
  if (!r.allFinite()) throw InvalidInputError("scale: non-finite residual");
}

double abs_median(const VectorXd& r) {
  std::vector<double> a(r.size());
  for (Eigen::Index i = 0; i < r.size(); ++i) a[static_cast<std::size_t>(i)] = std::abs(r(i));
  auto mid = a.begin() + a.size() / 2;
  std::nth_element(a.begin(), mid, a.end());
  double hi = *mid;
  if (a.size() % 2 == 1) return hi;
  double lo = *std::max_element(a.begin(), mid);
  return 0.5 * (lo + hi);
}

}  // namespace

ScaleEstimate m_scale(const VectorXd& r, const RhoFamily& rho0, double delta,
                      double s_hint) {
  if (!(delta > 0.0 && delta <= 0.5))
    throw InvalidParameterError("m_scale: delta must be in (0, 0.5]");
  check_residuals(r);

  const Eigen::Index n = r.size();
  const double max_abs = r.cwiseAbs().maxCoeff();
  ScaleEstimate est;

  Eigen::Index zeros = 0;
  for (Eigen::Index i = 0; i < n; ++i)
    if (r(i) == 0.0) ++zeros;
  // No positive root once the zero fraction reaches 1 - delta; the inf
  // convention of the population definition gives 0 at the boundary.
  if (static_cast<double>(zeros) >= (1.0 - delta) * static_cast<double>(n) || max_abs == 0.0) {
    est.converged = true;
    return est;
  }

  const ArrayXd abs_r = r.array().abs();
  const double t_delta = rho0.rho_inverse(delta);
  const double s_upper = max_abs / t_delta;  // mean rho at s_upper is <= delta

  double s = s_hint > 0.0 ? s_hint : abs_median(r) / 0.6745;
  if (s <= 0.0) {
    // median is zero but enough residuals are nonzero; start from the mean
    // absolute deviation instead.
    s = abs_r.mean() / 0.6745;
  }
  s = std::min(std::max(s, 1e-12 * max_abs), s_upper);

  const double tol = 1e-9;
  const int max_iter = 200;
  double mean = rho0.mean_rho(r.array() / s);
  for (est.iterations = 0; est.iterations < max_iter; ++est.iterations) {
    if (std::abs(mean - delta) < tol) {
      est.converged = true;
      break;
    }
    double s_next = s * std::sqrt(mean / delta);
    s_next = std::min(std::max(s_next, 1e-12 * max_abs), s_upper);
    if (s_next == s) break;  // stalled at a bound
    s = s_next;
    mean = rho0.mean_rho(r.array() / s);
  }

  if (!est.converged) {
    // Bisection: mean rho is nonincreasing in s, bracket [lo, hi].
    double lo = 1e-12 * max_abs, hi = s_upper;
    for (int it = 0; it < 200; ++it) {
      double mid = 0.5 * (lo + hi);
      double m = rho0.mean_rho(r.array() / mid);
      if (std::abs(m - delta) < tol) {
        s = mid;
        est.converged = true;
        break;
      }
      if (m > delta)
        lo = mid;
      else
        hi = mid;
      if (hi - lo <= 1e-14 * s_upper) {
        s = 0.5 * (lo + hi);
        est.converged = std::abs(rho0.mean_rho(r.array() / s) - delta) < 1e-6;
        break;
      }
      ++est.iterations;
    }
  }

  est.s = s;
  return est;
}

double tau_squared_given_scale(const VectorXd& r, double s, const RhoFamily& rho1) {
  check_residuals(r);
  if (s == 0.0) return 0.0;
  return s * s * rho1.mean_rho(r.array() / s);
}

ScaleEstimate tau_scale(const VectorXd& r, const RhoFamily& rho0, const RhoFamily& rho1,
                        double delta, double s_hint) {
  ScaleEstimate est = m_scale(r, rho0, delta, s_hint);
  est.tau = est.s == 0.0 ? 0.0 : std::sqrt(tau_squared_given_scale(r, est.s, rho1));
  return est;
}

double combined_psi_weight(const VectorXd& r, double s, const RhoFamily& rho0,
                           const RhoFamily& rho1) {
  check_residuals(r);
  if (!(s > 0.0)) throw InvalidParameterError("combined_psi_weight: s must be > 0");

  double num = 0.0, den = 0.0;
  for (Eigen::Index i = 0; i < r.size(); ++i) {
    double t = r(i) / s;
    num += bisquare_saturation_term(t, rho1.c);
    den += rho0.psi(t) * t;
  }
  // psi0(t) t <= 6 * (t/c0)^2 near zero; treat anything at rounding level as flat.
  if (den <= 1e-12 * static_cast<double>(r.size())) {
    throw DegenerateWeightError("combined_psi_weight: psi0 weight mass is zero");
  }
  return num / den;
}

}  // namespace taulasso
