#pragma once

#include <Eigen/Dense>

#include "taulasso/rho.hpp"
#include "taulasso/types.hpp"

namespace taulasso {

struct ScaleEstimate {
  double s = 0.0;
  double tau = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// M-scale of a residual vector: the root of (1/n) sum rho0(r_i / s) = delta.
/// Returns s = 0 when the zero-residual fraction reaches 1 - delta (the
/// equation has no positive root past that boundary). Fixed-point iteration
/// from median(|r|)/0.6745, bisection fallback. s_hint, when positive, is
/// used as the starting point (warm restarts inside IRWLS loops).
ScaleEstimate m_scale(const VectorXd& r, const RhoFamily& rho0, double delta,
                      double s_hint = 0.0);

/// tau-scale: s = m_scale(r), tau^2 = s^2 * mean rho1(r_i / s).
ScaleEstimate tau_scale(const VectorXd& r, const RhoFamily& rho0, const RhoFamily& rho1,
                        double delta, double s_hint = 0.0);

/// tau^2 for a given (externally fixed) scale s; 0 when s = 0.
double tau_squared_given_scale(const VectorXd& r, double s, const RhoFamily& rho1);

/// Weight linking the tau objective to a weighted M-estimating equation:
///   W = sum_i [2 rho1(t_i) - psi1(t_i) t_i] / sum_i [psi0(t_i) t_i],
/// t_i = r_i / s. Nonnegative whenever the denominator is positive. Throws
/// DegenerateWeightError when the denominator vanishes (all residuals in
/// psi0's flat region); callers fall back to a psi1-only step.
double combined_psi_weight(const VectorXd& r, double s, const RhoFamily& rho0,
                           const RhoFamily& rho1);

}  // namespace taulasso
