#pragma once

#include <Eigen/Dense>

#include "taulasso/errors.hpp"

namespace taulasso {

/// Tukey bisquare loss, normalized so rho saturates at 1:
///   rho(t; c) = 1 - (1 - (t/c)^2)^3   for |t| <= c, and 1 beyond.
/// psi = rho', redescending (zero outside [-c, c]).
double bisquare_rho(double t, double c);
double bisquare_psi(double t, double c);
double bisquare_psi_prime(double t, double c);

/// psi(t)/t with its continuous limit 6/c^2 at t = 0.
double bisquare_weight(double t, double c);

/// 2*rho(t) - psi(t)*t. Algebraically equal to u^2*(6 - 4u) with u = (t/c)^2
/// inside the support; evaluating it that way avoids the catastrophic
/// cancellation the direct difference has for small |t|.
double bisquare_saturation_term(double t, double c);

/// Inverse of rho on [0, c]: value in [0, 1) -> t >= 0 with rho(t) = value.
double bisquare_rho_inverse(double value, double c);

/// A tuned rho/psi/psi' triple with clipping constant c.
struct RhoFamily {
  double c;

  explicit RhoFamily(double clipping) : c(clipping) {
    if (!(c > 0.0)) throw InvalidParameterError("rho family: clipping constant must be > 0");
  }

  double rho(double t) const { return bisquare_rho(t, c); }
  double psi(double t) const { return bisquare_psi(t, c); }
  double psi_prime(double t) const { return bisquare_psi_prime(t, c); }
  double weight(double t) const { return bisquare_weight(t, c); }
  double rho_inverse(double value) const { return bisquare_rho_inverse(value, c); }

  /// Vectorized mean of rho over t = r/s.
  double mean_rho(const Eigen::ArrayXd& t) const;
};

/// E_Phi[rho(Z; c)] for a standard normal Z, by fixed-order Gauss-Hermite
/// quadrature (256 nodes; deterministic).
double normal_rho_expectation(double c);

/// Solves E_Phi[rho(Z; c0)] = delta for c0 by bracketing bisection on
/// c in [0.1, 20]; delta must lie in (0, 0.5].
double calibrate_breakdown(double delta);

/// The pair (c0, c1, delta) used throughout: c0 fixes the breakdown point of
/// the M-scale, c1 the normal efficiency of the tau-scale.
struct TuningPair {
  double c0;
  double c1;
  double delta;

  TuningPair(double c0_, double c1_, double delta_) : c0(c0_), c1(c1_), delta(delta_) {
    if (!(delta > 0.0 && delta <= 0.5))
      throw InvalidParameterError("tuning: delta must be in (0, 0.5]");
    if (!(c0 > 0.0 && c1 > 0.0))
      throw InvalidParameterError("tuning: clipping constants must be > 0");
    if (!(c1 > c0))
      throw InvalidParameterError("tuning: c1 must exceed c0");
  }

  /// 25% breakdown point, 95% normal efficiency.
  static TuningPair defaults() { return TuningPair(2.9370, 5.1425, 0.25); }

  RhoFamily rho0() const { return RhoFamily(c0); }
  RhoFamily rho1() const { return RhoFamily(c1); }
};

}  // namespace taulasso
