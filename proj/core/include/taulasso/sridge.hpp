#pragma once

#include <cstdint>
#include <vector>

#include "taulasso/rho.hpp"
#include "taulasso/solver.hpp"
#include "taulasso/types.hpp"

namespace taulasso {

/// Ridge-penalized S-estimate: generally dense, used as the default pilot for
/// adaptive penalty weights.
struct PilotResult {
  VectorXd beta;
  double s = 0.0;
  double lambda_ridge = 0.0;
  std::vector<double> trace;
  bool converged = false;
};

/// Minimizes s_n^2(y - X beta) + lambda_ridge * ||beta||_2^2 by IRWLS with a
/// closed-form weighted ridge solve per iteration and monotone line search.
PilotResult fit_s_ridge(const Dataset& data, double lambda_ridge, const TuningPair& tuning,
                        const SolverOptions& opts = {});

/// Picks the ridge penalty minimizing the tau-scale of pooled out-of-fold
/// prediction residuals (same criterion as cross_validate).
double select_pilot_lambda(const Dataset& data, const std::vector<double>& grid, int folds,
                           const TuningPair& tuning, std::uint64_t seed);

/// Log-spaced default grid for the ridge penalty, scaled by ||X||_F^2 / n.
std::vector<double> default_ridge_grid(const Dataset& data, int n_lambda = 20);

}  // namespace taulasso
