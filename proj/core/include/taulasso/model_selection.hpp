#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "taulasso/rho.hpp"
#include "taulasso/types.hpp"

namespace taulasso {

struct CvResult {
  std::vector<double> lambda_grid;  // descending
  std::vector<double> cv_scores;    // tau-scale of pooled out-of-fold residuals
  double best_lambda = 0.0;
  std::vector<int> fold_assignments;
  std::uint64_t seed = 0;
  std::vector<std::string> warnings;  // per-fold estimator failures
};

/// Largest penalty of interest: max_j |grad_j tau^2| at beta = 0.
double lambda_max(const Dataset& data, const TuningPair& tuning);

/// Log-spaced grid from lambda_max down to ratio * lambda_max.
std::vector<double> make_lambda_grid(const Dataset& data, const TuningPair& tuning,
                                     int n_lambda = 30, double ratio = 1e-3);

/// Fits on a training split at one lambda; returns coefficients. Called with
/// lambdas in descending order per fold, so stateful functors can warm-start.
using FitFunction = std::function<VectorXd(const Dataset& train, double lambda)>;

std::vector<int> make_folds(int n, int folds, std::uint64_t seed);

/// K-fold cross-validation scored by the tau-scale of the pooled out-of-fold
/// prediction residuals. A fold failure marks that lambda's score +inf and is
/// recorded as a warning. Ties prefer the larger lambda.
CvResult cross_validate(const Dataset& data, const FitFunction& fit,
                        const std::vector<double>& grid, int folds, std::uint64_t seed,
                        const TuningPair& tuning);

}  // namespace taulasso
