#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "taulasso/rho.hpp"
#include "taulasso/scale.hpp"
#include "taulasso/types.hpp"

namespace taulasso {

struct SolverOptions {
  int starts = 5;             // supplied/default init plus elemental restarts
  int max_outer = 500;        // IRWLS iterations per start
  double objective_tol = 1e-8;  // relative objective change
  double cd_tol = 1e-10;      // coordinate-descent coefficient tolerance
  int max_cd_sweeps = 1000;
  std::uint64_t seed = 1;     // elemental subsample draws
  double min_step = 1e-4;     // smallest step-halving factor
  // Elemental candidates are screened with a couple of cheap descent steps
  // and only the best `starts - 1` run to convergence; a large pool keeps a
  // clean subsample likely even near the breakdown point.
  int candidate_pool = 0;  // 0 means 8 * starts
  int warmup_iters = 2;
};

struct FitResult {
  VectorXd beta;
  double s = 0.0;
  double tau = 0.0;
  double objective = 0.0;
  double lambda = 0.0;
  std::vector<int> active_set;
  std::vector<double> trace;  // accepted objective values, non-increasing
  bool converged = false;
  bool exact_fit = false;     // s hit zero (interpolation degeneracy)
  double stationarity_gap = 0.0;
};

/// Coefficient-wise penalty weights w_j = 1 / max(epsilon_floor, |pilot_j|)^gamma.
struct AdaptiveWeights {
  VectorXd w;
  double gamma = 1.0;
  double epsilon_floor = 0.0;

  /// Zero pilot entries with epsilon_floor = 0 produce w_j = +inf, which the
  /// adaptive fit treats as "drop this predictor".
  static AdaptiveWeights from_pilot(const VectorXd& pilot, double gamma, double epsilon_floor);
};

/// Minimizes tau_n^2(y - X beta) + lambda * ||beta||_1 by multi-start IRWLS
/// with monotone line search. The best local minimizer across starts wins
/// (ties break toward the lower start index).
FitResult fit_tau_lasso(const Dataset& data, double lambda, const TuningPair& tuning,
                        const SolverOptions& opts = {},
                        const VectorXd* init = nullptr);

/// Adaptive fit via the column-rescaling reduction: x_j -> x_j / w_j, plain
/// fit, then beta_j -> beta_j / w_j. Predictors whose pilot coefficient is
/// exactly zero (with epsilon_floor = 0) are dropped and fixed at zero.
/// init, when given, is in original coordinates.
FitResult fit_adaptive_tau_lasso(const Dataset& data, double lambda, const TuningPair& tuning,
                                 const VectorXd& pilot, double gamma, double epsilon_floor,
                                 const SolverOptions& opts = {},
                                 const VectorXd* init = nullptr);

/// tau_n^2(y - X beta) + lambda * sum w_j |beta_j| (unit weights if absent).
double objective_value(const Dataset& data, const VectorXd& beta, double lambda,
                       const TuningPair& tuning, const VectorXd* penalty_weights = nullptr);

/// Gradient of beta -> tau_n^2(y - X beta):  -(s/n) * X^T psi(r/s), with the
/// combined psi = W psi0 + psi1. Used for stationarity checks and the
/// all-zero penalty threshold.
VectorXd tau_squared_gradient(const Dataset& data, const VectorXd& beta,
                              const TuningPair& tuning);

/// max_j |grad_j| at beta = 0; the smallest lambda whose all-zero solution is
/// stationary.
double lambda_zero_threshold(const Dataset& data, const TuningPair& tuning);

/// Default epsilon floor: 1e-6 times the bisquare scale of y (unit-free).
double default_epsilon_floor(const VectorXd& y);

/// Robust start candidate: rows with extreme coordinatewise robust z-scores
/// are dropped, the rest ridge-fit, followed by two residual-trimming
/// concentration steps. Both solvers always include it in their multi-start.
VectorXd leverage_screened_start(const Dataset& data);

}  // namespace taulasso
