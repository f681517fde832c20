#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "taulasso/influence.hpp"
#include "taulasso/scenarios.hpp"
#include "taulasso/solver.hpp"

namespace taulasso {

enum class EstimatorKind { TauLasso, AdaptiveTauLasso, OracleTau };
enum class PilotKind { SRidge, TauLasso };

std::string to_string(EstimatorKind kind);

/// End-to-end fitting configuration: robust standardization, cross-validated
/// penalties, and the solver knobs.
struct PipelineOptions {
  TuningPair tuning = TuningPair::defaults();
  int folds = 5;
  int n_lambda = 30;
  double grid_ratio = 1e-3;
  int ridge_n_lambda = 20;
  int starts = 5;
  int cv_starts = 3;  // multi-start budget at the largest lambda of each fold path
  double gamma = 1.0;
  std::optional<double> epsilon_floor;  // default 1e-6 * bisquare scale of y
  bool standardize_data = true;
  PilotKind pilot_kind = PilotKind::SRidge;
  std::optional<double> fixed_lambda;        // skip CV when given
  std::optional<double> fixed_pilot_lambda;  // skip the pilot's CV when given
};

struct PipelineFit {
  VectorXd beta;  // original data scale
  double intercept = 0.0;
  double lambda = 0.0;        // selected penalty (standardized scale)
  double pilot_lambda = 0.0;  // pilot-stage penalty, if any
  double s = 0.0;
  double tau = 0.0;
  double objective = 0.0;
  std::vector<int> active_set;
  std::size_t trace_length = 0;
  bool converged = false;
};

/// Standardize, select penalties by five-fold CV on the tau-scale, fit, and
/// map back. The oracle estimator requires the true coefficient vector.
PipelineFit fit_pipeline(const Dataset& train, EstimatorKind kind, const PipelineOptions& opts,
                         std::uint64_t seed, const VectorXd* beta0 = nullptr);

/// The S-Ridge path of the pipeline exposed on its own (dense pilot fits).
PipelineFit fit_sridge_pipeline(const Dataset& train, const PipelineOptions& opts,
                                std::uint64_t seed);

/// One table cell: mean/standard-error pairs across trials.
struct MetricStat {
  double mean = 0.0;
  double std_error = 0.0;
};

struct TableCell {
  std::string scenario;
  std::string estimator;
  std::string error_law;
  bool contaminated = false;
  int trials = 0;
  int failures = 0;
  MetricStat rmse, mad, fnr, fpr, cer;
};

struct TableReport {
  std::uint64_t seed = 0;
  int trials = 0;
  std::vector<TableCell> cells;
};

TableReport run_table_experiment(const std::vector<ScenarioSpec>& scenarios,
                                 const std::vector<EstimatorKind>& estimators, int trials,
                                 std::uint64_t seed, const PipelineOptions& opts);

struct BreakdownPoint {
  double ystar = 0.0;
  std::string estimator;
  int trials = 0;
  int failures = 0;
  MetricStat rmse;
};

struct BreakdownReport {
  std::uint64_t seed = 0;
  std::vector<BreakdownPoint> points;
};

/// RMSE versus outlier magnitude y* under the fixed contamination pattern
/// (first tenth of the rows set to y = 5 y*, x = [5, 0, ...]).
BreakdownReport run_breakdown_curve(const std::vector<double>& ystar_grid, int trials,
                                    std::uint64_t seed, const PipelineOptions& opts);

struct BiasPathPoint {
  double lambda = 0.0;
  std::string estimator;
  int coefficient = 0;  // index into the nonzero block
  MetricStat bias;      // mean of (beta_hat_j - beta0_j)
};

struct OvershrinkReport {
  std::uint64_t seed = 0;
  int trials = 0;
  VectorXd beta0;
  std::vector<double> lambda_grid;  // descending, fixed across trials
  std::vector<BiasPathPoint> points;
};

/// Bias paths of the nonzero coefficients over a shared lambda grid,
/// comparing the plain and adaptively weighted estimators.
OvershrinkReport run_overshrinkage(int n_lambda, int trials, std::uint64_t seed,
                                   const PipelineOptions& opts);

struct IfValidationConfig {
  double beta0 = 1.5;
  int sc_n = 1000;              // sample size behind the sensitivity curve
  double lambda_scale = 0.1;    // penalty = lambda_scale / sc_n
  double grid_min = -10.0;
  double grid_max = 10.0;
  double grid_step = 1.0;
  // The sensitivity curve differentiates the estimator at the observed
  // sample, so by default the influence function is evaluated there too:
  // functional values from the fits on the sample, expectations averaged
  // over it. Turning this off switches to fresh model draws of the sizes
  // below.
  bool empirical_plugin = true;
  std::size_t functional_n = 100000;
  std::size_t expectation_draws = 1000000;
  bool compute_sc = true;
  TuningPair tuning = TuningPair::defaults();
};

/// One-dimensional toy study: closed-form influence function versus the
/// standardized sensitivity curve over a square grid of contamination points.
InfluenceReport run_if_validation(const IfValidationConfig& config, std::uint64_t seed);

/// Plot-ready CSV writers (fixed %.12g formatting, deterministic bytes).
void write_table_csv(const TableReport& report, const std::string& path);
void write_breakdown_csv(const BreakdownReport& report, const std::string& path);
void write_overshrink_csv(const OvershrinkReport& report, const std::string& path);

/// JSON summary with config echo, seed, and standard errors.
void write_table_json(const TableReport& report, const std::string& config_echo,
                      const std::string& path);

}  // namespace taulasso
