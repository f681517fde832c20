#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>

#include "taulasso/types.hpp"

namespace taulasso {

enum class ErrorLaw { Normal, StudentT3, StudentT1 };

std::string to_string(ErrorLaw law);
ErrorLaw error_law_from_string(const std::string& name);

/// How a training sample gets corrupted. Either the random outlier /
/// high-leverage plan (fractions of rows replaced by draws) or the
/// fixed-pattern plan used for breakdown curves (y_i = 5 y*, x_i = [5, 0...]).
struct ContaminationPlan {
  /// Row overlap between response outliers and leverage points. Coincident
  /// corrupts the same rows in y and X (row replacement); the other modes
  /// draw the index sets separately.
  enum class Overlap { Coincident, Disjoint, Independent };

  double response_fraction = 0.10;  // y entries replaced by N(response_mean, response_sd^2)
  double response_mean = 100.0;
  double response_sd = 1.0;
  double leverage_fraction = 0.10;  // X rows replaced by N(leverage_mean * 1, I)
  double leverage_mean = 30.0;
  Overlap overlap = Overlap::Coincident;
  std::optional<double> ystar;  // fixed-pattern plan when set

  void validate() const {
    if (response_fraction < 0.0 || response_fraction >= 0.5 || leverage_fraction < 0.0 ||
        leverage_fraction >= 0.5)
      throw InvalidParameterError("contamination: fractions must be in [0, 0.5)");
  }
};

/// Generative description of one simulation setting.
struct ScenarioSpec {
  std::string name;
  int n = 0;
  int p = 0;
  VectorXd beta0;
  MatrixXd covariance;
  std::optional<double> snr_db;  // unset for Student-t errors
  ErrorLaw error_law = ErrorLaw::Normal;
  std::optional<ContaminationPlan> contamination;

  void validate() const;
  int k0() const {
    int k = 0;
    for (Eigen::Index j = 0; j < beta0.size(); ++j)
      if (beta0(j) != 0.0) ++k;
    return k;
  }
};

/// Toeplitz covariance rho^|i-j|.
MatrixXd toeplitz_covariance(int p, double rho);

/// The five standard settings. index in 1..5.
ScenarioSpec make_scenario(int index, ErrorLaw law, bool contaminated);

/// High-leverage rows held fixed across the trials of one experiment.
struct LeverageOverride {
  std::vector<int> rows;
  MatrixXd values;  // one row per contaminated observation
};

LeverageOverride draw_leverage_override(const ScenarioSpec& spec, std::uint64_t seed);

/// Draws (train, test) of n observations each; contamination (if any) is
/// applied to the training sample only. Deterministic per seed.
std::pair<Dataset, Dataset> generate(const ScenarioSpec& spec, std::uint64_t seed,
                                     const LeverageOverride* fixed_leverage = nullptr);

/// Prediction and support-recovery metrics against the truth.
struct MetricsRecord {
  double rmse = 0.0;  // normal-error settings
  double mad = 0.0;   // heavy-tailed settings
  double fnr = 0.0;
  double fpr = 0.0;
  double cer = 0.0;
};

/// beta_hat/intercept are on the original data scale. RMSE/MAD are computed
/// from test prediction residuals; FNR/FPR/CER compare supports.
MetricsRecord score(const VectorXd& beta_hat, double intercept, const VectorXd& beta0,
                    const Dataset& test);

}  // namespace taulasso
