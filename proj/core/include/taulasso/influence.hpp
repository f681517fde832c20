#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <utility>
#include <vector>

#include "taulasso/rho.hpp"
#include "taulasso/solver.hpp"
#include "taulasso/types.hpp"

namespace taulasso {

/// Asymptotic value of a penalized estimator under the sampling distribution:
/// the residual M-scale s_inf and coefficient vector beta_inf, approximated
/// by a high-n fit since the population functional has no closed form.
struct FunctionalValue {
  double s_inf = 0.0;
  VectorXd beta_inf;
  double lambda = 0.0;

  std::vector<int> active() const {
    std::vector<int> idx;
    for (Eigen::Index j = 0; j < beta_inf.size(); ++j)
      if (beta_inf(j) != 0.0) idx.push_back(static_cast<int>(j));
    return idx;
  }
  int k_s() const { return static_cast<int>(active().size()); }
};

/// Estimates expectations E_H[f(y, x)] either from a generative model (fresh
/// Monte-Carlo draws, deterministic per seed) or an empirical sample.
class ExpectationEngine {
 public:
  /// Fills (y, x); x is preallocated with the right length.
  using Drawer = std::function<void(std::mt19937_64&, double& y, VectorXd& x)>;

  static ExpectationEngine model_based(Drawer draw, int p, std::size_t n_draws,
                                       std::uint64_t seed);
  static ExpectationEngine empirical(Dataset sample);

  struct Estimate {
    double value = 0.0;
    double std_error = 0.0;
  };

  Estimate estimate(const std::function<double(double y, const VectorXd& x)>& f) const;

  /// Single deterministic pass over the sample.
  void for_each(const std::function<void(double y, const VectorXd& x)>& visit) const;

  std::size_t sample_size() const { return n_draws_; }
  int dimension() const { return p_; }

 public:
  ExpectationEngine() = default;  // empty engine; assign from a factory before use

 private:
  Drawer draw_;
  Dataset sample_;
  bool model_ = false;
  int p_ = 0;
  std::size_t n_draws_ = 0;
  std::uint64_t seed_ = 0;
};

/// Everything about the sampling distribution the influence function needs:
/// the expectation matrix over the active block (plus scale), its inverse,
/// and the population combined-psi weight. Independent of the contamination
/// point, so it is computed once and reused across a grid.
struct InfluenceContext {
  FunctionalValue functional;
  TuningPair tuning = TuningPair::defaults();
  std::vector<int> active;
  double wbar = 0.0;
  MatrixXd M;      // (k_s + 1) x (k_s + 1); scale row/column first
  MatrixXd M_inv;
  double condition = 0.0;
};

/// Assembles the expectation matrix for a functional; throws
/// SingularExpectationError (with the condition number) past 1e12.
InfluenceContext make_influence_context(const FunctionalValue& functional,
                                        const ExpectationEngine& engine,
                                        const TuningPair& tuning);

/// Influence function of the l1-penalized tau estimator at z0 = (y0, x0).
/// Returns a (p+1)-vector: scale component first, then coefficients;
/// inactive coordinates are exactly zero.
VectorXd if_tau_lasso(double y0, const VectorXd& x0, const InfluenceContext& ctx);

/// Influence function of the adaptively weighted variant (gamma = 1 pilot
/// weights). pilot_if must be the plain influence function at the same z0.
VectorXd if_adaptive_tau_lasso(double y0, const VectorXd& x0, const InfluenceContext& ctx,
                               const FunctionalValue& pilot, const VectorXd& pilot_if);

/// Estimator handle for sensitivity curves: returns (residual M-scale, beta).
using PointEstimator = std::function<std::pair<double, VectorXd>(const Dataset&)>;

/// Standardized sensitivity curve (n+1) * (theta(Z + z0) - theta(Z)) for
/// theta = (s, beta). The overload with `base` reuses a precomputed theta(Z).
VectorXd sensitivity_curve(const Dataset& data, double y0, const VectorXd& x0,
                           const PointEstimator& estimator);
VectorXd sensitivity_curve(const Dataset& data, double y0, const VectorXd& x0,
                           const PointEstimator& estimator,
                           const std::pair<double, VectorXd>& base);

/// Fits the functional approximation on a fresh model sample.
FunctionalValue estimate_functional_tau_lasso(const ExpectationEngine::Drawer& draw, int p,
                                              std::size_t n, double lambda,
                                              const TuningPair& tuning, std::uint64_t seed);
FunctionalValue estimate_functional_adaptive_tau_lasso(const ExpectationEngine::Drawer& draw,
                                                       int p, std::size_t n,
                                                       double pilot_lambda, double lambda,
                                                       const TuningPair& tuning,
                                                       std::uint64_t seed);

/// IF and SC surfaces over a grid of contamination points.
struct InfluenceReport {
  std::vector<std::pair<double, VectorXd>> grid;  // (y0, x0)
  std::vector<VectorXd> if_values;                // (p+1) each
  std::vector<VectorXd> sc_values;                // (p+1) each; empty if not computed
  double max_abs_deviation = 0.0;
  double nrmsd = 0.0;  // ||IF - SC||_F / ||SC||_F over the grid
};

/// CSV emit: y0, x0..., if_scale, if_beta..., sc_scale, sc_beta...
void write_influence_csv(const InfluenceReport& report, const std::string& path);

}  // namespace taulasso
