#include "taulasso/model_selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "taulasso/rng.hpp"
#include "taulasso/scale.hpp"
#include "taulasso/solver.hpp"

namespace taulasso {

double lambda_max(const Dataset& data, const TuningPair& tuning) {
  data.validate();
  if (data.y.cwiseAbs().maxCoeff() == 0.0)
    throw InvalidInputError("lambda_max: response is identically zero");
  return lambda_zero_threshold(data, tuning);
}

std::vector<double> make_lambda_grid(const Dataset& data, const TuningPair& tuning,
                                     int n_lambda, double ratio) {
  if (n_lambda < 2) throw InvalidParameterError("make_lambda_grid: n_lambda must be >= 2");
  if (!(ratio > 0.0 && ratio < 1.0))
    throw InvalidParameterError("make_lambda_grid: ratio must be in (0, 1)");
  const double top = lambda_max(data, tuning);
  std::vector<double> grid(static_cast<std::size_t>(n_lambda));
  for (int i = 0; i < n_lambda; ++i)
    grid[static_cast<std::size_t>(i)] =
        top * std::pow(ratio, static_cast<double>(i) / static_cast<double>(n_lambda - 1));
  return grid;
}

std::vector<int> make_folds(int n, int folds, std::uint64_t seed) {
  if (folds < 2) throw InvalidParameterError("make_folds: folds must be >= 2");
  if (n < folds) throw InvalidInputError("make_folds: fewer observations than folds");
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 rng = make_engine(seed, 0xf01d5);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<int> assign(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) assign[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])] = i % folds;
  return assign;
}

CvResult cross_validate(const Dataset& data, const FitFunction& fit,
                        const std::vector<double>& grid, int folds, std::uint64_t seed,
                        const TuningPair& tuning) {
  data.validate();
  if (grid.empty()) throw InvalidParameterError("cross_validate: empty grid");
  const int n = static_cast<int>(data.n());

  CvResult result;
  result.seed = seed;
  result.lambda_grid = grid;
  std::sort(result.lambda_grid.begin(), result.lambda_grid.end(), std::greater<double>());
  result.fold_assignments = make_folds(n, folds, seed);

  const std::size_t L = result.lambda_grid.size();
  // pooled out-of-fold residuals, one length-n vector per lambda
  std::vector<VectorXd> pooled(L, VectorXd::Zero(n));
  std::vector<bool> failed(L, false);

  for (int f = 0; f < folds; ++f) {
    std::vector<int> train_idx, test_idx;
    for (int i = 0; i < n; ++i) {
      if (result.fold_assignments[static_cast<std::size_t>(i)] == f)
        test_idx.push_back(i);
      else
        train_idx.push_back(i);
    }
    Dataset train = data.rows(train_idx);
    Dataset test = data.rows(test_idx);

    for (std::size_t k = 0; k < L; ++k) {
      if (failed[k]) continue;
      try {
        VectorXd beta = fit(train, result.lambda_grid[k]);
        VectorXd resid = test.y - test.X * beta;
        for (std::size_t t = 0; t < test_idx.size(); ++t)
          pooled[k](test_idx[t]) = resid(static_cast<Eigen::Index>(t));
      } catch (const std::exception& e) {
        failed[k] = true;
        result.warnings.push_back("lambda[" + std::to_string(k) + "] fold " + std::to_string(f) +
                                  ": " + e.what());
      }
    }
  }

  result.cv_scores.resize(L);
  double best = std::numeric_limits<double>::infinity();
  std::size_t best_idx = 0;
  for (std::size_t k = 0; k < L; ++k) {
    if (failed[k]) {
      result.cv_scores[k] = std::numeric_limits<double>::infinity();
    } else {
      result.cv_scores[k] =
          tau_scale(pooled[k], tuning.rho0(), tuning.rho1(), tuning.delta).tau;
    }
    // strict improvement only: grid is descending, so ties keep the larger lambda
    if (result.cv_scores[k] < best) {
      best = result.cv_scores[k];
      best_idx = k;
    }
  }
  if (!std::isfinite(best))
    throw SolverDivergenceError("cross_validate: every lambda failed on some fold");
  result.best_lambda = result.lambda_grid[best_idx];
  return result;
}

}  // namespace taulasso
