#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "taulasso/model_selection.hpp"
#include "taulasso/scale.hpp"
#include "taulasso/scenarios.hpp"
#include "taulasso/solver.hpp"
#include "testutil.hpp"

using namespace taulasso;

namespace {
const TuningPair kTuning = TuningPair::defaults();

Dataset toy_regression(int n, int p, const VectorXd& beta_true, double noise_sd,
                       std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Dataset data;
  data.X = testutil::random_normal_matrix(n, p, rng);
  data.y = data.X * beta_true + noise_sd * testutil::random_normal_vector(n, rng);
  return data;
}
}  // namespace

TEST_CASE("lambda grid: shape, bounds, monotonicity") {
  Dataset data = toy_regression(60, 4, VectorXd::Constant(4, 1.0), 1.0, 2);
  std::vector<double> grid = make_lambda_grid(data, kTuning, 25, 1e-3);
  CHECK(grid.size() == 25);
  CHECK(grid.front() == doctest::Approx(lambda_max(data, kTuning)));
  CHECK(grid.back() == doctest::Approx(1e-3 * grid.front()).epsilon(1e-12));
  for (std::size_t k = 1; k < grid.size(); ++k) CHECK(grid[k] < grid[k - 1]);

  CHECK_THROWS_AS(make_lambda_grid(data, kTuning, 1, 0.5), InvalidParameterError);
  CHECK_THROWS_AS(make_lambda_grid(data, kTuning, 10, 1.0), InvalidParameterError);
  Dataset degenerate = data;
  degenerate.y.setZero();
  CHECK_THROWS_AS(make_lambda_grid(degenerate, kTuning, 10, 0.1), InvalidInputError);
}

TEST_CASE("lambda max: all-zero solution is stationary just above it") {
  Dataset data = toy_regression(80, 5, VectorXd::Constant(5, 1.2), 1.0, 8);
  double top = lambda_max(data, kTuning);
  VectorXd g = tau_squared_gradient(data, VectorXd::Zero(5), kTuning);
  CHECK(g.cwiseAbs().maxCoeff() == doctest::Approx(top));
  SolverOptions opts;
  opts.seed = 10;
  FitResult fit = fit_tau_lasso(data, 1.01 * top, kTuning, opts);
  CHECK(fit.beta.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("folds: exact cover with near-equal sizes") {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> nd(10, 200), kd(2, 10);
  for (int rep = 0; rep < 50; ++rep) {
    int n = nd(rng);
    int folds = std::min(kd(rng), n);
    std::vector<int> assign = make_folds(n, folds, 77 + rep);
    CHECK(static_cast<int>(assign.size()) == n);
    std::vector<int> counts(static_cast<std::size_t>(folds), 0);
    for (int f : assign) {
      CHECK(f >= 0);
      CHECK(f < folds);
      ++counts[static_cast<std::size_t>(f)];
    }
    int lo = *std::min_element(counts.begin(), counts.end());
    int hi = *std::max_element(counts.begin(), counts.end());
    CHECK(hi - lo <= 1);
  }
  CHECK_THROWS_AS(make_folds(3, 5, 1), InvalidInputError);
  CHECK_THROWS_AS(make_folds(10, 1, 1), InvalidParameterError);
}

TEST_CASE("cross_validate: deterministic for a fixed seed") {
  Dataset data = toy_regression(50, 4, VectorXd::Constant(4, 1.5), 1.0, 12);
  std::vector<double> grid = make_lambda_grid(data, kTuning, 8, 1e-2);
  auto fit = [&](const Dataset& train, double lambda) {
    SolverOptions opts;
    opts.seed = 55;
    opts.starts = 2;
    return fit_tau_lasso(train, lambda, kTuning, opts).beta;
  };
  CvResult a = cross_validate(data, fit, grid, 5, 31, kTuning);
  CvResult b = cross_validate(data, fit, grid, 5, 31, kTuning);
  CHECK(a.best_lambda == b.best_lambda);
  CHECK(a.cv_scores == b.cv_scores);
  CHECK(a.fold_assignments == b.fold_assignments);
}

TEST_CASE("cross_validate: strong signal never keeps the null model") {
  int informative = 0;
  const int reps = 50;
  for (int rep = 0; rep < reps; ++rep) {
    ScenarioSpec spec = make_scenario(1, ErrorLaw::Normal, false);
    auto [train, test] = generate(spec, 5000 + rep);
    std::vector<double> grid = make_lambda_grid(train, kTuning, 12, 1e-3);
    auto fit = [&](const Dataset& tr, double lambda) {
      SolverOptions opts;
      opts.seed = 600 + rep;
      opts.starts = 2;
      return fit_tau_lasso(tr, lambda, kTuning, opts).beta;
    };
    CvResult cv = cross_validate(train, fit, grid, 5, 100 + rep, kTuning);
    if (cv.best_lambda < grid.front()) ++informative;
  }
  CHECK(informative >= 48);  // >= 95% of seeds
}

TEST_CASE("cross_validate: estimator failure scores +inf with a warning") {
  Dataset data = toy_regression(40, 3, VectorXd::Constant(3, 1.0), 0.5, 9);
  std::vector<double> grid = {0.5, 0.1, 0.01};
  auto fit = [&](const Dataset& train, double lambda) -> VectorXd {
    if (lambda == 0.1) throw std::runtime_error("synthetic failure");
    SolverOptions opts;
    opts.seed = 3;
    opts.starts = 1;
    return fit_tau_lasso(train, lambda, kTuning, opts).beta;
  };
  CvResult cv = cross_validate(data, fit, grid, 4, 17, kTuning);
  CHECK(cv.cv_scores[1] == std::numeric_limits<double>::infinity());
  CHECK(!cv.warnings.empty());
  CHECK(cv.best_lambda != 0.1);
}

TEST_CASE("tau-scale scoring: bounded under huge injected outliers") {
  // Oracle (quadrature fixed point): replacing 5% of a standard-normal pool
  // with gross outliers inflates the tau-scale by 26.40% asymptotically; the
  // bounded rho keeps it finite no matter the outlier magnitude.
  const int n = 20000;
  std::mt19937_64 rng(88);
  VectorXd clean = testutil::random_normal_vector(n, rng);
  VectorXd dirty = clean;
  for (int i = 0; i < n / 20; ++i) dirty(i) = 1e9;

  double score_clean = tau_scale(clean, kTuning.rho0(), kTuning.rho1(), kTuning.delta).tau;
  double score_dirty = tau_scale(dirty, kTuning.rho0(), kTuning.rho1(), kTuning.delta).tau;
  double change = score_dirty / score_clean - 1.0;
  CHECK(change == doctest::Approx(0.2640).epsilon(0.05));
  CHECK(change < 0.30);
}

TEST_CASE("cross_validate: ties break toward the larger lambda") {
  // constant predictions make every lambda score identically
  Dataset data = toy_regression(30, 2, VectorXd::Zero(2), 1.0, 21);
  std::vector<double> grid = {1.0, 0.5, 0.25};
  auto fit = [&](const Dataset&, double) { return VectorXd::Zero(2).eval(); };
  CvResult cv = cross_validate(data, fit, grid, 3, 5, kTuning);
  CHECK(cv.best_lambda == 1.0);
}
