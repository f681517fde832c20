#include <benchmark/benchmark.h>

#include <random>

#include "taulasso/model_selection.hpp"
#include "taulasso/solver.hpp"
#include "taulasso/sridge.hpp"

using namespace taulasso;

namespace {

Dataset sparse_problem(int n, int p, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  Dataset data;
  data.X.resize(n, p);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j) data.X(i, j) = nd(rng);
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  for (int j = 0; j < std::min(p, 3); ++j) beta(j) = 2.0 + j;
  data.y = data.X * beta;
  for (int i = 0; i < n; ++i) data.y(i) += nd(rng);
  return data;
}

}  // namespace

static void BM_FitTauLasso(benchmark::State& state) {
  const TuningPair tuning = TuningPair::defaults();
  Dataset data = sparse_problem(static_cast<int>(state.range(0)),
                                static_cast<int>(state.range(1)), 3);
  double lambda = 0.1 * lambda_max(data, tuning);
  SolverOptions opts;
  opts.seed = 17;
  for (auto _ : state) {
    benchmark::DoNotOptimize(fit_tau_lasso(data, lambda, tuning, opts));
  }
}
BENCHMARK(BM_FitTauLasso)
    ->Args({50, 10})
    ->Args({200, 10})
    ->Args({1000, 10})
    ->Args({100, 200})
    ->Unit(benchmark::kMillisecond);

static void BM_FitSRidge(benchmark::State& state) {
  const TuningPair tuning = TuningPair::defaults();
  Dataset data = sparse_problem(static_cast<int>(state.range(0)),
                                static_cast<int>(state.range(1)), 5);
  SolverOptions opts;
  opts.seed = 19;
  for (auto _ : state) {
    benchmark::DoNotOptimize(fit_s_ridge(data, 0.01, tuning, opts));
  }
}
BENCHMARK(BM_FitSRidge)->Args({50, 10})->Args({200, 10})->Args({100, 200})
    ->Unit(benchmark::kMillisecond);

static void BM_LambdaGrid(benchmark::State& state) {
  const TuningPair tuning = TuningPair::defaults();
  Dataset data = sparse_problem(200, 50, 7);
  for (auto _ : state) {
    benchmark::DoNotOptimize(make_lambda_grid(data, tuning, 30, 1e-3));
  }
}
BENCHMARK(BM_LambdaGrid);

BENCHMARK_MAIN();
