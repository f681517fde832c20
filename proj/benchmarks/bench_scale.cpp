#include <benchmark/benchmark.h>

#include <random>

#include "taulasso/rho.hpp"
#include "taulasso/scale.hpp"

using namespace taulasso;

namespace {

Eigen::VectorXd normal_draws(int n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = nd(rng);
  return v;
}

}  // namespace

static void BM_MScaleCold(benchmark::State& state) {
  const TuningPair tuning = TuningPair::defaults();
  Eigen::VectorXd r = normal_draws(static_cast<int>(state.range(0)), 7);
  for (auto _ : state) {
    benchmark::DoNotOptimize(m_scale(r, tuning.rho0(), tuning.delta));
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_MScaleCold)->RangeMultiplier(4)->Range(64, 1 << 18)->Complexity();

static void BM_MScaleWarm(benchmark::State& state) {
  const TuningPair tuning = TuningPair::defaults();
  Eigen::VectorXd r = normal_draws(static_cast<int>(state.range(0)), 7);
  double hint = m_scale(r, tuning.rho0(), tuning.delta).s;
  for (auto _ : state) {
    benchmark::DoNotOptimize(m_scale(r, tuning.rho0(), tuning.delta, hint * 1.05));
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_MScaleWarm)->RangeMultiplier(4)->Range(64, 1 << 18)->Complexity();

static void BM_TauScale(benchmark::State& state) {
  const TuningPair tuning = TuningPair::defaults();
  Eigen::VectorXd r = normal_draws(static_cast<int>(state.range(0)), 11);
  for (auto _ : state) {
    benchmark::DoNotOptimize(tau_scale(r, tuning.rho0(), tuning.rho1(), tuning.delta));
  }
}
BENCHMARK(BM_TauScale)->RangeMultiplier(4)->Range(64, 1 << 16);

static void BM_CombinedWeight(benchmark::State& state) {
  const TuningPair tuning = TuningPair::defaults();
  Eigen::VectorXd r = normal_draws(static_cast<int>(state.range(0)), 13);
  for (auto _ : state) {
    benchmark::DoNotOptimize(combined_psi_weight(r, 1.0, tuning.rho0(), tuning.rho1()));
  }
}
BENCHMARK(BM_CombinedWeight)->RangeMultiplier(4)->Range(64, 1 << 16);
