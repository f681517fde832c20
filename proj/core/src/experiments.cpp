#include "taulasso/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

#include "taulasso/model_selection.hpp"
#include "taulasso/parallel.hpp"
#include "taulasso/rng.hpp"
#include "taulasso/sridge.hpp"
#include "taulasso/standardize.hpp"

#include <json.hpp>

namespace taulasso {

std::string to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::TauLasso: return "tau-lasso";
    case EstimatorKind::AdaptiveTauLasso: return "adaptive-tau-lasso";
    case EstimatorKind::OracleTau: return "oracle";
  }
  return "unknown";
}

namespace {

// Path-wise CV fit functor: full multi-start at each fold's largest lambda,
// warm single-start continuation afterwards.
class WarmPathFit {
 public:
  WarmPathFit(const TuningPair& tuning, const SolverOptions& base, int cold_starts)
      : tuning_(tuning), base_(base), cold_starts_(cold_starts) {}

  VectorXd operator()(const Dataset& train, double lambda) {
    SolverOptions opts = base_;
    opts.seed = mix_seed(base_.seed, call_++);
    bool cold = !have_warm_ || lambda > last_lambda_;
    opts.starts = cold ? cold_starts_ : 1;
    // each fold path descends from the penalty's all-zero end
    VectorXd zero = VectorXd::Zero(train.p());
    const VectorXd* init = cold ? &zero : (warm_.size() == train.p() ? &warm_ : &zero);
    FitResult fit = fit_tau_lasso(train, lambda, tuning_, opts, init);
    warm_ = fit.beta;
    have_warm_ = true;
    last_lambda_ = lambda;
    return fit.beta;
  }

 private:
  TuningPair tuning_;
  SolverOptions base_;
  int cold_starts_;
  VectorXd warm_;
  bool have_warm_ = false;
  double last_lambda_ = 0.0;
  std::uint64_t call_ = 0;
};

class WarmAdaptivePathFit {
 public:
  WarmAdaptivePathFit(const TuningPair& tuning, const SolverOptions& base, int cold_starts,
                      VectorXd pilot, double gamma, double eps)
      : tuning_(tuning),
        base_(base),
        cold_starts_(cold_starts),
        pilot_(std::move(pilot)),
        gamma_(gamma),
        eps_(eps) {}

  VectorXd operator()(const Dataset& train, double lambda) {
    SolverOptions opts = base_;
    opts.seed = mix_seed(base_.seed, call_++);
    bool cold = !have_warm_ || lambda > last_lambda_;
    opts.starts = cold ? cold_starts_ : 1;
    VectorXd zero = VectorXd::Zero(train.p());
    const VectorXd* init = cold ? &zero : (warm_.size() == train.p() ? &warm_ : &zero);
    FitResult fit = fit_adaptive_tau_lasso(train, lambda, tuning_, pilot_, gamma_, eps_, opts,
                                           init);
    warm_ = fit.beta;
    have_warm_ = true;
    last_lambda_ = lambda;
    return fit.beta;
  }

 private:
  TuningPair tuning_;
  SolverOptions base_;
  int cold_starts_;
  VectorXd pilot_;
  double gamma_;
  double eps_;
  VectorXd warm_;
  bool have_warm_ = false;
  double last_lambda_ = 0.0;
  std::uint64_t call_ = 0;
};

std::vector<double> adaptive_lambda_grid(const Dataset& std_train, const TuningPair& tuning,
                                         const VectorXd& pilot, double gamma, double eps,
                                         int n_lambda, double ratio) {
  // All-zero is stationary once lambda * w_j >= |grad_j| for every j, so the
  // weighted threshold is max_j |grad_j| * max(eps, |pilot_j|)^gamma.
  VectorXd g = tau_squared_gradient(std_train, VectorXd::Zero(std_train.p()), tuning);
  double top = 0.0;
  for (Eigen::Index j = 0; j < g.size(); ++j) {
    double mag = std::max(eps, std::abs(pilot(j)));
    top = std::max(top, std::abs(g(j)) * std::pow(mag, gamma));
  }
  if (top <= 0.0) throw InvalidInputError("adaptive grid: zero threshold");
  std::vector<double> grid(static_cast<std::size_t>(n_lambda));
  for (int i = 0; i < n_lambda; ++i)
    grid[static_cast<std::size_t>(i)] =
        top * std::pow(ratio, static_cast<double>(i) / static_cast<double>(n_lambda - 1));
  return grid;
}

struct TrialOutcome {
  bool failed = false;
  MetricsRecord metrics;
};

MetricStat aggregate(const std::vector<double>& values) {
  MetricStat stat;
  if (values.empty()) return stat;
  double sum = 0.0;
  for (double v : values) sum += v;
  stat.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - stat.mean) * (v - stat.mean);
    stat.std_error = std::sqrt(ss / static_cast<double>(values.size() - 1) /
                               static_cast<double>(values.size()));
  }
  return stat;
}

void emit_num(std::ofstream& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  out << buf;
}

}  // namespace

namespace {

StandardizationMap identity_map(Eigen::Index p) {
  StandardizationMap map;
  map.col_centers = VectorXd::Zero(p);
  map.col_scales = VectorXd::Ones(p);
  map.y_center = 0.0;
  return map;
}

void adopt_fit(PipelineFit& out, const FitResult& fit) {
  out.s = fit.s;
  out.tau = fit.tau;
  out.objective = fit.objective;
  out.trace_length = fit.trace.size();
  out.converged = fit.converged;
}

// Pilot coefficients for the adaptive stage; the pilot's own penalty comes
// from its CV unless pinned.
std::pair<VectorXd, double> fit_pilot(const Dataset& work, const PipelineOptions& opts,
                                      const SolverOptions& solver_opts, std::uint64_t seed) {
  if (opts.pilot_kind == PilotKind::SRidge) {
    double pilot_lambda;
    if (opts.fixed_pilot_lambda) {
      pilot_lambda = *opts.fixed_pilot_lambda;
    } else {
      std::vector<double> ridge_grid = default_ridge_grid(work, opts.ridge_n_lambda);
      pilot_lambda =
          select_pilot_lambda(work, ridge_grid, opts.folds, opts.tuning, mix_seed(seed, 0x9d));
    }
    SolverOptions pilot_opts = solver_opts;
    pilot_opts.seed = mix_seed(seed, 0x9e);
    return {fit_s_ridge(work, pilot_lambda, opts.tuning, pilot_opts).beta, pilot_lambda};
  }
  // tau-lasso pilot (used when validating the influence theory)
  double pilot_lambda;
  SolverOptions cv_opts = solver_opts;
  cv_opts.seed = mix_seed(seed, 0xc3);
  if (opts.fixed_pilot_lambda) {
    pilot_lambda = *opts.fixed_pilot_lambda;
  } else {
    std::vector<double> grid = make_lambda_grid(work, opts.tuning, opts.n_lambda, opts.grid_ratio);
    WarmPathFit cv_fit(opts.tuning, cv_opts, opts.cv_starts);
    CvResult cv = cross_validate(work, std::ref(cv_fit), grid, opts.folds,
                                 mix_seed(seed, 0xce), opts.tuning);
    pilot_lambda = cv.best_lambda;
  }
  SolverOptions pilot_opts = solver_opts;
  pilot_opts.seed = mix_seed(seed, 0x9f);
  return {fit_tau_lasso(work, pilot_lambda, opts.tuning, pilot_opts).beta, pilot_lambda};
}

// Final fit at the selected penalty: multi-start at lambda itself, plus a
// warm continuation down the grid from the all-zero end. The continuation
// matters under heavy contamination with p ~ n, where cold starts tend to
// interpolate corrupted rows while the path from lambda_max never picks
// them up.
FitResult pathwise_final_fit(const Dataset& work, const std::vector<double>& grid,
                             double lambda, const TuningPair& tuning,
                             const SolverOptions& solver_opts,
                             const std::function<FitResult(double, const SolverOptions&,
                                                           const VectorXd*)>& fit_at) {
  FitResult best = fit_at(lambda, solver_opts, nullptr);

  SolverOptions path_opts = solver_opts;
  path_opts.starts = 1;
  VectorXd warm = VectorXd::Zero(work.p());  // the grid top's stationary solution
  bool stepped = false;
  for (double lam : grid) {
    if (lam < lambda) break;
    FitResult step = fit_at(lam, path_opts, &warm);
    warm = step.beta;
    stepped = true;
  }
  if (stepped) {
    FitResult path_fit = fit_at(lambda, path_opts, &warm);
    if (path_fit.objective < best.objective) best = path_fit;
  }
  return best;
}

}  // namespace

PipelineFit fit_pipeline(const Dataset& train, EstimatorKind kind, const PipelineOptions& opts,
                         std::uint64_t seed, const VectorXd* beta0) {
  train.validate();

  Dataset work = train;
  StandardizationMap map = identity_map(train.p());
  if (opts.standardize_data) {
    auto [std_data, std_map] = standardize(train);
    work = std::move(std_data);
    map = std_map;
  }

  SolverOptions solver_opts;
  solver_opts.starts = opts.starts;
  solver_opts.seed = mix_seed(seed, 0xa11);

  PipelineFit out;
  VectorXd beta_std;

  if (kind == EstimatorKind::OracleTau) {
    if (!beta0) throw InvalidInputError("oracle estimator needs the true coefficients");
    std::vector<int> support;
    for (Eigen::Index j = 0; j < beta0->size(); ++j)
      if ((*beta0)(j) != 0.0) support.push_back(static_cast<int>(j));
    Dataset restricted;
    restricted.y = work.y;
    restricted.X.resize(work.n(), static_cast<Eigen::Index>(support.size()));
    for (std::size_t k = 0; k < support.size(); ++k)
      restricted.X.col(static_cast<Eigen::Index>(k)) = work.X.col(support[k]);
    FitResult fit = fit_tau_lasso(restricted, 0.0, opts.tuning, solver_opts);
    beta_std = VectorXd::Zero(work.p());
    for (std::size_t k = 0; k < support.size(); ++k)
      beta_std(support[k]) = fit.beta(static_cast<Eigen::Index>(k));
    adopt_fit(out, fit);
  } else if (kind == EstimatorKind::TauLasso) {
    std::vector<double> grid;
    try {
      grid = make_lambda_grid(work, opts.tuning, opts.n_lambda, opts.grid_ratio);
    } catch (const Error&) {
      if (!opts.fixed_lambda) throw;  // degenerate responses still fit at a pinned penalty
    }
    double lambda;
    if (opts.fixed_lambda) {
      lambda = *opts.fixed_lambda;
    } else {
      SolverOptions cv_opts = solver_opts;
      cv_opts.seed = mix_seed(seed, 0xc1);
      WarmPathFit cv_fit(opts.tuning, cv_opts, opts.cv_starts);
      CvResult cv = cross_validate(work, std::ref(cv_fit), grid, opts.folds,
                                   mix_seed(seed, 0xcf), opts.tuning);
      lambda = cv.best_lambda;
    }
    FitResult fit = pathwise_final_fit(
        work, grid, lambda, opts.tuning, solver_opts,
        [&](double lam, const SolverOptions& o, const VectorXd* init) {
          return fit_tau_lasso(work, lam, opts.tuning, o, init);
        });
    beta_std = fit.beta;
    out.lambda = lambda;
    adopt_fit(out, fit);
  } else {
    auto [pilot_beta, pilot_lambda] = fit_pilot(work, opts, solver_opts, seed);
    double eps = opts.epsilon_floor ? *opts.epsilon_floor : default_epsilon_floor(work.y);

    std::vector<double> grid = adaptive_lambda_grid(work, opts.tuning, pilot_beta, opts.gamma,
                                                    eps, opts.n_lambda, opts.grid_ratio);
    double lambda;
    if (opts.fixed_lambda) {
      lambda = *opts.fixed_lambda;
    } else {
      SolverOptions cv_opts = solver_opts;
      cv_opts.seed = mix_seed(seed, 0xc2);
      WarmAdaptivePathFit cv_fit(opts.tuning, cv_opts, opts.cv_starts, pilot_beta, opts.gamma,
                                 eps);
      CvResult cv = cross_validate(work, std::ref(cv_fit), grid, opts.folds,
                                   mix_seed(seed, 0xcf), opts.tuning);
      lambda = cv.best_lambda;
    }
    FitResult fit = pathwise_final_fit(
        work, grid, lambda, opts.tuning, solver_opts,
        [&](double lam, const SolverOptions& o, const VectorXd* init) {
          return fit_adaptive_tau_lasso(work, lam, opts.tuning, pilot_beta, opts.gamma, eps, o,
                                        init);
        });
    beta_std = fit.beta;
    out.lambda = lambda;
    out.pilot_lambda = pilot_lambda;
    adopt_fit(out, fit);
  }

  DestandardizedModel model = destandardize_coefficients(beta_std, map);
  out.beta = std::move(model.beta);
  out.intercept = model.intercept;
  for (Eigen::Index j = 0; j < out.beta.size(); ++j)
    if (out.beta(j) != 0.0) out.active_set.push_back(static_cast<int>(j));
  return out;
}

PipelineFit fit_sridge_pipeline(const Dataset& train, const PipelineOptions& opts,
                                std::uint64_t seed) {
  train.validate();
  Dataset work = train;
  StandardizationMap map = identity_map(train.p());
  if (opts.standardize_data) {
    auto [std_data, std_map] = standardize(train);
    work = std::move(std_data);
    map = std_map;
  }
  double lambda;
  if (opts.fixed_lambda) {
    lambda = *opts.fixed_lambda;
  } else {
    std::vector<double> ridge_grid = default_ridge_grid(work, opts.ridge_n_lambda);
    lambda = select_pilot_lambda(work, ridge_grid, opts.folds, opts.tuning, mix_seed(seed, 0x9d));
  }
  SolverOptions solver_opts;
  solver_opts.starts = opts.starts;
  solver_opts.seed = mix_seed(seed, 0x9e);
  PilotResult pilot = fit_s_ridge(work, lambda, opts.tuning, solver_opts);

  PipelineFit out;
  out.lambda = lambda;
  out.s = pilot.s;
  out.objective = pilot.s * pilot.s + lambda * pilot.beta.squaredNorm();
  out.trace_length = pilot.trace.size();
  out.converged = pilot.converged;
  DestandardizedModel model = destandardize_coefficients(pilot.beta, map);
  out.beta = std::move(model.beta);
  out.intercept = model.intercept;
  for (Eigen::Index j = 0; j < out.beta.size(); ++j)
    if (out.beta(j) != 0.0) out.active_set.push_back(static_cast<int>(j));
  return out;
}

TableReport run_table_experiment(const std::vector<ScenarioSpec>& scenarios,
                                 const std::vector<EstimatorKind>& estimators, int trials,
                                 std::uint64_t seed, const PipelineOptions& opts) {
  if (trials < 1) throw InvalidParameterError("run_table_experiment: trials must be >= 1");
  TableReport report;
  report.seed = seed;
  report.trials = trials;

  for (std::size_t s_idx = 0; s_idx < scenarios.size(); ++s_idx) {
    const ScenarioSpec& spec = scenarios[s_idx];
    spec.validate();
    const std::uint64_t scenario_seed = mix_seed(seed, 1000 + s_idx);
    LeverageOverride leverage = draw_leverage_override(spec, scenario_seed);
    const LeverageOverride* lev = leverage.rows.empty() ? nullptr : &leverage;

    std::vector<std::vector<TrialOutcome>> outcomes(
        estimators.size(), std::vector<TrialOutcome>(static_cast<std::size_t>(trials)));

    parallel_for(static_cast<std::size_t>(trials), [&](std::size_t t) {
      std::uint64_t trial_seed = mix_seed(scenario_seed, t);
      auto [train, test] = generate(spec, trial_seed, lev);
      for (std::size_t e = 0; e < estimators.size(); ++e) {
        TrialOutcome& slot = outcomes[e][t];
        try {
          PipelineFit fit = fit_pipeline(train, estimators[e], opts, mix_seed(trial_seed, e),
                                         &spec.beta0);
          slot.metrics = score(fit.beta, fit.intercept, spec.beta0, test);
        } catch (const std::exception&) {
          slot.failed = true;
        }
      }
    });

    for (std::size_t e = 0; e < estimators.size(); ++e) {
      TableCell cell;
      cell.scenario = spec.name;
      cell.estimator = to_string(estimators[e]);
      cell.error_law = to_string(spec.error_law);
      cell.contaminated = spec.contamination.has_value();
      cell.trials = trials;
      std::vector<double> rmse, mad, fnr, fpr, cer;
      for (const TrialOutcome& o : outcomes[e]) {
        if (o.failed) {
          ++cell.failures;
          continue;
        }
        rmse.push_back(o.metrics.rmse);
        mad.push_back(o.metrics.mad);
        fnr.push_back(o.metrics.fnr);
        fpr.push_back(o.metrics.fpr);
        cer.push_back(o.metrics.cer);
      }
      cell.rmse = aggregate(rmse);
      cell.mad = aggregate(mad);
      cell.fnr = aggregate(fnr);
      cell.fpr = aggregate(fpr);
      cell.cer = aggregate(cer);
      report.cells.push_back(std::move(cell));
    }
  }
  return report;
}

BreakdownReport run_breakdown_curve(const std::vector<double>& ystar_grid, int trials,
                                    std::uint64_t seed, const PipelineOptions& opts) {
  if (ystar_grid.empty()) throw InvalidParameterError("run_breakdown_curve: empty grid");
  BreakdownReport report;
  report.seed = seed;

  const std::vector<EstimatorKind> estimators = {EstimatorKind::TauLasso,
                                                 EstimatorKind::AdaptiveTauLasso};
  for (std::size_t g = 0; g < ystar_grid.size(); ++g) {
    ScenarioSpec spec = make_scenario(1, ErrorLaw::Normal, true);
    spec.contamination->ystar = ystar_grid[g];

    std::vector<std::vector<TrialOutcome>> outcomes(
        estimators.size(), std::vector<TrialOutcome>(static_cast<std::size_t>(trials)));
    // Trial seeds do not depend on ystar: the curve is traced with common
    // random numbers, so differences along it are not washed out by
    // sampling noise.
    parallel_for(static_cast<std::size_t>(trials), [&](std::size_t t) {
      std::uint64_t trial_seed = mix_seed(mix_seed(seed, 7000), t);
      auto [train, test] = generate(spec, trial_seed);
      for (std::size_t e = 0; e < estimators.size(); ++e) {
        TrialOutcome& slot = outcomes[e][t];
        try {
          PipelineFit fit =
              fit_pipeline(train, estimators[e], opts, mix_seed(trial_seed, e), &spec.beta0);
          slot.metrics = score(fit.beta, fit.intercept, spec.beta0, test);
        } catch (const std::exception&) {
          slot.failed = true;
        }
      }
    });

    for (std::size_t e = 0; e < estimators.size(); ++e) {
      BreakdownPoint point;
      point.ystar = ystar_grid[g];
      point.estimator = to_string(estimators[e]);
      point.trials = trials;
      std::vector<double> rmse;
      for (const TrialOutcome& o : outcomes[e]) {
        if (o.failed) {
          ++point.failures;
          continue;
        }
        rmse.push_back(o.metrics.rmse);
      }
      point.rmse = aggregate(rmse);
      report.points.push_back(std::move(point));
    }
  }
  return report;
}

OvershrinkReport run_overshrinkage(int n_lambda, int trials, std::uint64_t seed,
                                   const PipelineOptions& opts) {
  if (n_lambda < 2) throw InvalidParameterError("run_overshrinkage: n_lambda must be >= 2");
  OvershrinkReport report;
  report.seed = seed;
  report.trials = trials;

  ScenarioSpec spec;
  spec.name = "overshrinkage";
  spec.n = 50;
  spec.p = 10;
  spec.beta0 = VectorXd::Zero(10);
  spec.beta0 << 10, 5, 4, 3, 2, 0, 0, 0, 0, 0;
  spec.covariance = MatrixXd::Identity(10, 10);
  spec.snr_db = 35.0;
  spec.error_law = ErrorLaw::Normal;
  report.beta0 = spec.beta0;

  // The grid must be shared across trials for the bias averages to make
  // sense; anchor it on a reference draw.
  {
    auto [ref_train, ref_test] = generate(spec, mix_seed(seed, 0xfe));
    auto [ref_std, ref_map] = standardize(ref_train);
    report.lambda_grid = make_lambda_grid(ref_std, opts.tuning, n_lambda, 1e-3);
  }
  const std::size_t L = report.lambda_grid.size();
  const int k0 = spec.k0();

  // slot per (trial, estimator, lambda, coef)
  std::vector<std::vector<std::vector<VectorXd>>> betas(
      static_cast<std::size_t>(trials),
      std::vector<std::vector<VectorXd>>(2, std::vector<VectorXd>(L)));
  std::vector<bool> failed(static_cast<std::size_t>(trials), false);

  parallel_for(static_cast<std::size_t>(trials), [&](std::size_t t) {
    try {
      std::uint64_t trial_seed = mix_seed(seed, 100 + t);
      auto [train, test] = generate(spec, trial_seed);
      auto [work, map] = standardize(train);

      SolverOptions solver_opts;
      solver_opts.starts = opts.starts;
      solver_opts.seed = mix_seed(trial_seed, 0xa7);

      std::vector<double> ridge_grid = default_ridge_grid(work, opts.ridge_n_lambda);
      double pilot_lambda = select_pilot_lambda(work, ridge_grid, opts.folds, opts.tuning,
                                                mix_seed(trial_seed, 0x9d));
      PilotResult pilot = fit_s_ridge(work, pilot_lambda, opts.tuning, solver_opts);
      double eps = opts.epsilon_floor ? *opts.epsilon_floor : default_epsilon_floor(work.y);

      VectorXd warm_plain, warm_adapt;
      for (std::size_t k = 0; k < L; ++k) {
        double lambda = report.lambda_grid[k];
        FitResult plain =
            fit_tau_lasso(work, lambda, opts.tuning, solver_opts,
                          warm_plain.size() == work.p() ? &warm_plain : nullptr);
        warm_plain = plain.beta;
        FitResult adapt = fit_adaptive_tau_lasso(
            work, lambda, opts.tuning, pilot.beta, opts.gamma, eps, solver_opts,
            warm_adapt.size() == work.p() ? &warm_adapt : nullptr);
        warm_adapt = adapt.beta;
        betas[t][0][k] = destandardize_coefficients(plain.beta, map).beta;
        betas[t][1][k] = destandardize_coefficients(adapt.beta, map).beta;
      }
    } catch (const std::exception&) {
      failed[t] = true;
    }
  });

  const char* names[2] = {"tau-lasso", "adaptive-tau-lasso"};
  for (std::size_t e = 0; e < 2; ++e) {
    for (std::size_t k = 0; k < L; ++k) {
      for (int j = 0; j < k0; ++j) {
        std::vector<double> bias;
        for (int t = 0; t < trials; ++t) {
          if (failed[static_cast<std::size_t>(t)]) continue;
          bias.push_back(betas[static_cast<std::size_t>(t)][e][k](j) - spec.beta0(j));
        }
        BiasPathPoint point;
        point.lambda = report.lambda_grid[k];
        point.estimator = names[e];
        point.coefficient = j;
        point.bias = aggregate(bias);
        report.points.push_back(std::move(point));
      }
    }
  }
  return report;
}

InfluenceReport run_if_validation(const IfValidationConfig& config, std::uint64_t seed) {
  const double lambda = config.lambda_scale / static_cast<double>(config.sc_n);
  const TuningPair& tuning = config.tuning;

  ExpectationEngine::Drawer drawer = [beta0 = config.beta0](std::mt19937_64& rng, double& y,
                                                            VectorXd& x) {
    std::normal_distribution<double> nd(0.0, 1.0);
    x(0) = nd(rng);
    y = beta0 * x(0) + nd(rng);
  };

  Dataset sc_sample;
  {
    sc_sample.y.resize(config.sc_n);
    sc_sample.X.resize(config.sc_n, 1);
    std::mt19937_64 rng = make_engine(seed, 3);
    VectorXd x(1);
    double y = 0.0;
    for (int i = 0; i < config.sc_n; ++i) {
      drawer(rng, y, x);
      sc_sample.y(i) = y;
      sc_sample.X.row(i) = x.transpose();
    }
  }

  SolverOptions base_opts;
  base_opts.starts = 5;
  base_opts.seed = mix_seed(seed, 4);
  FitResult base_pilot = fit_tau_lasso(sc_sample, lambda, tuning, base_opts);
  FitResult base_fit =
      fit_adaptive_tau_lasso(sc_sample, lambda, tuning, base_pilot.beta, 1.0, 0.0, base_opts);

  FunctionalValue pilot_fv, adaptive_fv;
  ExpectationEngine engine;
  if (config.empirical_plugin) {
    pilot_fv.s_inf = base_pilot.s;
    pilot_fv.beta_inf = base_pilot.beta;
    pilot_fv.lambda = lambda;
    adaptive_fv.s_inf = base_fit.s;
    adaptive_fv.beta_inf = base_fit.beta;
    adaptive_fv.lambda = lambda;
    engine = ExpectationEngine::empirical(sc_sample);
  } else {
    pilot_fv = estimate_functional_tau_lasso(drawer, 1, config.functional_n, lambda, tuning,
                                             mix_seed(seed, 1));
    adaptive_fv = estimate_functional_adaptive_tau_lasso(drawer, 1, config.functional_n, lambda,
                                                         lambda, tuning, mix_seed(seed, 1));
    engine =
        ExpectationEngine::model_based(drawer, 1, config.expectation_draws, mix_seed(seed, 2));
  }
  InfluenceContext pilot_ctx = make_influence_context(pilot_fv, engine, tuning);
  InfluenceContext adaptive_ctx = make_influence_context(adaptive_fv, engine, tuning);

  InfluenceReport report;
  for (double y0 = config.grid_min; y0 <= config.grid_max + 1e-12; y0 += config.grid_step)
    for (double x0 = config.grid_min; x0 <= config.grid_max + 1e-12; x0 += config.grid_step)
      report.grid.emplace_back(y0, VectorXd::Constant(1, x0));

  report.if_values.resize(report.grid.size());
  parallel_for(report.grid.size(), [&](std::size_t i) {
    const auto& [y0, x0] = report.grid[i];
    VectorXd pilot_if = if_tau_lasso(y0, x0, pilot_ctx);
    report.if_values[i] = if_adaptive_tau_lasso(y0, x0, adaptive_ctx, pilot_fv, pilot_if);
  });

  if (config.compute_sc) {
    PointEstimator estimator = [&](const Dataset& d) {
      FitResult pilot = fit_tau_lasso(d, lambda, tuning, base_opts);
      FitResult fit = fit_adaptive_tau_lasso(d, lambda, tuning, pilot.beta, 1.0, 0.0, base_opts);
      return std::make_pair(fit.s, fit.beta);
    };
    std::pair<double, VectorXd> base = {base_fit.s, base_fit.beta};

    report.sc_values.resize(report.grid.size());
    parallel_for(report.grid.size(), [&](std::size_t i) {
      const auto& [y0, x0] = report.grid[i];
      report.sc_values[i] = sensitivity_curve(sc_sample, y0, x0, estimator, base);
    });

    double dev2 = 0.0, sc2 = 0.0, max_dev = 0.0;
    for (std::size_t i = 0; i < report.grid.size(); ++i) {
      VectorXd d = report.if_values[i] - report.sc_values[i];
      dev2 += d.squaredNorm();
      sc2 += report.sc_values[i].squaredNorm();
      max_dev = std::max(max_dev, d.cwiseAbs().maxCoeff());
    }
    report.max_abs_deviation = max_dev;
    report.nrmsd = sc2 > 0.0 ? std::sqrt(dev2 / sc2) : 0.0;
  }
  return report;
}

void write_table_csv(const TableReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InvalidInputError("write_table_csv: cannot open " + path);
  out << "scenario,estimator,error_law,contaminated,metric,mean,std_error,trials,failures\n";
  const char* metric_names[5] = {"rmse", "mad", "fnr", "fpr", "cer"};
  for (const TableCell& cell : report.cells) {
    const MetricStat* stats[5] = {&cell.rmse, &cell.mad, &cell.fnr, &cell.fpr, &cell.cer};
    for (int m = 0; m < 5; ++m) {
      out << cell.scenario << "," << cell.estimator << "," << cell.error_law << ","
          << (cell.contaminated ? 1 : 0) << "," << metric_names[m] << ",";
      emit_num(out, stats[m]->mean);
      out << ",";
      emit_num(out, stats[m]->std_error);
      out << "," << cell.trials << "," << cell.failures << "\n";
    }
  }
}

void write_breakdown_csv(const BreakdownReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InvalidInputError("write_breakdown_csv: cannot open " + path);
  out << "ystar,estimator,mean_rmse,std_error,trials,failures\n";
  for (const BreakdownPoint& point : report.points) {
    emit_num(out, point.ystar);
    out << "," << point.estimator << ",";
    emit_num(out, point.rmse.mean);
    out << ",";
    emit_num(out, point.rmse.std_error);
    out << "," << point.trials << "," << point.failures << "\n";
  }
}

void write_overshrink_csv(const OvershrinkReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InvalidInputError("write_overshrink_csv: cannot open " + path);
  out << "lambda,estimator,coefficient,true_value,mean_bias,std_error\n";
  for (const BiasPathPoint& point : report.points) {
    emit_num(out, point.lambda);
    out << "," << point.estimator << "," << point.coefficient + 1 << ",";
    emit_num(out, report.beta0(point.coefficient));
    out << ",";
    emit_num(out, point.bias.mean);
    out << ",";
    emit_num(out, point.bias.std_error);
    out << "\n";
  }
}

void write_table_json(const TableReport& report, const std::string& config_echo,
                      const std::string& path) {
  nlohmann::ordered_json j;
  j["config"] = config_echo.empty() ? nlohmann::ordered_json::object()
                                    : nlohmann::ordered_json::parse(config_echo);
  j["seed"] = report.seed;
  j["trials"] = report.trials;
  j["cells"] = nlohmann::ordered_json::array();
  for (const TableCell& cell : report.cells) {
    nlohmann::ordered_json c;
    c["scenario"] = cell.scenario;
    c["estimator"] = cell.estimator;
    c["error_law"] = cell.error_law;
    c["contaminated"] = cell.contaminated;
    c["trials"] = cell.trials;
    c["failures"] = cell.failures;
    auto put = [&](const char* name, const MetricStat& s) {
      c[name] = {{"mean", s.mean}, {"std_error", s.std_error}};
    };
    put("rmse", cell.rmse);
    put("mad", cell.mad);
    put("fnr", cell.fnr);
    put("fpr", cell.fpr);
    put("cer", cell.cer);
    j["cells"].push_back(c);
  }
  std::ofstream out(path);
  if (!out) throw InvalidInputError("write_table_json: cannot open " + path);
  out << j.dump(2) << "\n";
}

}  // namespace taulasso
