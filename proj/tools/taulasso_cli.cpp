// Command-line front end: fitting, cross-validation, simulation studies,
// breakdown/overshrinkage curves, and influence diagnostics.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "taulasso/csv.hpp"
#include "taulasso/experiments.hpp"
#include "taulasso/model_selection.hpp"
#include "taulasso/parallel.hpp"
#include "taulasso/rho.hpp"
#include "taulasso/rng.hpp"
#include "taulasso/sridge.hpp"
#include "taulasso/standardize.hpp"

using json = nlohmann::ordered_json;
using namespace taulasso;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitPartialFailure = 4;

struct CommonOptions {
  std::uint64_t seed = 1;
  int threads = 0;
  double delta = 0.25;
  std::optional<double> c0;
  std::optional<double> c1;
  double gamma = 1.0;
  std::optional<double> epsilon_floor;
  int folds = 5;
  int n_lambda = 30;
  double lambda_ratio = 1e-3;
  int starts = 5;
  int cv_starts = 2;
  int ridge_n_lambda = 20;
  bool no_standardize = false;
};

void add_common(CLI::App* cmd, CommonOptions& opts, bool seed_required) {
  auto* seed_opt = cmd->add_option("--seed", opts.seed, "RNG seed");
  if (seed_required) seed_opt->required();
  cmd->add_option("--threads", opts.threads, "worker thread cap (0 = all cores)");
  cmd->add_option("--delta", opts.delta, "breakdown tuning constant in (0, 0.5]");
  cmd->add_option("--c0", opts.c0, "clipping constant of the scale rho (default from delta)");
  cmd->add_option("--c1", opts.c1, "clipping constant of the efficiency rho");
  cmd->add_option("--gamma", opts.gamma, "adaptive weight exponent");
  cmd->add_option("--epsilon-floor", opts.epsilon_floor,
                  "floor for pilot magnitudes in the adaptive weights");
  cmd->add_option("--folds", opts.folds, "cross-validation folds");
  cmd->add_option("--n-lambda", opts.n_lambda, "penalty grid size");
  cmd->add_option("--lambda-ratio", opts.lambda_ratio, "grid bottom as a fraction of the top");
  cmd->add_option("--starts", opts.starts, "multi-start budget for final fits");
  cmd->add_option("--cv-starts", opts.cv_starts, "multi-start budget inside CV paths");
  cmd->add_option("--ridge-n-lambda", opts.ridge_n_lambda, "pilot ridge grid size");
  cmd->add_flag("--no-standardize", opts.no_standardize, "skip robust standardization");
}

TuningPair resolve_tuning(const CommonOptions& opts) {
  double c0 = opts.c0 ? *opts.c0 : (opts.delta == 0.25 ? 2.9370 : calibrate_breakdown(opts.delta));
  double c1 = opts.c1 ? *opts.c1 : 5.1425;
  return TuningPair(c0, c1, opts.delta);
}

PipelineOptions resolve_pipeline(const CommonOptions& opts) {
  PipelineOptions p;
  p.tuning = resolve_tuning(opts);
  p.folds = opts.folds;
  p.n_lambda = opts.n_lambda;
  p.grid_ratio = opts.lambda_ratio;
  p.ridge_n_lambda = opts.ridge_n_lambda;
  p.starts = opts.starts;
  p.cv_starts = opts.cv_starts;
  p.gamma = opts.gamma;
  p.epsilon_floor = opts.epsilon_floor;
  p.standardize_data = !opts.no_standardize;
  return p;
}

json echo_common(const CommonOptions& opts, const TuningPair& tuning) {
  json j;
  j["seed"] = opts.seed;
  j["threads"] = opts.threads;
  j["delta"] = tuning.delta;
  j["c0"] = tuning.c0;
  j["c1"] = tuning.c1;
  j["gamma"] = opts.gamma;
  if (opts.epsilon_floor)
    j["epsilon_floor"] = *opts.epsilon_floor;
  else
    j["epsilon_floor"] = "auto";
  j["folds"] = opts.folds;
  j["n_lambda"] = opts.n_lambda;
  j["lambda_ratio"] = opts.lambda_ratio;
  j["starts"] = opts.starts;
  j["cv_starts"] = opts.cv_starts;
  j["ridge_n_lambda"] = opts.ridge_n_lambda;
  j["standardize"] = !opts.no_standardize;
  return j;
}

void write_json_output(const json& j, const std::string& output) {
  if (output.empty()) {
    std::cout << j.dump(2) << "\n";
    return;
  }
  std::ofstream out(output);
  if (!out) throw InvalidInputError("cannot open output file " + output);
  out << j.dump(2) << "\n";
}

std::vector<double> parse_grid_expr(const std::string& expr) {
  // "a:b:logK" or "a:b:linK" or comma-separated values
  auto fail = [&]() -> std::vector<double> {
    throw InvalidParameterError("cannot parse grid expression '" + expr + "'");
  };
  if (expr.find(':') == std::string::npos) {
    std::vector<double> vals;
    std::stringstream ss(expr);
    std::string tok;
    while (std::getline(ss, tok, ',')) vals.push_back(std::stod(tok));
    if (vals.empty()) return fail();
    return vals;
  }
  std::stringstream ss(expr);
  std::string a, b, c;
  if (!std::getline(ss, a, ':') || !std::getline(ss, b, ':') || !std::getline(ss, c)) return fail();
  double lo = std::stod(a), hi = std::stod(b);
  bool logsp;
  int count;
  if (c.rfind("log", 0) == 0) {
    logsp = true;
    count = std::stoi(c.substr(3));
  } else if (c.rfind("lin", 0) == 0) {
    logsp = false;
    count = std::stoi(c.substr(3));
  } else {
    return fail();
  }
  if (count < 2) return fail();
  if (logsp && (lo <= 0.0 || hi <= 0.0)) return fail();
  std::vector<double> vals(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    double t = static_cast<double>(i) / static_cast<double>(count - 1);
    vals[static_cast<std::size_t>(i)] =
        logsp ? lo * std::pow(hi / lo, t) : lo + (hi - lo) * t;
  }
  return vals;
}

json vector_to_json(const VectorXd& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

// ---------------------------------------------------------------- fit / cv

struct FitArgs {
  std::string input;
  std::string output;
  std::string estimator = "tau-lasso";
  std::string pilot = "s-ridge";
  std::optional<double> lambda;
  std::optional<double> pilot_lambda;
  bool use_cv = false;
};

int run_fit(const FitArgs& args, const CommonOptions& common) {
  CsvDataset csv = read_dataset_csv(args.input);
  PipelineOptions pipeline = resolve_pipeline(common);
  pipeline.fixed_lambda = args.lambda;
  pipeline.fixed_pilot_lambda = args.pilot_lambda;
  pipeline.pilot_kind = args.pilot == "tau-lasso" ? PilotKind::TauLasso : PilotKind::SRidge;

  if (!args.use_cv && !args.lambda)
    throw InvalidParameterError("fit: pass --lambda or --cv");

  PipelineFit fit;
  if (args.estimator == "tau-lasso") {
    fit = fit_pipeline(csv.data, EstimatorKind::TauLasso, pipeline, common.seed);
  } else if (args.estimator == "adaptive") {
    fit = fit_pipeline(csv.data, EstimatorKind::AdaptiveTauLasso, pipeline, common.seed);
  } else if (args.estimator == "s-ridge") {
    fit = fit_sridge_pipeline(csv.data, pipeline, common.seed);
  } else {
    throw InvalidParameterError("fit: unknown estimator " + args.estimator);
  }

  json j;
  j["beta"] = vector_to_json(fit.beta);
  j["s"] = fit.s;
  j["tau"] = fit.tau;
  j["lambda"] = fit.lambda;
  j["active_set"] = fit.active_set;
  j["objective"] = fit.objective;
  j["trace_length"] = fit.trace_length;
  j["seed"] = common.seed;
  j["intercept"] = fit.intercept;
  j["pilot_lambda"] = fit.pilot_lambda;
  j["converged"] = fit.converged;
  json cfg = echo_common(common, pipeline.tuning);
  cfg["command"] = "fit";
  cfg["input"] = args.input;
  cfg["estimator"] = args.estimator;
  cfg["pilot"] = args.pilot;
  cfg["cv"] = args.use_cv;
  if (args.lambda) cfg["lambda"] = *args.lambda;
  j["config"] = cfg;
  write_json_output(j, args.output);
  return kExitOk;
}

struct CvArgs {
  std::string input;
  std::string output;
  std::string estimator = "tau-lasso";
};

int run_cv(const CvArgs& args, const CommonOptions& common) {
  CsvDataset csv = read_dataset_csv(args.input);
  PipelineOptions pipeline = resolve_pipeline(common);
  Dataset work = csv.data;
  StandardizationMap map;
  if (pipeline.standardize_data) {
    auto [std_data, std_map] = standardize(csv.data);
    work = std::move(std_data);
    map = std_map;
  }

  std::vector<double> grid;
  FitFunction fit_fn;
  SolverOptions solver_opts;
  solver_opts.starts = pipeline.cv_starts;
  solver_opts.seed = mix_seed(common.seed, 0xc1d);
  if (args.estimator == "tau-lasso") {
    grid = make_lambda_grid(work, pipeline.tuning, pipeline.n_lambda, pipeline.grid_ratio);
    fit_fn = [&](const Dataset& train, double lambda) {
      return fit_tau_lasso(train, lambda, pipeline.tuning, solver_opts).beta;
    };
  } else if (args.estimator == "s-ridge") {
    grid = default_ridge_grid(work, pipeline.ridge_n_lambda);
    fit_fn = [&](const Dataset& train, double lambda) {
      return fit_s_ridge(train, lambda, pipeline.tuning, solver_opts).beta;
    };
  } else {
    throw InvalidParameterError("cv: unknown estimator " + args.estimator);
  }

  CvResult cv = cross_validate(work, fit_fn, grid, pipeline.folds, common.seed, pipeline.tuning);
  json j;
  j["lambda_grid"] = cv.lambda_grid;
  j["cv_scores"] = cv.cv_scores;
  j["best_lambda"] = cv.best_lambda;
  j["fold_assignments"] = cv.fold_assignments;
  j["seed"] = cv.seed;
  j["warnings"] = cv.warnings;
  json cfg = echo_common(common, pipeline.tuning);
  cfg["command"] = "cv";
  cfg["input"] = args.input;
  cfg["estimator"] = args.estimator;
  j["config"] = cfg;
  write_json_output(j, args.output);
  return kExitOk;
}

// ------------------------------------------------------------- simulate

struct SimulateArgs {
  std::string scenario;
  std::string spec_file;
  std::string error = "normal";
  bool contaminate = false;
  int trials = 100;
  std::string output = "taulasso_sim";
  std::string estimators = "tau-lasso,adaptive-tau-lasso,oracle";
  double failure_threshold = 0.1;
  std::string overlap = "coincident";
};

ScenarioSpec scenario_from_json_file(const std::string& path, ErrorLaw law, bool contaminated) {
  std::ifstream in(path);
  if (!in) throw InvalidInputError("cannot open spec file " + path);
  json j = json::parse(in, nullptr, true, true);
  ScenarioSpec spec;
  spec.name = j.value("name", std::string("custom"));
  spec.n = j.at("n").get<int>();
  spec.p = j.at("p").get<int>();
  spec.beta0 = VectorXd::Zero(spec.p);
  auto arr = j.at("beta0");
  if (static_cast<int>(arr.size()) != spec.p)
    throw InvalidInputError("spec file: beta0 length mismatch");
  for (int i = 0; i < spec.p; ++i) spec.beta0(i) = arr[static_cast<std::size_t>(i)].get<double>();
  double rho = j.value("toeplitz_rho", 0.0);
  spec.covariance = toeplitz_covariance(spec.p, rho);
  if (j.contains("snr_db")) spec.snr_db = j["snr_db"].get<double>();
  spec.error_law = law;
  if (law != ErrorLaw::Normal) spec.snr_db.reset();
  if (contaminated) spec.contamination = ContaminationPlan{};
  spec.validate();
  return spec;
}

int run_simulate(const SimulateArgs& args, const CommonOptions& common) {
  ErrorLaw law = error_law_from_string(args.error);
  ScenarioSpec spec;
  if (!args.spec_file.empty()) {
    spec = scenario_from_json_file(args.spec_file, law, args.contaminate);
  } else {
    if (args.scenario.rfind("scenario", 0) != 0 || args.scenario.size() != 9)
      throw InvalidParameterError("unknown scenario '" + args.scenario + "'");
    int idx = args.scenario[8] - '0';
    if (idx < 1 || idx > 5)
      throw InvalidParameterError("unknown scenario '" + args.scenario + "'");
    spec = make_scenario(idx, law, args.contaminate);
  }
  if (spec.contamination) {
    if (args.overlap == "coincident")
      spec.contamination->overlap = ContaminationPlan::Overlap::Coincident;
    else if (args.overlap == "disjoint")
      spec.contamination->overlap = ContaminationPlan::Overlap::Disjoint;
    else if (args.overlap == "independent")
      spec.contamination->overlap = ContaminationPlan::Overlap::Independent;
    else
      throw InvalidParameterError("unknown overlap mode '" + args.overlap + "'");
  }

  std::vector<EstimatorKind> kinds;
  {
    std::stringstream ss(args.estimators);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      if (tok == "tau-lasso")
        kinds.push_back(EstimatorKind::TauLasso);
      else if (tok == "adaptive-tau-lasso" || tok == "adaptive")
        kinds.push_back(EstimatorKind::AdaptiveTauLasso);
      else if (tok == "oracle")
        kinds.push_back(EstimatorKind::OracleTau);
      else
        throw InvalidParameterError("unknown estimator '" + tok + "'");
    }
  }

  PipelineOptions pipeline = resolve_pipeline(common);
  TableReport report =
      run_table_experiment({spec}, kinds, args.trials, common.seed, pipeline);

  json cfg = echo_common(common, pipeline.tuning);
  cfg["command"] = "simulate";
  cfg["scenario"] = spec.name;
  cfg["error"] = args.error;
  cfg["contaminate"] = args.contaminate;
  cfg["trials"] = args.trials;
  cfg["estimators"] = args.estimators;
  cfg["failure_threshold"] = args.failure_threshold;
  cfg["contamination_overlap"] = args.overlap;

  write_table_csv(report, args.output + "_report.csv");
  write_table_json(report, cfg.dump(), args.output + "_summary.json");

  for (const TableCell& cell : report.cells) {
    if (cell.failures > args.failure_threshold * cell.trials) {
      std::cerr << "cell " << cell.scenario << "/" << cell.estimator << ": " << cell.failures
                << " failed trials out of " << cell.trials << "\n";
      return kExitPartialFailure;
    }
  }
  return kExitOk;
}

// ------------------------------------------------- breakdown / overshrink

struct BreakdownArgs {
  std::string ystar = "0.1:100:log20";
  int trials = 100;
  std::string output = "taulasso_breakdown";
};

int run_breakdown(const BreakdownArgs& args, const CommonOptions& common) {
  std::vector<double> grid = parse_grid_expr(args.ystar);
  PipelineOptions pipeline = resolve_pipeline(common);
  BreakdownReport report = run_breakdown_curve(grid, args.trials, common.seed, pipeline);
  write_breakdown_csv(report, args.output + "_breakdown.csv");

  json j = echo_common(common, pipeline.tuning);
  j["command"] = "breakdown";
  j["ystar"] = args.ystar;
  j["trials"] = args.trials;
  write_json_output(j, args.output + "_summary.json");

  for (const BreakdownPoint& point : report.points)
    if (point.failures > 0.1 * point.trials) return kExitPartialFailure;
  return kExitOk;
}

struct OvershrinkArgs {
  int n_lambda = 12;
  int trials = 100;
  std::string output = "taulasso_overshrink";
};

int run_overshrink(const OvershrinkArgs& args, const CommonOptions& common) {
  PipelineOptions pipeline = resolve_pipeline(common);
  OvershrinkReport report = run_overshrinkage(args.n_lambda, args.trials, common.seed, pipeline);
  write_overshrink_csv(report, args.output + "_bias.csv");

  json j = echo_common(common, pipeline.tuning);
  j["command"] = "overshrink";
  j["n_lambda"] = args.n_lambda;
  j["trials"] = args.trials;
  write_json_output(j, args.output + "_summary.json");
  return kExitOk;
}

// ------------------------------------------------------------- influence

struct InfluenceArgs {
  bool toy_1d = false;
  double lambda_scale = 0.1;
  int sc_n = 1000;
  double grid_min = -10.0, grid_max = 10.0, grid_step = 1.0;
  std::size_t functional_n = 100000;
  std::size_t expectation_draws = 1000000;
  bool no_sc = false;
  bool model_functional = false;
  std::string output = "taulasso_influence";
};

int run_influence(const InfluenceArgs& args, const CommonOptions& common) {
  if (!args.toy_1d)
    throw InvalidParameterError("influence: only the --toy-1d study is available");
  IfValidationConfig config;
  config.tuning = resolve_tuning(common);
  config.lambda_scale = args.lambda_scale;
  config.sc_n = args.sc_n;
  config.grid_min = args.grid_min;
  config.grid_max = args.grid_max;
  config.grid_step = args.grid_step;
  config.functional_n = args.functional_n;
  config.expectation_draws = args.expectation_draws;
  config.compute_sc = !args.no_sc;
  config.empirical_plugin = !args.model_functional;

  InfluenceReport report = run_if_validation(config, common.seed);
  write_influence_csv(report, args.output + "_influence.csv");

  json j = echo_common(common, config.tuning);
  j["command"] = "influence";
  j["lambda_scale"] = args.lambda_scale;
  j["sc_n"] = args.sc_n;
  j["grid"] = {args.grid_min, args.grid_max, args.grid_step};
  j["functional_n"] = args.functional_n;
  j["expectation_draws"] = args.expectation_draws;
  j["empirical_plugin"] = !args.model_functional;
  j["max_abs_deviation"] = report.max_abs_deviation;
  j["nrmsd"] = report.nrmsd;
  write_json_output(j, args.output + "_summary.json");
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"robust sparse regression toolkit"};
  app.require_subcommand(1);

  CommonOptions common;

  FitArgs fit_args;
  CLI::App* fit_cmd = app.add_subcommand("fit", "fit one model to a CSV dataset");
  fit_cmd->add_option("--input", fit_args.input, "CSV file, first column y")->required();
  fit_cmd->add_option("--output", fit_args.output, "JSON output path (default stdout)");
  fit_cmd->add_option("--estimator", fit_args.estimator, "tau-lasso | adaptive | s-ridge");
  fit_cmd->add_option("--pilot", fit_args.pilot, "adaptive pilot: s-ridge | tau-lasso");
  fit_cmd->add_option("--lambda", fit_args.lambda, "fixed penalty level");
  fit_cmd->add_option("--pilot-lambda", fit_args.pilot_lambda, "fixed pilot penalty");
  fit_cmd->add_flag("--cv", fit_args.use_cv, "select the penalty by cross-validation");
  add_common(fit_cmd, common, false);

  CvArgs cv_args;
  CLI::App* cv_cmd = app.add_subcommand("cv", "cross-validate the penalty on a CSV dataset");
  cv_cmd->add_option("--input", cv_args.input, "CSV file, first column y")->required();
  cv_cmd->add_option("--output", cv_args.output, "JSON output path (default stdout)");
  cv_cmd->add_option("--estimator", cv_args.estimator, "tau-lasso | s-ridge");
  add_common(cv_cmd, common, false);

  SimulateArgs sim_args;
  CLI::App* sim_cmd = app.add_subcommand("simulate", "Monte-Carlo estimator comparison");
  sim_cmd->add_option("--scenario", sim_args.scenario, "scenario1 .. scenario5");
  sim_cmd->add_option("--spec-file", sim_args.spec_file, "JSON scenario description");
  sim_cmd->add_option("--error", sim_args.error, "normal | t3 | t1");
  sim_cmd->add_flag("--contaminate", sim_args.contaminate, "inject outliers and leverage points");
  sim_cmd->add_option("--trials", sim_args.trials, "Monte-Carlo trials");
  sim_cmd->add_option("--output", sim_args.output, "output path prefix");
  sim_cmd->add_option("--estimators", sim_args.estimators, "comma-separated estimator list");
  sim_cmd->add_option("--failure-threshold", sim_args.failure_threshold,
                      "tolerated failed-trial fraction");
  sim_cmd->add_option("--contamination-overlap", sim_args.overlap,
                      "coincident | disjoint | independent");
  add_common(sim_cmd, common, true);

  BreakdownArgs bd_args;
  CLI::App* bd_cmd = app.add_subcommand("breakdown", "RMSE versus outlier magnitude");
  bd_cmd->add_option("--ystar", bd_args.ystar, "grid: a:b:logK, a:b:linK, or comma list");
  bd_cmd->add_option("--trials", bd_args.trials, "Monte-Carlo trials");
  bd_cmd->add_option("--output", bd_args.output, "output path prefix");
  add_common(bd_cmd, common, true);

  OvershrinkArgs os_args;
  CLI::App* os_cmd = app.add_subcommand("overshrink", "bias paths over the penalty grid");
  os_cmd->add_option("--n-lambda-grid", os_args.n_lambda, "bias-path grid size");
  os_cmd->add_option("--trials", os_args.trials, "Monte-Carlo trials");
  os_cmd->add_option("--output", os_args.output, "output path prefix");
  add_common(os_cmd, common, true);

  InfluenceArgs if_args;
  CLI::App* if_cmd = app.add_subcommand("influence", "influence function versus sensitivity curve");
  if_cmd->add_flag("--toy-1d", if_args.toy_1d, "one-dimensional toy study");
  if_cmd->add_option("--lambda-scale", if_args.lambda_scale, "penalty = scale / n");
  if_cmd->add_option("--sc-n", if_args.sc_n, "sample size behind the sensitivity curve");
  if_cmd->add_option("--grid-min", if_args.grid_min, "grid lower bound");
  if_cmd->add_option("--grid-max", if_args.grid_max, "grid upper bound");
  if_cmd->add_option("--grid-step", if_args.grid_step, "grid spacing");
  if_cmd->add_option("--functional-n", if_args.functional_n, "sample size for the functional");
  if_cmd->add_option("--expectation-draws", if_args.expectation_draws, "Monte-Carlo draws");
  if_cmd->add_flag("--no-sc", if_args.no_sc, "skip the sensitivity-curve refits");
  if_cmd->add_flag("--model-functional", if_args.model_functional,
                   "evaluate the influence function at fresh model draws instead of the sample");
  if_cmd->add_option("--output", if_args.output, "output path prefix");
  add_common(if_cmd, common, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  if (common.threads > 0) set_max_threads(common.threads);

  try {
    if (fit_cmd->parsed()) return run_fit(fit_args, common);
    if (cv_cmd->parsed()) return run_cv(cv_args, common);
    if (sim_cmd->parsed()) return run_simulate(sim_args, common);
    if (bd_cmd->parsed()) return run_breakdown(bd_args, common);
    if (os_cmd->parsed()) return run_overshrink(os_args, common);
    if (if_cmd->parsed()) return run_influence(if_args, common);
  } catch (const CsvError& e) {
    std::cerr << "input error at line " << e.line() << ", column " << e.column() << ": "
              << e.what() << "\n";
    return kExitInput;
  } catch (const InvalidParameterError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const InvalidInputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const Error& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
  return kExitOk;
}
