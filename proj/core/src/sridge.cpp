#include "taulasso/sridge.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "taulasso/model_selection.hpp"
#include "taulasso/rng.hpp"

namespace taulasso {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct RidgeRun {
  VectorXd beta;
  double s = 0.0;
  double objective = kInf;
  std::vector<double> trace;
  bool converged = false;
};

RidgeRun irls_ridge_run(const Dataset& data, double lambda, const TuningPair& tuning,
                        const VectorXd& init, const SolverOptions& opts) {
  const Eigen::Index n = data.n(), p = data.p();
  const RhoFamily rho0 = tuning.rho0();

  RidgeRun run;
  run.beta = init;
  VectorXd r = data.y - data.X * run.beta;
  ScaleEstimate sc = m_scale(r, rho0, tuning.delta);
  run.s = sc.s;
  double obj = run.s * run.s + lambda * run.beta.squaredNorm();
  run.trace.push_back(obj);
  if (run.s == 0.0) {
    run.objective = obj;
    run.converged = true;
    return run;
  }

  // dual (kernel) solve pays off once p outgrows n; the Gram matrix is fixed
  const bool dual = p > n;
  MatrixXd gram;
  if (dual) gram = data.X * data.X.transpose();

  for (int outer = 0; outer < opts.max_outer; ++outer) {
    // Surrogate: (1/B) sum omega_i r_i^2 + lambda ||b||^2 with
    // omega_i = psi0(t_i)/t_i and B = sum psi0(t_i) t_i, whose gradient at the
    // current beta matches that of s^2.
    ArrayXd omega(n);
    double B = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      double t = r(i) / run.s;
      omega(i) = rho0.weight(t);
      B += rho0.psi(t) * t;
    }
    if (B <= 0.0) break;  // all residuals in the flat region; cannot improve

    const double mu = lambda * B;
    VectorXd cand;
    if (dual && mu > 0.0) {
      // b = X^T D (D G D + mu I)^{-1} D y with D = diag(sqrt(omega))
      ArrayXd d = omega.sqrt();
      MatrixXd M = gram.array().colwise() * d;
      M = M.array().rowwise() * d.transpose();
      M.diagonal().array() += mu;
      VectorXd z = M.ldlt().solve((data.y.array() * d).matrix());
      cand = data.X.transpose() * (z.array() * d).matrix();
    } else {
      MatrixXd Xw = data.X.array().colwise() * omega;
      MatrixXd G = data.X.transpose() * Xw;
      G.diagonal().array() += mu;
      cand = G.ldlt().solve(Xw.transpose() * data.y);
    }

    VectorXd dir = cand - run.beta;
    double eta = 1.0;
    bool accepted = false;
    VectorXd beta_new, r_new;
    double s_new = run.s, obj_new = obj;
    while (eta >= opts.min_step) {
      beta_new = run.beta + eta * dir;
      r_new = data.y - data.X * beta_new;
      ScaleEstimate sc_new = m_scale(r_new, rho0, tuning.delta, run.s);
      s_new = sc_new.s;
      obj_new = s_new * s_new + lambda * beta_new.squaredNorm();
      if (!std::isfinite(obj_new)) throw SolverDivergenceError("s-ridge: non-finite objective");
      if (obj_new <= obj) {
        accepted = true;
        break;
      }
      eta *= 0.5;
    }
    if (!accepted) {
      run.converged = true;
      break;
    }
    double drop = obj - obj_new;
    run.beta = beta_new;
    r = r_new;
    run.s = s_new;
    obj = obj_new;
    run.trace.push_back(obj);
    if (run.s == 0.0 || drop <= opts.objective_tol * std::abs(obj)) {
      run.converged = true;
      break;
    }
  }
  run.objective = obj;
  return run;
}

VectorXd ridge_ls_start(const Dataset& data, double lambda) {
  MatrixXd G = data.X.transpose() * data.X;
  G.diagonal().array() += std::max(lambda, 1e-3 * G.trace() / static_cast<double>(data.p()));
  return G.ldlt().solve(data.X.transpose() * data.y);
}

VectorXd elemental_ls(const Dataset& data, std::mt19937_64& rng) {
  const Eigen::Index n = data.n(), p = data.p();
  const Eigen::Index m = std::min<Eigen::Index>(p, std::max<Eigen::Index>(1, n / 2));
  std::vector<int> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(static_cast<std::size_t>(m));
  Dataset sub = data.rows(idx);
  return sub.X.completeOrthogonalDecomposition().solve(sub.y);
}

}  // namespace

PilotResult fit_s_ridge(const Dataset& data, double lambda_ridge, const TuningPair& tuning,
                        const SolverOptions& opts) {
  data.validate();
  if (!(lambda_ridge >= 0.0) || !std::isfinite(lambda_ridge))
    throw InvalidParameterError("fit_s_ridge: lambda_ridge must be >= 0");
  if (opts.starts < 1) throw InvalidParameterError("fit_s_ridge: starts must be >= 1");

  std::mt19937_64 rng = make_engine(opts.seed);
  RidgeRun best = irls_ridge_run(data, lambda_ridge, tuning, ridge_ls_start(data, lambda_ridge), opts);
  {
    RidgeRun run = irls_ridge_run(data, lambda_ridge, tuning, leverage_screened_start(data), opts);
    if (run.objective < best.objective) best = std::move(run);
  }

  if (opts.starts > 1) {
    // same candidate screening as the l1 solver: cheap warmup on a pool of
    // elemental starts, full budget only for the best few
    const int pool = std::max(opts.candidate_pool > 0 ? opts.candidate_pool : 8 * opts.starts,
                              opts.starts) - 1;
    SolverOptions warm_opts = opts;
    warm_opts.max_outer = std::max(1, opts.warmup_iters);

    struct Candidate {
      double objective;
      int index;
      VectorXd beta;
    };
    std::vector<Candidate> candidates;
    for (int k = 0; k < pool; ++k) {
      RidgeRun warm = irls_ridge_run(data, lambda_ridge, tuning, elemental_ls(data, rng), warm_opts);
      if (!std::isfinite(warm.objective)) continue;
      candidates.push_back({warm.objective, k, std::move(warm.beta)});
    }
    std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
      return a.objective != b.objective ? a.objective < b.objective : a.index < b.index;
    });
    const int keep = std::min<int>(opts.starts - 1, static_cast<int>(candidates.size()));
    for (int k = 0; k < keep; ++k) {
      RidgeRun run = irls_ridge_run(data, lambda_ridge, tuning,
                                    candidates[static_cast<std::size_t>(k)].beta, opts);
      if (run.objective < best.objective) best = std::move(run);
    }
  }
  if (!std::isfinite(best.objective))
    throw SolverDivergenceError("s-ridge: no start produced a finite objective");

  PilotResult out;
  out.beta = std::move(best.beta);
  out.s = best.s;
  out.lambda_ridge = lambda_ridge;
  out.trace = std::move(best.trace);
  out.converged = best.converged;
  return out;
}

double select_pilot_lambda(const Dataset& data, const std::vector<double>& grid, int folds,
                           const TuningPair& tuning, std::uint64_t seed) {
  if (grid.empty()) throw InvalidParameterError("select_pilot_lambda: empty grid");
  SolverOptions opts;
  opts.seed = mix_seed(seed, 0x51d6e);
  CvResult cv = cross_validate(
      data,
      [&](const Dataset& train, double lambda) {
        SolverOptions o = opts;
        return fit_s_ridge(train, lambda, tuning, o).beta;
      },
      grid, folds, seed, tuning);
  return cv.best_lambda;
}

std::vector<double> default_ridge_grid(const Dataset& data, int n_lambda) {
  if (n_lambda < 1) throw InvalidParameterError("default_ridge_grid: n_lambda must be >= 1");
  double scale = data.X.squaredNorm() / static_cast<double>(data.n());
  double top = 1e2 * scale, bottom = 1e-6 * scale;
  std::vector<double> grid(static_cast<std::size_t>(n_lambda));
  if (n_lambda == 1) {
    grid[0] = std::sqrt(top * bottom);
    return grid;
  }
  double ratio = bottom / top;
  for (int i = 0; i < n_lambda; ++i)
    grid[static_cast<std::size_t>(i)] =
        top * std::pow(ratio, static_cast<double>(i) / static_cast<double>(n_lambda - 1));
  return grid;
}

}  // namespace taulasso
