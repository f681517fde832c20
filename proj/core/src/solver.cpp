#include "taulasso/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "taulasso/rng.hpp"
#include "taulasso/standardize.hpp"

namespace taulasso {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double soft_threshold(double a, double k) {
  if (a > k) return a - k;
  if (a < -k) return a + k;
  return 0.0;
}

// Per-observation weights of the IRWLS surrogate: omega_i = psi(t_i)/t_i with
// the combined psi. Falls back to psi1-only when psi0's weight mass is zero.
ArrayXd irwls_weights(const VectorXd& r, double s, const TuningPair& tuning) {
  const RhoFamily rho0 = tuning.rho0(), rho1 = tuning.rho1();
  double wbar;
  try {
    wbar = combined_psi_weight(r, s, rho0, rho1);
  } catch (const DegenerateWeightError&) {
    wbar = 0.0;
  }
  ArrayXd omega(r.size());
  for (Eigen::Index i = 0; i < r.size(); ++i) {
    double t = r(i) / s;
    omega(i) = wbar * rho0.weight(t) + rho1.weight(t);
  }
  return omega;
}

// Cyclic coordinate descent for
//   min_b (1/(2n)) sum omega_i (y_i - x_i^T b)^2 + lambda ||b||_1,
// warm-started at beta. Residuals are maintained incrementally.
void cd_weighted_lasso(const MatrixXd& X, const VectorXd& y, const ArrayXd& omega,
                       double lambda, VectorXd& beta, const SolverOptions& opts) {
  const Eigen::Index n = X.rows(), p = X.cols();
  MatrixXd Xw = X.array().colwise() * omega;  // omega-scaled rows, by column
  VectorXd z(p);
  for (Eigen::Index j = 0; j < p; ++j)
    z(j) = Xw.col(j).dot(X.col(j)) / static_cast<double>(n);

  VectorXd r = y - X * beta;
  for (int sweep = 0; sweep < opts.max_cd_sweeps; ++sweep) {
    double max_change = 0.0;
    double max_beta = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) {
      double old = beta(j);
      if (z(j) <= 0.0) {
        if (old != 0.0) {
          beta(j) = 0.0;
          r += X.col(j) * old;
        }
        continue;
      }
      double rho_j = Xw.col(j).dot(r) / static_cast<double>(n) + z(j) * old;
      double next = soft_threshold(rho_j, lambda) / z(j);
      if (next != old) {
        beta(j) = next;
        r -= X.col(j) * (next - old);
        max_change = std::max(max_change, std::abs(next - old));
      }
      max_beta = std::max(max_beta, std::abs(next));
    }
    if (max_change <= opts.cd_tol * (1.0 + max_beta)) break;
  }
}

struct SingleFit {
  VectorXd beta;
  double s = 0.0;
  double objective = kInf;
  std::vector<double> trace;
  bool converged = false;
  bool exact_fit = false;
  bool weights_dead = false;  // every surrogate weight vanished; caller restarts
};

// One IRWLS descent run from a fixed starting point.
SingleFit irwls_run(const Dataset& data, double lambda, const TuningPair& tuning,
                    const VectorXd& init, const SolverOptions& opts) {
  const Eigen::Index n = data.n();
  const RhoFamily rho0 = tuning.rho0(), rho1 = tuning.rho1();

  // residual scales at rounding level relative to the response count as an
  // exact fit
  const double s_floor = 1e-12 * data.y.cwiseAbs().maxCoeff();

  SingleFit fit;
  fit.beta = init;
  VectorXd r = data.y - data.X * fit.beta;
  ScaleEstimate sc = m_scale(r, rho0, tuning.delta);
  if (sc.s <= s_floor) {
    fit.s = 0.0;
    fit.objective = lambda * fit.beta.cwiseAbs().sum();
    fit.trace.push_back(fit.objective);
    fit.exact_fit = true;
    fit.converged = true;
    return fit;
  }
  fit.s = sc.s;
  double obj = tau_squared_given_scale(r, fit.s, rho1) + lambda * fit.beta.cwiseAbs().sum();
  if (!std::isfinite(obj)) throw SolverDivergenceError("tau lasso: non-finite objective");
  fit.trace.push_back(obj);

  for (int outer = 0; outer < opts.max_outer; ++outer) {
    ArrayXd omega = irwls_weights(r, fit.s, tuning);
    if ((omega > 0.0).count() == 0) {
      fit.weights_dead = true;
      return fit;
    }

    VectorXd cand = fit.beta;
    cd_weighted_lasso(data.X, data.y, omega, lambda, cand, opts);

    // Step-halving on the true objective keeps the descent monotone even
    // though the surrogate is not a global majorizer.
    VectorXd dir = cand - fit.beta;
    double eta = 1.0;
    bool accepted = false;
    bool hit_exact_fit = false;
    VectorXd beta_new, r_new;
    double s_new = fit.s, obj_new = obj;
    while (eta >= opts.min_step) {
      beta_new = fit.beta + eta * dir;
      r_new = data.y - data.X * beta_new;
      ScaleEstimate sc_new = m_scale(r_new, rho0, tuning.delta, fit.s);
      if (sc_new.s <= s_floor) {
        s_new = 0.0;
        obj_new = lambda * beta_new.cwiseAbs().sum();
      } else {
        s_new = sc_new.s;
        obj_new =
            tau_squared_given_scale(r_new, s_new, rho1) + lambda * beta_new.cwiseAbs().sum();
      }
      if (!std::isfinite(obj_new)) throw SolverDivergenceError("tau lasso: non-finite objective");
      if (obj_new <= obj) {
        accepted = true;
        hit_exact_fit = s_new == 0.0;
        break;
      }
      eta *= 0.5;
    }
    if (!accepted) {
      fit.converged = true;  // no descent direction left; local minimizer
      break;
    }

    double drop = obj - obj_new;
    double move = (beta_new - fit.beta).cwiseAbs().maxCoeff();
    fit.beta = beta_new;
    r = r_new;
    fit.s = s_new;
    obj = obj_new;
    fit.trace.push_back(obj);
    if (hit_exact_fit) {
      fit.exact_fit = true;
      fit.converged = true;
      break;
    }
    if (drop <= opts.objective_tol * std::abs(obj)) {
      // Objective has flattened; stop once the generalized gradient is
      // consistent too, or once the iterates stop moving.
      VectorXd g = tau_squared_gradient(data, fit.beta, tuning);
      double gap = 0.0;
      for (Eigen::Index j = 0; j < fit.beta.size(); ++j) {
        if (fit.beta(j) == 0.0)
          gap = std::max(gap, std::max(0.0, std::abs(g(j)) - lambda));
        else
          gap = std::max(gap, std::abs(g(j) + lambda * (fit.beta(j) > 0 ? 1.0 : -1.0)));
      }
      double stat_tol = 1e-6 * (1.0 + g.cwiseAbs().maxCoeff());
      if (gap <= stat_tol || move <= 1e-13 * (1.0 + fit.beta.cwiseAbs().maxCoeff())) {
        fit.converged = true;
        break;
      }
    }
  }
  fit.objective = obj;
  return fit;
}

VectorXd ridge_start(const Dataset& data) {
  const Eigen::Index p = data.p();
  MatrixXd G = data.X.transpose() * data.X;
  double nu = 1e-3 * G.trace() / static_cast<double>(p) + 1e-12;
  G.diagonal().array() += nu;
  return G.ldlt().solve(data.X.transpose() * data.y);
}

double column_median(VectorXd v) {
  auto mid = v.data() + v.size() / 2;
  std::nth_element(v.data(), mid, v.data() + v.size());
  double hi = *mid;
  if (v.size() % 2 == 1) return hi;
  return 0.5 * (hi + *std::max_element(v.data(), mid));
}

}  // namespace

// Start candidate that survives clustered high-leverage contamination: drop
// rows whose largest coordinatewise robust z-score is extreme, ridge-fit the
// rest, then run two residual-trimming concentration steps.
VectorXd leverage_screened_start(const Dataset& data) {
  const Eigen::Index n = data.n(), p = data.p();
  VectorXd outlyingness = VectorXd::Zero(n);
  for (Eigen::Index j = 0; j < p; ++j) {
    VectorXd col = data.X.col(j);
    double med = column_median(col);
    VectorXd dev = (col.array() - med).abs();
    double mad = column_median(dev) / 0.6745;
    if (mad <= 0.0) continue;
    for (Eigen::Index i = 0; i < n; ++i)
      outlyingness(i) = std::max(outlyingness(i), dev(i) / mad);
  }

  auto rows_below = [&](double cut) {
    std::vector<int> keep;
    for (Eigen::Index i = 0; i < n; ++i)
      if (outlyingness(i) <= cut) keep.push_back(static_cast<int>(i));
    return keep;
  };
  std::vector<int> keep = rows_below(6.0);
  if (static_cast<Eigen::Index>(keep.size()) < (n + 1) / 2) {
    // cutoff too aggressive for this sample; keep the least outlying half
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return outlyingness(a) < outlyingness(b); });
    keep.assign(order.begin(), order.begin() + (n + 1) / 2);
    std::sort(keep.begin(), keep.end());
  }

  VectorXd beta = ridge_start(data.rows(keep));

  // two concentration steps: refit on the half-sample with the smallest
  // absolute residuals
  for (int round = 0; round < 2; ++round) {
    VectorXd r = (data.y - data.X * beta).cwiseAbs();
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return r(a) < r(b); });
    std::vector<int> half(order.begin(), order.begin() + (n + 1) / 2);
    std::sort(half.begin(), half.end());
    beta = ridge_start(data.rows(half));
  }
  return beta;
}

namespace {

VectorXd elemental_start(const Dataset& data, std::mt19937_64& rng) {
  const Eigen::Index n = data.n(), p = data.p();
  const Eigen::Index m = std::min<Eigen::Index>(p, std::max<Eigen::Index>(1, n / 2));
  std::vector<int> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(static_cast<std::size_t>(m));
  Dataset sub = data.rows(idx);
  // minimum-norm least squares on the subsample
  return sub.X.completeOrthogonalDecomposition().solve(sub.y);
}

double stationarity_gap(const Dataset& data, const VectorXd& beta, double lambda,
                        const TuningPair& tuning) {
  VectorXd g = tau_squared_gradient(data, beta, tuning);
  double gap = 0.0;
  for (Eigen::Index j = 0; j < beta.size(); ++j) {
    if (beta(j) == 0.0)
      gap = std::max(gap, std::max(0.0, std::abs(g(j)) - lambda));
    else
      gap = std::max(gap, std::abs(g(j) + lambda * (beta(j) > 0 ? 1.0 : -1.0)));
  }
  return gap;
}

FitResult finalize(const Dataset& data, SingleFit&& best, double lambda,
                   const TuningPair& tuning) {
  FitResult out;
  out.beta = std::move(best.beta);
  out.s = best.s;
  out.tau = best.exact_fit
                ? 0.0
                : std::sqrt(tau_squared_given_scale(data.y - data.X * out.beta, out.s,
                                                    tuning.rho1()));
  out.objective = best.objective;
  out.lambda = lambda;
  out.trace = std::move(best.trace);
  out.converged = best.converged;
  out.exact_fit = best.exact_fit;
  for (Eigen::Index j = 0; j < out.beta.size(); ++j)
    if (out.beta(j) != 0.0) out.active_set.push_back(static_cast<int>(j));
  if (!best.exact_fit) out.stationarity_gap = stationarity_gap(data, out.beta, lambda, tuning);
  return out;
}

}  // namespace

FitResult fit_tau_lasso(const Dataset& data, double lambda, const TuningPair& tuning,
                        const SolverOptions& opts, const VectorXd* init) {
  data.validate();
  if (!(lambda >= 0.0) || !std::isfinite(lambda))
    throw InvalidParameterError("fit_tau_lasso: lambda must be >= 0");
  if (opts.starts < 1) throw InvalidParameterError("fit_tau_lasso: starts must be >= 1");
  if (init && init->size() != data.p())
    throw InvalidInputError("fit_tau_lasso: init length mismatch");

  std::mt19937_64 rng = make_engine(opts.seed);
  SingleFit best;

  // The supplied (or default ridge) start always runs to convergence, and so
  // does the leverage-screened start: elemental subsamples rarely dodge a
  // coherent contamination cluster, the screen does.
  {
    VectorXd start = init ? *init : ridge_start(data);
    SingleFit run = irwls_run(data, lambda, tuning, start, opts);
    if (!run.weights_dead) best = std::move(run);
  }
  {
    SingleFit run = irwls_run(data, lambda, tuning, leverage_screened_start(data), opts);
    if (!run.weights_dead && run.objective < best.objective) best = std::move(run);
  }

  if (opts.starts > 1) {
    // Screen a pool of elemental candidates with a couple of descent steps;
    // only the most promising ones get the full iteration budget.
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
    candidates.reserve(static_cast<std::size_t>(pool));
    for (int k = 0; k < pool; ++k) {
      VectorXd start = elemental_start(data, rng);
      SingleFit warm = irwls_run(data, lambda, tuning, start, warm_opts);
      if (warm.weights_dead || !std::isfinite(warm.objective)) continue;
      candidates.push_back({warm.objective, k, std::move(warm.beta)});
    }
    std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
      return a.objective != b.objective ? a.objective < b.objective : a.index < b.index;
    });

    const int keep = std::min<int>(opts.starts - 1, static_cast<int>(candidates.size()));
    for (int k = 0; k < keep; ++k) {
      SingleFit run = irwls_run(data, lambda, tuning, candidates[static_cast<std::size_t>(k)].beta,
                                opts);
      if (!run.weights_dead && run.objective < best.objective) best = std::move(run);
    }
  }

  if (!std::isfinite(best.objective))
    throw SolverDivergenceError("tau lasso: all surrogate weights vanished");
  return finalize(data, std::move(best), lambda, tuning);
}

AdaptiveWeights AdaptiveWeights::from_pilot(const VectorXd& pilot, double gamma,
                                            double epsilon_floor) {
  if (!(gamma > 0.0)) throw InvalidParameterError("adaptive weights: gamma must be > 0");
  if (epsilon_floor < 0.0)
    throw InvalidParameterError("adaptive weights: epsilon floor must be >= 0");
  AdaptiveWeights aw;
  aw.gamma = gamma;
  aw.epsilon_floor = epsilon_floor;
  aw.w.resize(pilot.size());
  for (Eigen::Index j = 0; j < pilot.size(); ++j) {
    double mag = std::max(epsilon_floor, std::abs(pilot(j)));
    aw.w(j) = mag > 0.0 ? 1.0 / std::pow(mag, gamma) : kInf;
  }
  return aw;
}

FitResult fit_adaptive_tau_lasso(const Dataset& data, double lambda, const TuningPair& tuning,
                                 const VectorXd& pilot, double gamma, double epsilon_floor,
                                 const SolverOptions& opts, const VectorXd* init) {
  data.validate();
  if (pilot.size() != data.p())
    throw InvalidInputError("fit_adaptive_tau_lasso: pilot length mismatch");
  if (init && init->size() != data.p())
    throw InvalidInputError("fit_adaptive_tau_lasso: init length mismatch");
  AdaptiveWeights aw = AdaptiveWeights::from_pilot(pilot, gamma, epsilon_floor);

  std::vector<int> kept;
  for (Eigen::Index j = 0; j < aw.w.size(); ++j)
    if (std::isfinite(aw.w(j))) kept.push_back(static_cast<int>(j));
  if (kept.empty())
    throw DegeneratePilotError("fit_adaptive_tau_lasso: pilot is all zero with a zero epsilon floor");

  // Reduction: rescale the kept columns, solve a plain tau-lasso, undo the
  // scaling. Dropped columns stay at zero.
  Dataset reduced;
  reduced.y = data.y;
  reduced.X.resize(data.n(), static_cast<Eigen::Index>(kept.size()));
  VectorXd reduced_init(kept.size());
  for (std::size_t k = 0; k < kept.size(); ++k) {
    reduced.X.col(static_cast<Eigen::Index>(k)) = data.X.col(kept[k]) / aw.w(kept[k]);
    if (init) reduced_init(static_cast<Eigen::Index>(k)) = (*init)(kept[k]) * aw.w(kept[k]);
  }

  FitResult inner = fit_tau_lasso(reduced, lambda, tuning, opts, init ? &reduced_init : nullptr);

  FitResult out = inner;
  out.beta = VectorXd::Zero(data.p());
  out.active_set.clear();
  for (std::size_t k = 0; k < kept.size(); ++k) {
    double b = inner.beta(static_cast<Eigen::Index>(k)) / aw.w(kept[k]);
    out.beta(kept[k]) = b;
    if (b != 0.0) out.active_set.push_back(kept[k]);
  }
  return out;
}

double objective_value(const Dataset& data, const VectorXd& beta, double lambda,
                       const TuningPair& tuning, const VectorXd* penalty_weights) {
  data.validate();
  if (beta.size() != data.p()) throw InvalidInputError("objective: beta length mismatch");
  if (penalty_weights && penalty_weights->size() != beta.size())
    throw InvalidInputError("objective: weight length mismatch");
  VectorXd r = data.y - data.X * beta;
  ScaleEstimate sc = tau_scale(r, tuning.rho0(), tuning.rho1(), tuning.delta);
  double pen = 0.0;
  for (Eigen::Index j = 0; j < beta.size(); ++j) {
    if (beta(j) == 0.0) continue;  // keeps inf-weighted dropped coordinates at 0 * inf = 0
    pen += (penalty_weights ? (*penalty_weights)(j) : 1.0) * std::abs(beta(j));
  }
  return sc.tau * sc.tau + lambda * pen;
}

VectorXd tau_squared_gradient(const Dataset& data, const VectorXd& beta,
                              const TuningPair& tuning) {
  data.validate();
  if (beta.size() != data.p()) throw InvalidInputError("gradient: beta length mismatch");
  const Eigen::Index n = data.n();
  VectorXd r = data.y - data.X * beta;
  ScaleEstimate sc = m_scale(r, tuning.rho0(), tuning.delta);
  if (sc.s == 0.0) return VectorXd::Zero(data.p());

  const RhoFamily rho0 = tuning.rho0(), rho1 = tuning.rho1();
  double wbar;
  try {
    wbar = combined_psi_weight(r, sc.s, rho0, rho1);
  } catch (const DegenerateWeightError&) {
    wbar = 0.0;
  }
  VectorXd psi_vals(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double t = r(i) / sc.s;
    psi_vals(i) = wbar * rho0.psi(t) + rho1.psi(t);
  }
  return -(sc.s / static_cast<double>(n)) * (data.X.transpose() * psi_vals);
}

double lambda_zero_threshold(const Dataset& data, const TuningPair& tuning) {
  VectorXd g = tau_squared_gradient(data, VectorXd::Zero(data.p()), tuning);
  return g.cwiseAbs().maxCoeff();
}

double default_epsilon_floor(const VectorXd& y) { return 1e-6 * bisquare_scale(y); }

}  // namespace taulasso
