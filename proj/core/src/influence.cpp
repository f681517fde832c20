#include "taulasso/influence.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "taulasso/rng.hpp"
#include "taulasso/scale.hpp"

namespace taulasso {

namespace {

double sgn(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

Dataset draw_sample(const ExpectationEngine::Drawer& draw, int p, std::size_t n,
                    std::uint64_t seed) {
  Dataset data;
  data.y.resize(static_cast<Eigen::Index>(n));
  data.X.resize(static_cast<Eigen::Index>(n), p);
  std::mt19937_64 rng = make_engine(seed, 0xd4a3);
  VectorXd x(p);
  double y = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    draw(rng, y, x);
    data.y(static_cast<Eigen::Index>(i)) = y;
    data.X.row(static_cast<Eigen::Index>(i)) = x.transpose();
  }
  return data;
}

}  // namespace

ExpectationEngine ExpectationEngine::model_based(Drawer draw, int p, std::size_t n_draws,
                                                 std::uint64_t seed) {
  if (n_draws == 0) throw InvalidParameterError("expectation engine: need at least one draw");
  ExpectationEngine e;
  e.draw_ = std::move(draw);
  e.model_ = true;
  e.p_ = p;
  e.n_draws_ = n_draws;
  e.seed_ = seed;
  return e;
}

ExpectationEngine ExpectationEngine::empirical(Dataset sample) {
  sample.validate();
  ExpectationEngine e;
  e.model_ = false;
  e.p_ = static_cast<int>(sample.p());
  e.n_draws_ = static_cast<std::size_t>(sample.n());
  e.sample_ = std::move(sample);
  return e;
}

void ExpectationEngine::for_each(
    const std::function<void(double y, const VectorXd& x)>& visit) const {
  if (model_) {
    std::mt19937_64 rng = make_engine(seed_, 0xe57);
    VectorXd x(p_);
    double y = 0.0;
    for (std::size_t i = 0; i < n_draws_; ++i) {
      draw_(rng, y, x);
      visit(y, x);
    }
  } else {
    for (Eigen::Index i = 0; i < sample_.n(); ++i) {
      VectorXd x = sample_.X.row(i).transpose();
      visit(sample_.y(i), x);
    }
  }
}

ExpectationEngine::Estimate ExpectationEngine::estimate(
    const std::function<double(double, const VectorXd&)>& f) const {
  double sum = 0.0, sumsq = 0.0;
  for_each([&](double y, const VectorXd& x) {
    double v = f(y, x);
    sum += v;
    sumsq += v * v;
  });
  const double n = static_cast<double>(n_draws_);
  Estimate est;
  est.value = sum / n;
  double var = std::max(0.0, sumsq / n - est.value * est.value);
  est.std_error = std::sqrt(var / n);
  return est;
}

InfluenceContext make_influence_context(const FunctionalValue& functional,
                                        const ExpectationEngine& engine,
                                        const TuningPair& tuning) {
  if (!(functional.s_inf > 0.0))
    throw InvalidInputError("influence context: functional scale must be positive");

  InfluenceContext ctx;
  ctx.functional = functional;
  ctx.tuning = tuning;
  ctx.active = functional.active();
  const int k = static_cast<int>(ctx.active.size());
  const double s = functional.s_inf;
  const RhoFamily rho0 = tuning.rho0(), rho1 = tuning.rho1();

  // One pass accumulating every expectation the blocks need. The combined
  // psi's weight is itself an expectation, so the psi-dependent pieces are
  // kept split by family and recombined afterwards.
  double sat_sum = 0.0, psi0r_sum = 0.0;
  VectorXd psi0x = VectorXd::Zero(k);
  VectorXd m0 = VectorXd::Zero(k), m1 = VectorXd::Zero(k);
  MatrixXd q0 = MatrixXd::Zero(k, k), q1 = MatrixXd::Zero(k, k);
  VectorXd xa(k);
  engine.for_each([&](double y, const VectorXd& x) {
    double r = (y - x.dot(functional.beta_inf)) / s;
    for (int a = 0; a < k; ++a) xa(a) = x(ctx.active[static_cast<std::size_t>(a)]);
    sat_sum += bisquare_saturation_term(r, rho1.c);
    double p0 = rho0.psi(r), p1 = rho1.psi(r);
    double d0 = rho0.psi_prime(r), d1 = rho1.psi_prime(r);
    psi0r_sum += p0 * r;
    psi0x += p0 * xa;
    m0 += (p0 - d0 * r) * xa;
    m1 += (p1 - d1 * r) * xa;
    q0 += d0 * (xa * xa.transpose());
    q1 += d1 * (xa * xa.transpose());
  });
  const double n = static_cast<double>(engine.sample_size());
  if (psi0r_sum <= 0.0)
    throw DegenerateWeightError("influence context: psi0 weight mass is zero under H");
  ctx.wbar = sat_sum / psi0r_sum;

  MatrixXd M(k + 1, k + 1);
  M(0, 0) = -(psi0r_sum / n) / s;
  for (int a = 0; a < k; ++a) {
    M(0, a + 1) = -(psi0x(a) / n) / s;
    M(a + 1, 0) = -(ctx.wbar * m0(a) + m1(a)) / n;
  }
  M.block(1, 1, k, k) = (ctx.wbar * q0 + q1) / n;

  Eigen::JacobiSVD<MatrixXd> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  ctx.condition = sv(sv.size() - 1) > 0.0 ? sv(0) / sv(sv.size() - 1)
                                          : std::numeric_limits<double>::infinity();
  if (!(ctx.condition < 1e12))
    throw SingularExpectationError(
        "influence context: expectation matrix is numerically singular (condition " +
            std::to_string(ctx.condition) + ")",
        ctx.condition);
  ctx.M = M;
  ctx.M_inv = svd.solve(MatrixXd::Identity(k + 1, k + 1));
  return ctx;
}

VectorXd if_tau_lasso(double y0, const VectorXd& x0, const InfluenceContext& ctx) {
  const FunctionalValue& fv = ctx.functional;
  if (x0.size() != fv.beta_inf.size())
    throw InvalidInputError("if_tau_lasso: contamination point dimension mismatch");
  const int k = static_cast<int>(ctx.active.size());
  const double s = fv.s_inf;
  const RhoFamily rho0 = ctx.tuning.rho0(), rho1 = ctx.tuning.rho1();

  double r0 = (y0 - x0.dot(fv.beta_inf)) / s;
  double psi_r0 = ctx.wbar * rho0.psi(r0) + rho1.psi(r0);

  VectorXd v(k + 1);
  v(0) = rho0.rho(r0) - ctx.tuning.delta;
  for (int a = 0; a < k; ++a) {
    int j = ctx.active[static_cast<std::size_t>(a)];
    v(a + 1) = -psi_r0 * x0(j) * s + fv.lambda * sgn(fv.beta_inf(j));
  }
  VectorXd sol = -(ctx.M_inv * v);

  VectorXd out = VectorXd::Zero(fv.beta_inf.size() + 1);
  out(0) = sol(0);
  for (int a = 0; a < k; ++a) out(ctx.active[static_cast<std::size_t>(a)] + 1) = sol(a + 1);
  return out;
}

VectorXd if_adaptive_tau_lasso(double y0, const VectorXd& x0, const InfluenceContext& ctx,
                               const FunctionalValue& pilot, const VectorXd& pilot_if) {
  const FunctionalValue& fv = ctx.functional;
  if (x0.size() != fv.beta_inf.size())
    throw InvalidInputError("if_adaptive_tau_lasso: contamination point dimension mismatch");
  if (pilot_if.size() != fv.beta_inf.size() + 1)
    throw InvalidInputError("if_adaptive_tau_lasso: pilot influence length mismatch");
  for (int j : ctx.active)
    if (pilot.beta_inf(j) == 0.0)
      throw InconsistentSupportError(
          "if_adaptive_tau_lasso: pilot support does not cover the adaptive active set");

  const int k = static_cast<int>(ctx.active.size());
  const double s = fv.s_inf;
  const RhoFamily rho0 = ctx.tuning.rho0(), rho1 = ctx.tuning.rho1();

  double r0 = (y0 - x0.dot(fv.beta_inf)) / s;
  double psi_r0 = ctx.wbar * rho0.psi(r0) + rho1.psi(r0);

  VectorXd v(k + 1);
  v(0) = rho0.rho(r0) - ctx.tuning.delta;
  for (int a = 0; a < k; ++a) {
    int j = ctx.active[static_cast<std::size_t>(a)];
    double pb = pilot.beta_inf(j);
    double qprime = fv.lambda * sgn(fv.beta_inf(j)) / std::abs(pb);
    double phi = fv.lambda * sgn(fv.beta_inf(j)) * sgn(pb) / (pb * pb);
    v(a + 1) = -psi_r0 * x0(j) * s + qprime - phi * pilot_if(j + 1);
  }
  VectorXd sol = -(ctx.M_inv * v);

  VectorXd out = VectorXd::Zero(fv.beta_inf.size() + 1);
  out(0) = sol(0);
  for (int a = 0; a < k; ++a) out(ctx.active[static_cast<std::size_t>(a)] + 1) = sol(a + 1);
  return out;
}

VectorXd sensitivity_curve(const Dataset& data, double y0, const VectorXd& x0,
                           const PointEstimator& estimator,
                           const std::pair<double, VectorXd>& base) {
  const Eigen::Index n = data.n();
  Dataset augmented;
  augmented.y.resize(n + 1);
  augmented.y.head(n) = data.y;
  augmented.y(n) = y0;
  augmented.X.resize(n + 1, data.p());
  augmented.X.topRows(n) = data.X;
  augmented.X.row(n) = x0.transpose();

  auto [s1, beta1] = estimator(augmented);
  VectorXd out(data.p() + 1);
  out(0) = s1 - base.first;
  out.tail(data.p()) = beta1 - base.second;
  return static_cast<double>(n + 1) * out;
}

VectorXd sensitivity_curve(const Dataset& data, double y0, const VectorXd& x0,
                           const PointEstimator& estimator) {
  return sensitivity_curve(data, y0, x0, estimator, estimator(data));
}

FunctionalValue estimate_functional_tau_lasso(const ExpectationEngine::Drawer& draw, int p,
                                              std::size_t n, double lambda,
                                              const TuningPair& tuning, std::uint64_t seed) {
  Dataset sample = draw_sample(draw, p, n, seed);
  SolverOptions opts;
  opts.seed = mix_seed(seed, 0xf17);
  FitResult fit = fit_tau_lasso(sample, lambda, tuning, opts);
  FunctionalValue fv;
  fv.s_inf = fit.s;
  fv.beta_inf = fit.beta;
  fv.lambda = lambda;
  return fv;
}

FunctionalValue estimate_functional_adaptive_tau_lasso(const ExpectationEngine::Drawer& draw,
                                                       int p, std::size_t n,
                                                       double pilot_lambda, double lambda,
                                                       const TuningPair& tuning,
                                                       std::uint64_t seed) {
  Dataset sample = draw_sample(draw, p, n, seed);
  SolverOptions opts;
  opts.seed = mix_seed(seed, 0xf17);
  FitResult pilot = fit_tau_lasso(sample, pilot_lambda, tuning, opts);
  FitResult fit = fit_adaptive_tau_lasso(sample, lambda, tuning, pilot.beta, 1.0, 0.0, opts);
  FunctionalValue fv;
  fv.s_inf = fit.s;
  fv.beta_inf = fit.beta;
  fv.lambda = lambda;
  return fv;
}

void write_influence_csv(const InfluenceReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InvalidInputError("write_influence_csv: cannot open " + path);
  if (report.grid.empty()) return;
  const Eigen::Index p = report.grid.front().second.size();

  out << "y0";
  for (Eigen::Index j = 0; j < p; ++j) out << ",x0_" << j + 1;
  out << ",if_scale";
  for (Eigen::Index j = 0; j < p; ++j) out << ",if_beta_" << j + 1;
  out << ",sc_scale";
  for (Eigen::Index j = 0; j < p; ++j) out << ",sc_beta_" << j + 1;
  out << "\n";

  char buf[32];
  auto emit = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    out << buf;
  };
  for (std::size_t i = 0; i < report.grid.size(); ++i) {
    emit(report.grid[i].first);
    for (Eigen::Index j = 0; j < p; ++j) {
      out << ",";
      emit(report.grid[i].second(j));
    }
    for (Eigen::Index j = 0; j < p + 1; ++j) {
      out << ",";
      emit(report.if_values[i](j));
    }
    const bool have_sc = i < report.sc_values.size();
    for (Eigen::Index j = 0; j < p + 1; ++j) {
      out << ",";
      emit(have_sc ? report.sc_values[i](j) : std::nan(""));
    }
    out << "\n";
  }
}

}  // namespace taulasso
