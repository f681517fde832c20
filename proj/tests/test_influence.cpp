#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "taulasso/experiments.hpp"
#include "taulasso/influence.hpp"
#include "taulasso/quadrature.hpp"
#include "testutil.hpp"

using namespace taulasso;

namespace {
const TuningPair kTuning = TuningPair::defaults();

ExpectationEngine::Drawer toy_drawer(double beta0) {
  return [beta0](std::mt19937_64& rng, double& y, VectorXd& x) {
    std::normal_distribution<double> nd(0.0, 1.0);
    x(0) = nd(rng);
    y = beta0 * x(0) + nd(rng);
  };
}

// tensor-product Gauss-Hermite expectation over (x, u) ~ N(0,1)^2 with
// y = beta0 x + u; an independent deterministic oracle for the engine
double quad_expect_toy(double beta0, const std::function<double(double, double)>& f) {
  const GaussHermite& gh = gauss_hermite(96);
  const double inv_pi = 1.0 / M_PI;
  double acc = 0.0;
  for (std::size_t i = 0; i < gh.nodes.size(); ++i) {
    double x = std::sqrt(2.0) * gh.nodes[i];
    for (std::size_t j = 0; j < gh.nodes.size(); ++j) {
      double u = std::sqrt(2.0) * gh.nodes[j];
      acc += gh.weights[i] * gh.weights[j] * f(beta0 * x + u, x);
    }
  }
  return acc * inv_pi;
}
}  // namespace

TEST_CASE("expectation engine: symmetric integrand vanishes, deterministic") {
  ExpectationEngine engine = ExpectationEngine::model_based(toy_drawer(1.5), 1, 400000, 99);
  RhoFamily rho0 = kTuning.rho0();
  auto psi0_resid = [&](double y, const VectorXd& x) { return rho0.psi(y - 1.5 * x(0)); };
  ExpectationEngine::Estimate est = engine.estimate(psi0_resid);
  CHECK(std::abs(est.value) <= 3.0 * est.std_error + 1e-12);
  ExpectationEngine::Estimate again = engine.estimate(psi0_resid);
  CHECK(est.value == again.value);
}

TEST_CASE("expectation engine: moment matches the quadrature oracle") {
  ExpectationEngine engine = ExpectationEngine::model_based(toy_drawer(1.5), 1, 1000000, 7);
  RhoFamily rho0 = kTuning.rho0();
  auto f = [&](double y, const VectorXd& x) {
    double r = y - 1.5 * x(0);
    return rho0.psi(r) * r;
  };
  ExpectationEngine::Estimate est = engine.estimate(f);
  double oracle = quad_expect_toy(1.5, [&](double y, double x) {
    double r = y - 1.5 * x;
    return rho0.psi(r) * r;
  });
  CHECK(std::abs(est.value - oracle) <= 3.0 * est.std_error);
}

TEST_CASE("influence context: blocks match quadrature at the exact functional") {
  FunctionalValue fv;
  fv.s_inf = 1.0;
  fv.beta_inf = VectorXd::Constant(1, 1.5);
  fv.lambda = 0.0;

  ExpectationEngine engine = ExpectationEngine::model_based(toy_drawer(1.5), 1, 1000000, 13);
  InfluenceContext ctx = make_influence_context(fv, engine, kTuning);

  RhoFamily rho0 = kTuning.rho0(), rho1 = kTuning.rho1();
  double wbar_num = quad_expect_toy(1.5, [&](double y, double x) {
    return bisquare_saturation_term(y - 1.5 * x, kTuning.c1);
  });
  double wbar_den = quad_expect_toy(1.5, [&](double y, double x) {
    double r = y - 1.5 * x;
    return rho0.psi(r) * r;
  });
  double wbar = wbar_num / wbar_den;
  CHECK(ctx.wbar == doctest::Approx(wbar).epsilon(5e-3));

  double m11 = -quad_expect_toy(1.5, [&](double y, double x) {
    double r = y - 1.5 * x;
    return rho0.psi(r) * r;
  });
  CHECK(ctx.M(0, 0) == doctest::Approx(m11).epsilon(5e-3));

  double m22 = quad_expect_toy(1.5, [&](double y, double x) {
    double r = y - 1.5 * x;
    return (wbar * rho0.psi_prime(r) + rho1.psi_prime(r)) * x * x;
  });
  CHECK(ctx.M(1, 1) == doctest::Approx(m22).epsilon(5e-3));

  // independence + symmetry zero the off-diagonal blocks
  CHECK(std::abs(ctx.M(0, 1)) < 5e-3);
  CHECK(std::abs(ctx.M(1, 0)) < 5e-3);
}

TEST_CASE("plain influence: zero-residual point moves only the scale") {
  FunctionalValue fv;
  fv.s_inf = 1.0;
  fv.beta_inf = VectorXd::Constant(1, 1.5);
  fv.lambda = 0.0;
  ExpectationEngine engine = ExpectationEngine::model_based(toy_drawer(1.5), 1, 1000000, 29);
  InfluenceContext ctx = make_influence_context(fv, engine, kTuning);

  VectorXd x0 = VectorXd::Constant(1, 2.0);
  double y0 = 1.5 * 2.0;  // residual exactly zero
  VectorXd iv = if_tau_lasso(y0, x0, ctx);
  // scale entry: -M11^{-1} (rho0(0) - delta) = delta / M11 < 0
  CHECK(iv(0) == doctest::Approx(kTuning.delta / ctx.M(0, 0)).epsilon(1e-3));
  // coefficient entry only through the (near-zero) off-diagonal blocks
  CHECK(std::abs(iv(1)) < 5e-2);
}

TEST_CASE("plain influence stays bounded out to huge contamination") {
  FunctionalValue fv;
  fv.s_inf = 1.0;
  fv.beta_inf = VectorXd::Constant(1, 1.5);
  fv.lambda = 1e-4;
  ExpectationEngine engine = ExpectationEngine::model_based(toy_drawer(1.5), 1, 200000, 31);
  InfluenceContext ctx = make_influence_context(fv, engine, kTuning);

  double reference = 0.0;
  for (double y0 : {10.0, 1e3, 1e6, -1e6}) {
    for (double x0v : {0.5, 10.0, 1e3}) {
      VectorXd iv = if_tau_lasso(y0, VectorXd::Constant(1, x0v), ctx);
      CHECK(iv.allFinite());
      reference = std::max(reference, iv.cwiseAbs().maxCoeff());
    }
  }
  // the redescending psi saturates; gross points influence the scale block only
  VectorXd at_gross = if_tau_lasso(1e6, VectorXd::Constant(1, 1e6), ctx);
  CHECK(at_gross.allFinite());
  CHECK(at_gross.cwiseAbs().maxCoeff() <= reference + 1.0);
}

TEST_CASE("adaptive influence equals plain influence at lambda = 0") {
  FunctionalValue fv;
  fv.s_inf = 1.0;
  fv.beta_inf = VectorXd::Constant(1, 1.5);
  fv.lambda = 0.0;
  ExpectationEngine engine = ExpectationEngine::model_based(toy_drawer(1.5), 1, 300000, 37);
  InfluenceContext ctx = make_influence_context(fv, engine, kTuning);

  for (double y0 : {-3.0, 0.0, 4.0}) {
    VectorXd x0 = VectorXd::Constant(1, 1.2);
    VectorXd plain = if_tau_lasso(y0, x0, ctx);
    VectorXd adaptive = if_adaptive_tau_lasso(y0, x0, ctx, fv, plain);
    CHECK((plain - adaptive).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("adaptive influence: pilot support must cover the active set") {
  FunctionalValue fv;
  fv.s_inf = 1.0;
  fv.beta_inf = VectorXd::Zero(2);
  fv.beta_inf << 1.5, 0.7;
  fv.lambda = 1e-3;

  ExpectationEngine::Drawer drawer2 = [](std::mt19937_64& rng, double& y, VectorXd& x) {
    std::normal_distribution<double> nd(0.0, 1.0);
    x(0) = nd(rng);
    x(1) = nd(rng);
    y = 1.5 * x(0) + 0.7 * x(1) + nd(rng);
  };
  ExpectationEngine engine = ExpectationEngine::model_based(drawer2, 2, 100000, 41);
  InfluenceContext ctx = make_influence_context(fv, engine, kTuning);

  FunctionalValue pilot = fv;
  pilot.beta_inf(1) = 0.0;  // pilot misses an adaptive-active coordinate
  VectorXd dummy = VectorXd::Zero(3);
  CHECK_THROWS_AS(
      if_adaptive_tau_lasso(1.0, VectorXd::Constant(2, 0.5), ctx, pilot, dummy),
      InconsistentSupportError);
}

TEST_CASE("influence entries of inactive coefficients are exactly zero") {
  FunctionalValue fv;
  fv.s_inf = 1.0;
  fv.beta_inf = VectorXd::Zero(3);
  fv.beta_inf(0) = 1.5;  // coordinates 1 and 2 inactive
  fv.lambda = 1e-3;
  ExpectationEngine::Drawer drawer3 = [](std::mt19937_64& rng, double& y, VectorXd& x) {
    std::normal_distribution<double> nd(0.0, 1.0);
    x(0) = nd(rng);
    x(1) = nd(rng);
    x(2) = nd(rng);
    y = 1.5 * x(0) + nd(rng);
  };
  ExpectationEngine engine = ExpectationEngine::model_based(drawer3, 3, 50000, 53);
  InfluenceContext ctx = make_influence_context(fv, engine, kTuning);
  VectorXd x0(3);
  x0 << 2.0, -1.0, 3.0;
  VectorXd iv = if_tau_lasso(4.0, x0, ctx);
  CHECK(iv(2) == 0.0);
  CHECK(iv(3) == 0.0);
  CHECK(iv(1) != 0.0);

  VectorXd adaptive = if_adaptive_tau_lasso(4.0, x0, ctx, fv, iv);
  CHECK(adaptive(2) == 0.0);
  CHECK(adaptive(3) == 0.0);
}

TEST_CASE("singular expectation matrix is reported with its condition number") {
  // duplicated predictor makes the coefficient block singular
  FunctionalValue fv;
  fv.s_inf = 1.0;
  fv.beta_inf = VectorXd::Zero(2);
  fv.beta_inf << 1.0, 1.0;
  fv.lambda = 0.0;
  ExpectationEngine::Drawer dup = [](std::mt19937_64& rng, double& y, VectorXd& x) {
    std::normal_distribution<double> nd(0.0, 1.0);
    x(0) = nd(rng);
    x(1) = x(0);
    y = 2.0 * x(0) + nd(rng);
  };
  ExpectationEngine engine = ExpectationEngine::model_based(dup, 2, 50000, 43);
  try {
    make_influence_context(fv, engine, kTuning);
    FAIL("expected a singular-expectation error");
  } catch (const SingularExpectationError& e) {
    CHECK(e.condition() > 1e12);
  }
}

TEST_CASE("sensitivity curve: deterministic and finite at model points") {
  std::mt19937_64 rng(51);
  Dataset data;
  data.X = testutil::random_normal_matrix(400, 1, rng);
  data.y = 1.5 * data.X.col(0) + testutil::random_normal_vector(400, rng);

  SolverOptions opts;
  opts.seed = 17;
  PointEstimator est = [&](const Dataset& d) {
    FitResult fit = fit_tau_lasso(d, 1e-4, kTuning, opts);
    return std::make_pair(fit.s, fit.beta);
  };
  auto base = est(data);
  VectorXd x0 = VectorXd::Constant(1, 0.8);
  VectorXd a = sensitivity_curve(data, 1.2, x0, est, base);
  VectorXd b = sensitivity_curve(data, 1.2, x0, est, base);
  CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
  CHECK(a.allFinite());
  // duplicating an existing observation also stays finite
  VectorXd c = sensitivity_curve(data, data.y(0), data.X.row(0).transpose(), est, base);
  CHECK(c.allFinite());
}

TEST_CASE("smoke: influence and sensitivity surfaces roughly agree") {
  IfValidationConfig config;
  config.sc_n = 400;
  config.functional_n = 30000;
  config.expectation_draws = 200000;
  config.grid_min = -6.0;
  config.grid_max = 6.0;
  config.grid_step = 3.0;  // 5x5 grid
  InfluenceReport report = run_if_validation(config, 2024);
  CHECK(report.if_values.size() == 25);
  CHECK(report.sc_values.size() == 25);
  for (const VectorXd& v : report.if_values) CHECK(v.allFinite());
  for (const VectorXd& v : report.sc_values) CHECK(v.allFinite());
  CHECK(report.nrmsd < 0.25);  // the acceptance study runs the full-size version
}
