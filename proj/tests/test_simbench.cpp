#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "taulasso/experiments.hpp"
#include "taulasso/scenarios.hpp"
#include "testutil.hpp"

using namespace taulasso;

TEST_CASE("scenario specs carry the documented settings") {
  ScenarioSpec s1 = make_scenario(1, ErrorLaw::Normal, false);
  CHECK(s1.n == 50);
  CHECK(s1.p == 10);
  CHECK(s1.beta0(0) == 4.0);
  CHECK(s1.beta0(1) == 2.0);
  CHECK(s1.beta0(4) == 3.0);
  CHECK(s1.k0() == 3);
  CHECK(*s1.snr_db == 5.0);
  CHECK(s1.covariance(0, 1) == doctest::Approx(0.5));
  CHECK(s1.covariance(0, 9) == doctest::Approx(std::pow(0.5, 9)));

  ScenarioSpec s2 = make_scenario(2, ErrorLaw::StudentT3, false);
  CHECK(s2.n == 40);
  CHECK(s2.p == 500);
  CHECK(s2.k0() == 8);
  CHECK(!s2.snr_db.has_value());

  ScenarioSpec s5 = make_scenario(5, ErrorLaw::Normal, false);
  CHECK(s5.k0() == 7);
  CHECK(s5.beta0(5) == 0.0);
  CHECK(s5.beta0(6) == 1.5);
  CHECK(s5.beta0(7) == 1.5);
  // covariates 1..15 and 16..200 form independent blocks
  CHECK(s5.covariance(0, 14) == doctest::Approx(std::pow(0.95, 14)));
  CHECK(s5.covariance(0, 15) == 0.0);
  CHECK(s5.covariance(14, 15) == 0.0);
  CHECK(s5.covariance(15, 16) == doctest::Approx(0.95));

  CHECK_THROWS_AS(make_scenario(6, ErrorLaw::Normal, false), InvalidParameterError);
}

TEST_CASE("generated rows reproduce the scenario covariance") {
  ScenarioSpec spec = make_scenario(1, ErrorLaw::Normal, false);
  spec.n = 100000;
  auto [train, test] = generate(spec, 99);
  MatrixXd centered = train.X.rowwise() - train.X.colwise().mean();
  MatrixXd cov = centered.transpose() * centered / static_cast<double>(train.X.rows() - 1);
  CHECK((cov - spec.covariance).cwiseAbs().maxCoeff() < 0.02);
}

TEST_CASE("clean generation: train and test come from the same law") {
  ScenarioSpec spec = make_scenario(1, ErrorLaw::Normal, false);
  spec.n = 20000;
  auto [train, test] = generate(spec, 7);
  // two-sample z-test on the response mean at alpha = 0.01
  double m1 = train.y.mean(), m2 = test.y.mean();
  double v1 = (train.y.array() - m1).square().sum() / (train.n() - 1.0);
  double v2 = (test.y.array() - m2).square().sum() / (test.n() - 1.0);
  double z = (m1 - m2) / std::sqrt(v1 / train.n() + v2 / test.n());
  CHECK(std::abs(z) < 2.58);
}

TEST_CASE("determinism: same seed, same draws") {
  ScenarioSpec spec = make_scenario(1, ErrorLaw::Normal, true);
  auto [a_train, a_test] = generate(spec, 123);
  auto [b_train, b_test] = generate(spec, 123);
  CHECK((a_train.y - b_train.y).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a_train.X - b_train.X).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a_test.y - b_test.y).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("contamination bookkeeping: counts and row-replacement overlap") {
  ScenarioSpec spec = make_scenario(1, ErrorLaw::Normal, true);
  spec.n = 60;
  ScenarioSpec clean = spec;
  clean.contamination.reset();
  auto [dirty_train, d_test] = generate(spec, 5);
  auto [clean_train, c_test] = generate(clean, 5);

  // the clean and contaminated draws share the X stream, so altered rows are
  // exactly those that differ
  std::vector<int> lev_rows, resp_rows;
  for (int i = 0; i < spec.n; ++i) {
    if ((dirty_train.X.row(i) - clean_train.X.row(i)).cwiseAbs().maxCoeff() > 0.0)
      lev_rows.push_back(i);
    if (dirty_train.y(i) != clean_train.y(i)) {
      resp_rows.push_back(i);
      CHECK(dirty_train.y(i) > 90.0);  // N(100, 1) draws
    }
  }
  CHECK(static_cast<int>(lev_rows.size()) == 6);   // floor(0.1 * 60)
  CHECK(static_cast<int>(resp_rows.size()) == 6);  // floor(0.1 * 60)
  // default protocol replaces whole rows: y and X corrupt the same rows
  CHECK(lev_rows == resp_rows);
  for (int row : lev_rows) CHECK(dirty_train.X.row(row).mean() > 20.0);
}

TEST_CASE("contamination: disjoint mode separates the index sets") {
  ScenarioSpec spec = make_scenario(1, ErrorLaw::Normal, true);
  spec.n = 60;
  spec.contamination->overlap = ContaminationPlan::Overlap::Disjoint;
  ScenarioSpec clean = spec;
  clean.contamination.reset();
  auto [dirty_train, d_test] = generate(spec, 5);
  auto [clean_train, c_test] = generate(clean, 5);

  std::vector<int> lev_rows, resp_rows;
  for (int i = 0; i < spec.n; ++i) {
    if ((dirty_train.X.row(i) - clean_train.X.row(i)).cwiseAbs().maxCoeff() > 0.0)
      lev_rows.push_back(i);
    if (dirty_train.y(i) != clean_train.y(i)) resp_rows.push_back(i);
  }
  CHECK(lev_rows.size() == 6);
  CHECK(resp_rows.size() == 6);
  for (int row : lev_rows)
    CHECK(std::find(resp_rows.begin(), resp_rows.end(), row) == resp_rows.end());
}

TEST_CASE("fixed-pattern contamination used by the breakdown study") {
  ScenarioSpec spec = make_scenario(1, ErrorLaw::Normal, true);
  spec.contamination->ystar = 7.0;
  auto [train, test] = generate(spec, 3);
  for (int i = 0; i < 5; ++i) {  // floor(0.1 * 50)
    CHECK(train.y(i) == 35.0);   // 5 * ystar
    CHECK(train.X(i, 0) == 5.0);
    CHECK(train.X.row(i).tail(9).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("leverage override holds the high-leverage rows fixed across trials") {
  ScenarioSpec spec = make_scenario(1, ErrorLaw::Normal, true);
  LeverageOverride lev = draw_leverage_override(spec, 11);
  CHECK(lev.rows.size() == 5);
  auto [t1, u1] = generate(spec, 100, &lev);
  auto [t2, u2] = generate(spec, 200, &lev);
  for (std::size_t k = 0; k < lev.rows.size(); ++k) {
    CHECK((t1.X.row(lev.rows[k]) - t2.X.row(lev.rows[k])).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("score: exact recovery and the all-zero fit") {
  ScenarioSpec spec = make_scenario(1, ErrorLaw::Normal, false);
  auto [train, test] = generate(spec, 8);
  Dataset noiseless = test;
  noiseless.y = test.X * spec.beta0;

  MetricsRecord perfect = score(spec.beta0, 0.0, spec.beta0, noiseless);
  CHECK(perfect.rmse == 0.0);
  CHECK(perfect.fnr == 0.0);
  CHECK(perfect.fpr == 0.0);
  CHECK(perfect.cer == 0.0);

  MetricsRecord null_fit = score(VectorXd::Zero(10), 0.0, spec.beta0, test);
  CHECK(null_fit.fnr == 1.0);
  CHECK(null_fit.fpr == 0.0);
  CHECK(null_fit.cer == doctest::Approx(0.3));

  CHECK_THROWS_AS(score(VectorXd::Zero(10), 0.0, VectorXd::Zero(10), test), InvalidInputError);
  CHECK_THROWS_AS(score(VectorXd::Zero(10), 0.0, VectorXd::Ones(10), test), InvalidInputError);
}

TEST_CASE("oracle estimator recovers the support by construction") {
  ScenarioSpec spec = make_scenario(1, ErrorLaw::Normal, false);
  auto [train, test] = generate(spec, 21);
  PipelineOptions opts;
  PipelineFit fit = fit_pipeline(train, EstimatorKind::OracleTau, opts, 77, &spec.beta0);
  MetricsRecord rec = score(fit.beta, fit.intercept, spec.beta0, test);
  CHECK(rec.fnr == 0.0);
  CHECK(rec.fpr == 0.0);
  CHECK(rec.cer == 0.0);
}

TEST_CASE("table experiment: deterministic report bytes") {
  ScenarioSpec spec = make_scenario(1, ErrorLaw::Normal, false);
  PipelineOptions opts;
  opts.n_lambda = 8;
  opts.cv_starts = 1;
  opts.starts = 2;
  std::vector<ScenarioSpec> scenarios = {spec};
  std::vector<EstimatorKind> estimators = {EstimatorKind::TauLasso};

  TableReport r1 = run_table_experiment(scenarios, estimators, 2, 42, opts);
  TableReport r2 = run_table_experiment(scenarios, estimators, 2, 42, opts);
  write_table_csv(r1, "/tmp/taulasso_report_a.csv");
  write_table_csv(r2, "/tmp/taulasso_report_b.csv");
  std::ifstream fa("/tmp/taulasso_report_a.csv"), fb("/tmp/taulasso_report_b.csv");
  std::stringstream sa, sb;
  sa << fa.rdbuf();
  sb << fb.rdbuf();
  CHECK(sa.str() == sb.str());
  CHECK(!sa.str().empty());
  std::remove("/tmp/taulasso_report_a.csv");
  std::remove("/tmp/taulasso_report_b.csv");
}

TEST_CASE("invalid contamination fractions are rejected") {
  ContaminationPlan plan;
  plan.response_fraction = 0.5;
  CHECK_THROWS_AS(plan.validate(), InvalidParameterError);
}
