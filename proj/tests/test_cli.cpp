#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "taulasso/csv.hpp"
#include "testutil.hpp"

using namespace taulasso;

namespace {

const std::string kCli = TAULASSO_CLI_PATH;

int run(const std::string& args, const std::string& out_file = "") {
  std::string cmd = kCli + " " + args;
  if (!out_file.empty()) cmd += " > " + out_file + " 2>/dev/null";
  else cmd += " > /dev/null 2>&1";
  int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct TempCsv {
  std::string path;
  explicit TempCsv(const std::string& contents, const std::string& name) {
    path = std::string("/tmp/taulasso_test_") + name + ".csv";
    std::ofstream out(path);
    out << contents;
  }
  ~TempCsv() { std::remove(path.c_str()); }
};

std::string make_regression_csv() {
  std::mt19937_64 rng(77);
  std::ostringstream out;
  out << "y,x1,x2,x3\n";
  std::normal_distribution<double> nd(0.0, 1.0);
  for (int i = 0; i < 50; ++i) {
    double x1 = nd(rng), x2 = nd(rng), x3 = nd(rng);
    double y = 2.0 * x1 - 1.0 * x3 + 0.2 * nd(rng);
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%.8f,%.8f,%.8f,%.8f\n", y, x1, x2, x3);
    out << buf;
  }
  return out.str();
}

}  // namespace

TEST_CASE("fit: exit 0, sane JSON, deterministic bytes") {
  TempCsv csv(make_regression_csv(), "fit");
  CHECK(run("fit --input " + csv.path + " --lambda 0.05 --seed 11", "/tmp/taulasso_fit1.json") == 0);
  CHECK(run("fit --input " + csv.path + " --lambda 0.05 --seed 11", "/tmp/taulasso_fit2.json") == 0);
  std::string a = slurp("/tmp/taulasso_fit1.json"), b = slurp("/tmp/taulasso_fit2.json");
  CHECK(!a.empty());
  CHECK(a == b);
  CHECK(a.find("\"beta\"") != std::string::npos);
  CHECK(a.find("\"active_set\"") != std::string::npos);
  CHECK(a.find("\"config\"") != std::string::npos);
  std::remove("/tmp/taulasso_fit1.json");
  std::remove("/tmp/taulasso_fit2.json");
}

TEST_CASE("fit: adaptive estimator with pilot stage runs") {
  TempCsv csv(make_regression_csv(), "adaptive");
  CHECK(run("fit --input " + csv.path +
            " --estimator adaptive --pilot s-ridge --cv --n-lambda 8 --seed 5",
            "/tmp/taulasso_fit3.json") == 0);
  std::string a = slurp("/tmp/taulasso_fit3.json");
  CHECK(a.find("\"pilot_lambda\"") != std::string::npos);
  std::remove("/tmp/taulasso_fit3.json");
}

TEST_CASE("fit: malformed CSV exits 2 with diagnostics") {
  TempCsv bad("y,x1\n1.0,2.0\n3.0,oops\n", "bad");
  CHECK(run("fit --input " + bad.path + " --lambda 0.1") == 2);
  TempCsv ragged("y,x1\n1.0,2.0\n3.0\n", "ragged");
  CHECK(run("fit --input " + ragged.path + " --lambda 0.1") == 2);
  CHECK(run("fit --input /tmp/definitely_missing.csv --lambda 0.1") == 2);
}

TEST_CASE("fit: missing lambda/cv and bad flags exit 2") {
  TempCsv csv(make_regression_csv(), "nolambda");
  CHECK(run("fit --input " + csv.path) == 2);
  CHECK(run("fit") == 2);
  CHECK(run("fit --input " + csv.path + " --lambda 0.1 --estimator nope") == 2);
}

TEST_CASE("cv: reports a grid and best lambda") {
  TempCsv csv(make_regression_csv(), "cvcmd");
  CHECK(run("cv --input " + csv.path + " --n-lambda 6 --seed 2", "/tmp/taulasso_cv.json") == 0);
  std::string a = slurp("/tmp/taulasso_cv.json");
  CHECK(a.find("\"best_lambda\"") != std::string::npos);
  CHECK(a.find("\"cv_scores\"") != std::string::npos);
  std::remove("/tmp/taulasso_cv.json");
}

TEST_CASE("simulate: unknown scenario exits 2, missing seed exits 2") {
  CHECK(run("simulate --scenario scenario9 --trials 1 --seed 1") == 2);
  CHECK(run("simulate --scenario scenario1 --trials 1") == 2);
}

TEST_CASE("simulate: small run writes report and summary") {
  CHECK(run("simulate --scenario scenario1 --trials 2 --seed 4 --n-lambda 6 --cv-starts 1 "
            "--starts 2 --estimators tau-lasso --output /tmp/taulasso_sim") == 0);
  std::string report = slurp("/tmp/taulasso_sim_report.csv");
  CHECK(report.find("scenario1,tau-lasso,normal,0,rmse,") != std::string::npos);
  std::string summary = slurp("/tmp/taulasso_sim_summary.json");
  CHECK(summary.find("\"config\"") != std::string::npos);
  CHECK(summary.find("\"std_error\"") != std::string::npos);
  std::remove("/tmp/taulasso_sim_report.csv");
  std::remove("/tmp/taulasso_sim_summary.json");
}

TEST_CASE("influence: tiny grid writes the surface CSV") {
  CHECK(run("influence --toy-1d --seed 9 --grid-min -4 --grid-max 4 --grid-step 4 "
            "--sc-n 200 --functional-n 5000 --expectation-draws 20000 "
            "--output /tmp/taulasso_if") == 0);
  std::string csv = slurp("/tmp/taulasso_if_influence.csv");
  CHECK(csv.find("y0,x0_1,if_scale,if_beta_1,sc_scale,sc_beta_1") != std::string::npos);
  // 3x3 grid plus header
  int lines = 0;
  for (char c : csv)
    if (c == '\n') ++lines;
  CHECK(lines == 10);
  std::remove("/tmp/taulasso_if_influence.csv");
  std::remove("/tmp/taulasso_if_summary.json");
}

TEST_CASE("breakdown: log grid expression accepted") {
  CHECK(run("breakdown --ystar 5:100:log2 --trials 1 --seed 13 --n-lambda 5 --cv-starts 1 "
            "--starts 2 --output /tmp/taulasso_bdlog") == 0);
  std::string csv = slurp("/tmp/taulasso_bdlog_breakdown.csv");
  CHECK(csv.find("\n5,") != std::string::npos);
  CHECK(csv.find("\n100,") != std::string::npos);
  CHECK(run("breakdown --ystar 5:100:bogus3 --trials 1 --seed 13") == 2);
  std::remove("/tmp/taulasso_bdlog_breakdown.csv");
  std::remove("/tmp/taulasso_bdlog_summary.json");
}

TEST_CASE("breakdown: comma grid accepted") {
  CHECK(run("breakdown --ystar 5,100 --trials 1 --seed 12 --n-lambda 5 --cv-starts 1 "
            "--starts 2 --output /tmp/taulasso_bd") == 0);
  std::string csv = slurp("/tmp/taulasso_bd_breakdown.csv");
  CHECK(csv.find("ystar,estimator,mean_rmse") != std::string::npos);
  std::remove("/tmp/taulasso_bd_breakdown.csv");
  std::remove("/tmp/taulasso_bd_summary.json");
}
