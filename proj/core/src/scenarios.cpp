#include "taulasso/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "taulasso/rng.hpp"

namespace taulasso {

std::string to_string(ErrorLaw law) {
  switch (law) {
    case ErrorLaw::Normal: return "normal";
    case ErrorLaw::StudentT3: return "t3";
    case ErrorLaw::StudentT1: return "t1";
  }
  return "unknown";
}

ErrorLaw error_law_from_string(const std::string& name) {
  if (name == "normal") return ErrorLaw::Normal;
  if (name == "t3") return ErrorLaw::StudentT3;
  if (name == "t1") return ErrorLaw::StudentT1;
  throw InvalidParameterError("unknown error law: " + name);
}

void ScenarioSpec::validate() const {
  if (n < 1 || p < 1) throw InvalidParameterError("scenario: n and p must be positive");
  if (beta0.size() != p) throw InvalidParameterError("scenario: beta0 length mismatch");
  if (covariance.rows() != p || covariance.cols() != p)
    throw InvalidParameterError("scenario: covariance shape mismatch");
  if (!covariance.isApprox(covariance.transpose(), 1e-12))
    throw InvalidParameterError("scenario: covariance not symmetric");
  Eigen::LLT<MatrixXd> llt(covariance);
  if (llt.info() != Eigen::Success)
    throw InvalidParameterError("scenario: covariance not positive definite");
  if (error_law == ErrorLaw::Normal && !snr_db)
    throw InvalidParameterError("scenario: normal errors need an SNR");
  if (contamination) contamination->validate();
}

MatrixXd toeplitz_covariance(int p, double rho) {
  MatrixXd S(p, p);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) S(i, j) = std::pow(rho, std::abs(i - j));
  return S;
}

ScenarioSpec make_scenario(int index, ErrorLaw law, bool contaminated) {
  ScenarioSpec spec;
  spec.error_law = law;
  switch (index) {
    case 1: {
      spec.name = "scenario1";
      spec.n = 50;
      spec.p = 10;
      spec.beta0 = VectorXd::Zero(10);
      spec.beta0(0) = 4.0;
      spec.beta0(1) = 2.0;
      spec.beta0(4) = 3.0;
      spec.covariance = toeplitz_covariance(10, 0.5);
      spec.snr_db = 5.0;
      break;
    }
    case 2: {
      spec.name = "scenario2";
      spec.n = 40;
      spec.p = 500;
      spec.beta0 = VectorXd::Zero(500);
      spec.beta0.head(8).setConstant(2.0);
      spec.covariance = toeplitz_covariance(500, 0.5);
      spec.snr_db = 15.0;
      break;
    }
    case 3: {
      spec.name = "scenario3";
      spec.n = 100;
      spec.p = 30;
      spec.beta0 = VectorXd::Zero(30);
      spec.beta0.head(5).setConstant(2.5);
      spec.beta0.segment(5, 5).setConstant(1.5);
      spec.beta0.segment(10, 5).setConstant(0.5);
      spec.covariance = toeplitz_covariance(30, 0.95);
      spec.snr_db = 25.0;
      break;
    }
    case 4:
    case 5: {
      spec.name = index == 4 ? "scenario4" : "scenario5";
      spec.n = 100;
      spec.p = 200;
      spec.beta0 = VectorXd::Zero(200);
      if (index == 4) {
        spec.beta0.head(5).setConstant(2.5);
        spec.beta0.segment(5, 5).setConstant(1.5);
        spec.beta0.segment(10, 5).setConstant(0.5);
      } else {
        spec.beta0.head(5).setConstant(2.5);
        spec.beta0(6) = 1.5;
        spec.beta0(7) = 1.5;
      }
      // two independent Toeplitz blocks: covariates 1..15 and 16..200
      spec.covariance = MatrixXd::Zero(200, 200);
      spec.covariance.block(0, 0, 15, 15) = toeplitz_covariance(15, 0.95);
      spec.covariance.block(15, 15, 185, 185) = toeplitz_covariance(185, 0.95);
      spec.snr_db = 25.0;
      break;
    }
    default:
      throw InvalidParameterError("make_scenario: index must be in 1..5");
  }
  if (law != ErrorLaw::Normal) spec.snr_db.reset();
  if (contaminated) spec.contamination = ContaminationPlan{};
  return spec;
}

namespace {

VectorXd draw_errors(int n, ErrorLaw law, double sigma, std::mt19937_64& rng) {
  VectorXd u(n);
  if (law == ErrorLaw::Normal) {
    std::normal_distribution<double> nd(0.0, sigma);
    for (int i = 0; i < n; ++i) u(i) = nd(rng);
  } else {
    std::student_t_distribution<double> td(law == ErrorLaw::StudentT3 ? 3.0 : 1.0);
    for (int i = 0; i < n; ++i) u(i) = td(rng);
  }
  return u;
}

Dataset draw_clean(const ScenarioSpec& spec, const MatrixXd& chol_lower, std::mt19937_64& rng) {
  Dataset data;
  std::normal_distribution<double> nd(0.0, 1.0);
  MatrixXd Z(spec.n, spec.p);
  for (int i = 0; i < spec.n; ++i)
    for (int j = 0; j < spec.p; ++j) Z(i, j) = nd(rng);
  data.X = Z * chol_lower.transpose();

  double sigma = 1.0;
  VectorXd signal = data.X * spec.beta0;
  if (spec.error_law == ErrorLaw::Normal)
    sigma = std::sqrt(signal.squaredNorm() * std::pow(10.0, -*spec.snr_db / 10.0) /
                      static_cast<double>(spec.n));
  data.y = signal + draw_errors(spec.n, spec.error_law, sigma, rng);
  return data;
}

void contaminate(Dataset& train, const ScenarioSpec& spec, std::mt19937_64& rng,
                 const LeverageOverride* fixed_leverage) {
  const ContaminationPlan& plan = *spec.contamination;
  const int n = spec.n;

  if (plan.ystar) {
    // fixed pattern: first floor(0.1 n) rows
    int m = static_cast<int>(std::floor(0.1 * n));
    for (int i = 0; i < m; ++i) {
      train.y(i) = 5.0 * *plan.ystar;
      train.X.row(i).setZero();
      train.X(i, 0) = 5.0;
    }
    return;
  }

  const int m_resp = static_cast<int>(std::floor(plan.response_fraction * n));
  const int m_lev = static_cast<int>(std::floor(plan.leverage_fraction * n));

  std::vector<int> lev_rows;
  if (fixed_leverage) {
    lev_rows = fixed_leverage->rows;
    for (std::size_t k = 0; k < lev_rows.size(); ++k)
      train.X.row(lev_rows[k]) = fixed_leverage->values.row(static_cast<Eigen::Index>(k));
  } else if (m_lev > 0) {
    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    lev_rows.assign(perm.begin(), perm.begin() + m_lev);
    std::normal_distribution<double> nd(0.0, 1.0);
    for (int row : lev_rows)
      for (int j = 0; j < spec.p; ++j) train.X(row, j) = plan.leverage_mean + nd(rng);
  }

  if (m_resp > 0) {
    std::vector<int> rows;
    if (plan.overlap == ContaminationPlan::Overlap::Coincident && !lev_rows.empty()) {
      // corrupt the same rows in y and X; extend past the leverage set only
      // if the response fraction is larger
      rows = lev_rows;
      if (static_cast<int>(rows.size()) > m_resp) rows.resize(static_cast<std::size_t>(m_resp));
      if (static_cast<int>(rows.size()) < m_resp) {
        std::vector<int> pool;
        for (int i = 0; i < n; ++i)
          if (std::find(rows.begin(), rows.end(), i) == rows.end()) pool.push_back(i);
        std::shuffle(pool.begin(), pool.end(), rng);
        rows.insert(rows.end(), pool.begin(),
                    pool.begin() + (m_resp - static_cast<int>(rows.size())));
      }
    } else {
      std::vector<int> pool(static_cast<std::size_t>(n));
      std::iota(pool.begin(), pool.end(), 0);
      if (plan.overlap == ContaminationPlan::Overlap::Disjoint) {
        for (int row : lev_rows) pool.erase(std::find(pool.begin(), pool.end(), row));
      }
      std::shuffle(pool.begin(), pool.end(), rng);
      rows.assign(pool.begin(), pool.begin() + m_resp);
    }
    std::normal_distribution<double> nd(plan.response_mean, plan.response_sd);
    for (int row : rows) train.y(row) = nd(rng);
  }
}

}  // namespace

LeverageOverride draw_leverage_override(const ScenarioSpec& spec, std::uint64_t seed) {
  spec.validate();
  LeverageOverride fixed;
  if (!spec.contamination || spec.contamination->ystar) return fixed;
  const int m = static_cast<int>(std::floor(spec.contamination->leverage_fraction * spec.n));
  if (m == 0) return fixed;

  std::mt19937_64 rng = make_engine(seed, 0x1e7);
  std::vector<int> perm(static_cast<std::size_t>(spec.n));
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  fixed.rows.assign(perm.begin(), perm.begin() + m);
  fixed.values.resize(m, spec.p);
  std::normal_distribution<double> nd(0.0, 1.0);
  for (int k = 0; k < m; ++k)
    for (int j = 0; j < spec.p; ++j)
      fixed.values(k, j) = spec.contamination->leverage_mean + nd(rng);
  return fixed;
}

std::pair<Dataset, Dataset> generate(const ScenarioSpec& spec, std::uint64_t seed,
                                     const LeverageOverride* fixed_leverage) {
  spec.validate();
  Eigen::LLT<MatrixXd> llt(spec.covariance);
  MatrixXd chol_lower = llt.matrixL();

  std::mt19937_64 rng = make_engine(seed, 0x9e4);
  Dataset train = draw_clean(spec, chol_lower, rng);
  Dataset test = draw_clean(spec, chol_lower, rng);
  if (spec.contamination) contaminate(train, spec, rng, fixed_leverage);
  return {std::move(train), std::move(test)};
}

MetricsRecord score(const VectorXd& beta_hat, double intercept, const VectorXd& beta0,
                    const Dataset& test) {
  test.validate();
  if (beta_hat.size() != beta0.size() || beta_hat.size() != test.p())
    throw InvalidInputError("score: coefficient length mismatch");

  const Eigen::Index p = beta0.size();
  int k0 = 0;
  for (Eigen::Index j = 0; j < p; ++j)
    if (beta0(j) != 0.0) ++k0;
  if (k0 == 0) throw InvalidInputError("score: FNR undefined, beta0 has no nonzero entries");
  if (k0 == p) throw InvalidInputError("score: FPR undefined, beta0 has no zero entries");

  VectorXd resid = test.y - (test.X * beta_hat).array().matrix() -
                   VectorXd::Constant(test.n(), intercept);
  MetricsRecord rec;
  rec.rmse = std::sqrt(resid.squaredNorm() / static_cast<double>(test.n()));
  std::vector<double> abs_resid(resid.size());
  for (Eigen::Index i = 0; i < resid.size(); ++i)
    abs_resid[static_cast<std::size_t>(i)] = std::abs(resid(i));
  auto mid = abs_resid.begin() + abs_resid.size() / 2;
  std::nth_element(abs_resid.begin(), mid, abs_resid.end());
  if (abs_resid.size() % 2 == 1) {
    rec.mad = *mid;
  } else {
    rec.mad = 0.5 * (*mid + *std::max_element(abs_resid.begin(), mid));
  }

  int fn = 0, fp = 0;
  for (Eigen::Index j = 0; j < p; ++j) {
    if (beta0(j) != 0.0 && beta_hat(j) == 0.0) ++fn;
    if (beta0(j) == 0.0 && beta_hat(j) != 0.0) ++fp;
  }
  rec.fnr = static_cast<double>(fn) / static_cast<double>(k0);
  rec.fpr = static_cast<double>(fp) / static_cast<double>(p - k0);
  rec.cer = static_cast<double>(fp + fn) / static_cast<double>(p);
  return rec;
}

}  // namespace taulasso
