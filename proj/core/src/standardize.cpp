#include "taulasso/standardize.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "taulasso/rho.hpp"
#include "taulasso/scale.hpp"

namespace taulasso {

namespace {

// 95%-efficient bisquare location constant.
constexpr double kLocationClip = 4.685;

double median(std::vector<double> a) {
  auto mid = a.begin() + a.size() / 2;
  std::nth_element(a.begin(), mid, a.end());
  double hi = *mid;
  if (a.size() % 2 == 1) return hi;
  double lo = *std::max_element(a.begin(), mid);
  return 0.5 * (lo + hi);
}

// Normal-consistency clipping constant for the delta = 0.5 scale, computed
// once: E_Phi[rho(Z; c)] = 0.5.
double scale_clip() {
  static const double c = calibrate_breakdown(0.5);
  return c;
}

}  // namespace

double bisquare_location(const VectorXd& v) {
  if (v.size() == 0) throw InvalidInputError("bisquare_location: empty vector");
  if (!v.allFinite()) throw InvalidInputError("bisquare_location: non-finite entries");

  std::vector<double> vals(v.data(), v.data() + v.size());
  double m = median(vals);

  std::vector<double> dev(vals.size());
  for (std::size_t i = 0; i < vals.size(); ++i) dev[i] = std::abs(vals[i] - m);
  double s = median(dev) / 0.6745;
  if (s == 0.0) {
    // more than half the entries equal the median; fall back to the mean
    // absolute deviation (normal-consistent factor) before giving up
    double mad = 0.0;
    for (double d : dev) mad += d;
    s = mad / static_cast<double>(dev.size()) / 0.7979;
    if (s == 0.0) return m;  // all entries equal
  }

  const RhoFamily loc(kLocationClip);
  for (int it = 0; it < 200; ++it) {
    double wsum = 0.0, wx = 0.0;
    for (double x : vals) {
      double w = loc.weight((x - m) / s);
      wsum += w;
      wx += w * x;
    }
    if (wsum == 0.0) break;
    double m_next = wx / wsum;
    double shift = std::abs(m_next - m);
    m = m_next;
    if (shift <= 1e-10 * s) break;
  }
  return m;
}

double bisquare_scale(const VectorXd& v) {
  if (v.size() == 0) throw InvalidInputError("bisquare_scale: empty vector");
  double loc = bisquare_location(v);
  VectorXd centered = v.array() - loc;
  ScaleEstimate est = m_scale(centered, RhoFamily(scale_clip()), 0.5);
  if (est.s <= 0.0) throw DegenerateScaleError("bisquare_scale: zero spread");
  return est.s;
}

std::pair<Dataset, StandardizationMap> standardize(const Dataset& data) {
  data.validate();
  const Eigen::Index n = data.n(), p = data.p();

  StandardizationMap map;
  map.col_centers.resize(p);
  map.col_scales.resize(p);

  Dataset out;
  out.X.resize(n, p);
  for (Eigen::Index j = 0; j < p; ++j) {
    VectorXd col = data.X.col(j);
    map.col_centers(j) = bisquare_location(col);
    try {
      map.col_scales(j) = bisquare_scale(col);
    } catch (const DegenerateScaleError&) {
      throw DegenerateScaleError(
          "standardize: column " + std::to_string(j) + " has no spread", static_cast<int>(j));
    }
    out.X.col(j) = (col.array() - map.col_centers(j)) / map.col_scales(j);
  }
  map.y_center = bisquare_location(data.y);
  out.y = data.y.array() - map.y_center;
  return {std::move(out), map};
}

DestandardizedModel destandardize_coefficients(const VectorXd& beta_std,
                                               const StandardizationMap& map) {
  if (beta_std.size() != map.col_scales.size())
    throw InvalidInputError("destandardize: coefficient length mismatch");
  DestandardizedModel model;
  model.beta = beta_std.array() / map.col_scales.array();
  model.intercept = map.y_center - map.col_centers.dot(model.beta);
  return model;
}

}  // namespace taulasso
