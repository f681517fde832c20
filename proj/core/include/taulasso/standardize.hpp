#pragma once

#include <utility>

#include "taulasso/types.hpp"

namespace taulasso {

/// Bisquare M-estimate of location: solves sum psi((v_i - m)/s_mad) = 0 with
/// s_mad the normalized MAD held fixed, IRWLS from the median.
double bisquare_location(const VectorXd& v);

/// Bisquare M-scale of v - bisquare_location(v), delta = 0.5 with the
/// normal-consistent clipping constant, so it estimates the standard
/// deviation at the normal. Throws DegenerateScaleError on zero spread.
double bisquare_scale(const VectorXd& v);

struct StandardizationMap {
  VectorXd col_centers;
  VectorXd col_scales;
  double y_center = 0.0;
};

/// Centers/scales every column of X and centers y, all with the bisquare
/// estimators. Throws DegenerateScaleError naming the offending column.
std::pair<Dataset, StandardizationMap> standardize(const Dataset& data);

/// Coefficients mapped back to original units. The intercept offset is what
/// makes predictions on raw data equal predictions on standardized data.
struct DestandardizedModel {
  VectorXd beta;
  double intercept = 0.0;
};

DestandardizedModel destandardize_coefficients(const VectorXd& beta_std,
                                               const StandardizationMap& map);

}  // namespace taulasso
