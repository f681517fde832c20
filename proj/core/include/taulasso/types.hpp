#pragma once

#include <Eigen/Dense>

#include "taulasso/errors.hpp"

namespace taulasso {

using Eigen::ArrayXd;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Response vector plus regression matrix. No intercept column: the data
/// model has a zero intercept and centering is handled by standardization.
struct Dataset {
  VectorXd y;
  MatrixXd X;

  Dataset() = default;
  Dataset(VectorXd response, MatrixXd design)
      : y(std::move(response)), X(std::move(design)) {}

  Eigen::Index n() const { return y.size(); }
  Eigen::Index p() const { return X.cols(); }

  void validate() const {
    if (y.size() == 0) throw InvalidInputError("dataset: empty response");
    if (X.rows() != y.size())
      throw InvalidInputError("dataset: X has " + std::to_string(X.rows()) +
                              " rows but y has " + std::to_string(y.size()));
    if (!y.allFinite() || !X.allFinite())
      throw InvalidInputError("dataset: non-finite entries");
  }

  Dataset rows(const std::vector<int>& idx) const {
    Dataset out;
    out.y.resize(static_cast<Eigen::Index>(idx.size()));
    out.X.resize(static_cast<Eigen::Index>(idx.size()), X.cols());
    for (std::size_t k = 0; k < idx.size(); ++k) {
      out.y(static_cast<Eigen::Index>(k)) = y(idx[k]);
      out.X.row(static_cast<Eigen::Index>(k)) = X.row(idx[k]);
    }
    return out;
  }
};

}  // namespace taulasso
