#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <vector>

namespace proxsim {

struct Prediction {
  Eigen::VectorXd mean;
  Eigen::VectorXd variance;
};

/// Batch of predictions, one row per point and one column per output KPI.
struct PredictionBatch {
  Eigen::MatrixXd mean;
  Eigen::MatrixXd variance;

  std::size_t size() const noexcept { return static_cast<std::size_t>(mean.rows()); }

  Prediction operator[](std::size_t i) const {
    const auto r = static_cast<Eigen::Index>(i);
    return {mean.row(r).transpose(), variance.row(r).transpose()};
  }
};

}  // namespace proxsim
