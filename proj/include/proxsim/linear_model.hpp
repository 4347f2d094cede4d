#pragma once

#include "proxsim/domain.hpp"
#include "proxsim/prediction.hpp"

#include <vector>

namespace proxsim {

/// Ordinary least-squares metamodel for a single KPI:
/// y = beta0 + beta . x + eps, eps ~ N(0, sigma2).
///
/// Coefficients refer to the encoded raw-unit inputs. OLS is equivariant
/// under affine input maps, so predictions are identical to a fit in the
/// scaled space.
struct LinearModel {
  DomainPtr domain;
  std::size_t output_index = 0;
  double beta0 = 0.0;
  Eigen::VectorXd beta;
  double sigma2 = 0.0;
};

/// Needs at least D + 1 rows and a full-rank design [1 | X].
LinearModel fit_linear(const TrainingSet& ts, std::size_t output_index = 0);

/// Single-column batch: mean = beta0 + beta . x, variance = sigma2.
PredictionBatch predict_linear(const LinearModel& m, const PredictionSet& P);

/// One independent linear model per output KPI.
struct LinearMetamodel {
  DomainPtr domain;
  std::vector<LinearModel> outputs;

  PredictionBatch predict(const Eigen::MatrixXd& X) const;
};

LinearMetamodel fit_linear_all(const TrainingSet& ts);

}  // namespace proxsim
