#pragma once

#include "proxsim/domain.hpp"
#include "proxsim/gp.hpp"
#include "proxsim/linear_model.hpp"
#include "proxsim/prediction.hpp"

#include <json.hpp>

#include <vector>

namespace proxsim {

/// z such that P(|Z| <= z) = 0.95 for a standard normal Z.
inline constexpr double kZ95 = 1.959964;

struct OutputMetrics {
  double rmse = 0.0;
  double mae = 0.0;
  double r2 = 0.0;
  double picp95 = 0.0;  // fraction of labels inside mean +- kZ95 * sd

  bool operator==(const OutputMetrics&) const = default;
};

struct Metrics {
  std::vector<OutputMetrics> per_output;

  /// Largest per-output RMSE; the figure compared against stopping thresholds.
  double worst_rmse() const;
  bool operator==(const Metrics&) const = default;
};

/// Scores a prediction batch against the label matrix Y (same shape).
Metrics score(const PredictionBatch& predictions, const Eigen::MatrixXd& Y);

Metrics evaluate(const GPModel& m, const TrainingSet& holdout);
Metrics evaluate(const LinearMetamodel& m, const TrainingSet& holdout);

nlohmann::json metrics_to_json(const Metrics& m, const Domain& domain);
Metrics metrics_from_json(const nlohmann::json& j, const Domain& domain);

}  // namespace proxsim
