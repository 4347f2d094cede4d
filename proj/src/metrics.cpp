#include "proxsim/metrics.hpp"

#include "proxsim/error.hpp"

#include <algorithm>
#include <cmath>

namespace proxsim {

double Metrics::worst_rmse() const {
  double worst = 0.0;
  for (const auto& o : per_output) worst = std::max(worst, o.rmse);
  return worst;
}

Metrics score(const PredictionBatch& p, const Eigen::MatrixXd& Y) {
  if (Y.rows() == 0) throw Error(Errc::empty_holdout, "holdout set is empty");
  if (p.mean.rows() != Y.rows() || p.mean.cols() != Y.cols()) {
    throw Error(Errc::dimension_mismatch, "predictions and labels differ in shape");
  }
  const double n = static_cast<double>(Y.rows());
  Metrics m;
  for (Eigen::Index k = 0; k < Y.cols(); ++k) {
    const Eigen::ArrayXd y = Y.col(k).array();
    const Eigen::ArrayXd err = p.mean.col(k).array() - y;
    const Eigen::ArrayXd half = kZ95 * p.variance.col(k).array().max(0.0).sqrt();
    OutputMetrics o;
    const double sse = err.square().sum();
    o.rmse = std::sqrt(sse / n);
    o.mae = err.abs().sum() / n;
    const double sst = (y - y.mean()).square().sum();
    // A constant holdout has no variance to explain: r2 is 1 for an exact
    // fit and 0 otherwise.
    o.r2 = sst > 0.0 ? 1.0 - sse / sst : (sse == 0.0 ? 1.0 : 0.0);
    o.picp95 = (err.abs() <= half).cast<double>().sum() / n;
    m.per_output.push_back(o);
  }
  return m;
}

Metrics evaluate(const GPModel& m, const TrainingSet& holdout) {
  if (holdout.empty()) throw Error(Errc::empty_holdout, "holdout set is empty");
  if (!(*holdout.domain == *m.domain())) {
    throw Error(Errc::domain_mismatch, "holdout domain differs from the model's");
  }
  return score(m.predict(holdout.X), holdout.Y);
}

Metrics evaluate(const LinearMetamodel& m, const TrainingSet& holdout) {
  if (holdout.empty()) throw Error(Errc::empty_holdout, "holdout set is empty");
  if (!(*holdout.domain == *m.domain)) {
    throw Error(Errc::domain_mismatch, "holdout domain differs from the model's");
  }
  return score(m.predict(holdout.X), holdout.Y);
}

nlohmann::json metrics_to_json(const Metrics& m, const Domain& domain) {
  nlohmann::json j = nlohmann::json::object();
  for (std::size_t k = 0; k < m.per_output.size(); ++k) {
    const auto& o = m.per_output[k];
    j[domain.outputs()[k].name] = {
        {"rmse", o.rmse}, {"mae", o.mae}, {"r2", o.r2}, {"picp95", o.picp95}};
  }
  return j;
}

Metrics metrics_from_json(const nlohmann::json& j, const Domain& domain) {
  Metrics m;
  for (const auto& out : domain.outputs()) {
    const auto& e = j.at(out.name);
    m.per_output.push_back({e.at("rmse").get<double>(), e.at("mae").get<double>(),
                            e.at("r2").get<double>(), e.at("picp95").get<double>()});
  }
  return m;
}

}  // namespace proxsim
