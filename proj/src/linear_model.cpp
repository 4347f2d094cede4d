#include "proxsim/linear_model.hpp"

#include "proxsim/error.hpp"

#include <Eigen/QR>

#include <algorithm>

namespace proxsim {

LinearModel fit_linear(const TrainingSet& ts, std::size_t output_index) {
  const Eigen::Index n = ts.X.rows();
  const Eigen::Index d = ts.X.cols();
  if (output_index >= static_cast<std::size_t>(ts.Y.cols())) {
    throw Error(Errc::dimension_mismatch, "output index out of range");
  }
  if (n < d + 1) {
    throw Error(Errc::too_few_points, "OLS needs at least " +
                                          std::to_string(d + 1) + " rows, got " +
                                          std::to_string(n));
  }
  Eigen::MatrixXd A(n, d + 1);
  A.col(0).setOnes();
  A.rightCols(d) = ts.X;
  const Eigen::VectorXd y = ts.Y.col(static_cast<Eigen::Index>(output_index));

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
  if (qr.rank() < d + 1) {
    throw Error(Errc::rank_deficient, "design matrix has rank " +
                                          std::to_string(qr.rank()) + " < " +
                                          std::to_string(d + 1));
  }
  const Eigen::VectorXd coef = qr.solve(y);

  LinearModel m;
  m.domain = ts.domain;
  m.output_index = output_index;
  m.beta0 = coef[0];
  m.beta = coef.tail(d);
  const double rss = (A * coef - y).squaredNorm();
  m.sigma2 = rss / static_cast<double>(std::max<Eigen::Index>(1, n - d - 1));
  return m;
}

PredictionBatch predict_linear(const LinearModel& m, const PredictionSet& P) {
  if (P.X.cols() != m.beta.size()) {
    throw Error(Errc::dimension_mismatch, "prediction set has " +
                                              std::to_string(P.X.cols()) +
                                              " columns, model expects " +
                                              std::to_string(m.beta.size()));
  }
  PredictionBatch out;
  out.mean = ((P.X * m.beta).array() + m.beta0).matrix();
  out.variance = Eigen::MatrixXd::Constant(P.X.rows(), 1, m.sigma2);
  return out;
}

PredictionBatch LinearMetamodel::predict(const Eigen::MatrixXd& X) const {
  const PredictionSet P{domain, X};
  PredictionBatch out;
  out.mean.resize(X.rows(), static_cast<Eigen::Index>(outputs.size()));
  out.variance.resizeLike(out.mean);
  for (std::size_t k = 0; k < outputs.size(); ++k) {
    const auto b = predict_linear(outputs[k], P);
    out.mean.col(static_cast<Eigen::Index>(k)) = b.mean.col(0);
    out.variance.col(static_cast<Eigen::Index>(k)) = b.variance.col(0);
  }
  return out;
}

LinearMetamodel fit_linear_all(const TrainingSet& ts) {
  LinearMetamodel m{ts.domain, {}};
  for (std::size_t k = 0; k < ts.domain->output_count(); ++k) {
    m.outputs.push_back(fit_linear(ts, k));
  }
  return m;
}

}  // namespace proxsim
