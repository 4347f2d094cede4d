#pragma once

#include "proxsim/domain.hpp"
#include "proxsim/prediction.hpp"

#include <cstdint>
#include <vector>

namespace proxsim {

struct GPHyperparameters {
  Eigen::VectorXd lengthscales;  // ARD, one per encoded slot
  double signal_variance = 1.0;
  double noise_variance = 0.0;

  bool operator==(const GPHyperparameters& o) const {
    return lengthscales.size() == o.lengthscales.size() &&
           lengthscales == o.lengthscales &&
           signal_variance == o.signal_variance &&
           noise_variance == o.noise_variance;
  }
};

void validate(const GPHyperparameters& theta, std::size_t dim);

/// Squared-exponential ARD covariance:
/// sf2 * exp(-0.5 * sum_i (x_i - x'_i)^2 / l_i^2).
double kernel(const EncodedPoint& x, const EncodedPoint& xp,
              const GPHyperparameters& theta);

/// Cross-covariance between the rows of A (n x D) and B (m x D).
Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                              const GPHyperparameters& theta);

/// Diagonal jitter ladder applied on Cholesky failure: first no jitter, then
/// 1e-8 * sf2 escalating by x10 up to 1e-2 * sf2.
std::vector<double> jitter_ladder(double signal_variance);

/// Heuristic starting point: lengthscale 0.5 per numeric slot (scaled units),
/// 1.0 per one-hot slot, sf2 = variance of the output (1 if constant),
/// sn2 = 1e-4 * sf2.
GPHyperparameters default_hyperparameters(const TrainingSet& ts,
                                          std::size_t output_index);

/// Exact log marginal likelihood of the centered output column, evaluated on
/// the scaled inputs through a Cholesky factor.
double log_marginal_likelihood(const TrainingSet& ts,
                               const GPHyperparameters& theta,
                               std::size_t output_index);

/// LML with its gradient with respect to
/// (log l_1..log l_D, log sf2, log sn2).
struct LmlGradient {
  double value;
  Eigen::VectorXd gradient;
};
LmlGradient log_marginal_likelihood_gradient(const TrainingSet& ts,
                                             const GPHyperparameters& theta,
                                             std::size_t output_index);

struct GPFitOptions {
  bool optimize = true;
  bool fix_noise = false;  // keep theta.noise_variance as given
  int restarts = 5;        // total local searches, the first starts at theta_init
  std::uint64_t seed = 0;
  int max_iterations = 200;  // per local search
  // Refitting stored hyperparameters skips the duplicate-input guard.
  bool check_duplicates = true;
};

/// Multi-start quasi-Newton ascent of the LML in log-parameter space, within
/// box bounds. Never returns a point worse than `init`.
GPHyperparameters optimize_hyperparameters(const TrainingSet& ts,
                                           const GPHyperparameters& init,
                                           std::size_t output_index,
                                           const GPFitOptions& options = {});

/// Fitted state for one output KPI.
struct GPOutputFit {
  GPHyperparameters theta;
  double mean = 0.0;       // prior mean (training mean of the output)
  Eigen::MatrixXd chol;    // lower factor of K + (sn2 + jitter) I
  Eigen::VectorXd alpha;   // (K + (sn2 + jitter) I)^-1 (y - mean)
  double jitter = 0.0;
  double lml = 0.0;
};

/// Independent GP per output sharing the training inputs. Immutable after
/// construction; predict() is safe to call concurrently.
class GPModel {
 public:
  GPModel(TrainingSet training, std::vector<GPOutputFit> outputs);

  const DomainPtr& domain() const noexcept { return training_.domain; }
  const TrainingSet& training() const noexcept { return training_; }
  const std::vector<GPOutputFit>& outputs() const noexcept { return outputs_; }
  const Eigen::MatrixXd& scaled_inputs() const noexcept { return scaled_; }

  /// Rows of X are encoded points in raw units.
  PredictionBatch predict(const Eigen::MatrixXd& X) const;

 private:
  TrainingSet training_;
  Eigen::MatrixXd scaled_;
  std::vector<GPOutputFit> outputs_;
};

/// `init` holds either one hyperparameter set shared by every output or one
/// per output. Throws DuplicateInput when the noise is pinned to ~0 and two
/// training rows coincide.
GPModel fit_gp(const TrainingSet& ts, const std::vector<GPHyperparameters>& init,
               const GPFitOptions& options = {});

/// Fits with default_hyperparameters() as the starting point.
GPModel fit_gp(const TrainingSet& ts, const GPFitOptions& options = {});

PredictionBatch predict_gp(const GPModel& m, const PredictionSet& P);

}  // namespace proxsim
