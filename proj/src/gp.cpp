#include "proxsim/gp.hpp"

#include "proxsim/error.hpp"
#include "proxsim/rng.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>

namespace proxsim {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;  // log(2 pi)

struct Factor {
  Eigen::MatrixXd L;
  double jitter = 0.0;
};

// Cholesky of K (noise already on the diagonal) with the jitter ladder.
std::optional<Factor> factorize(const Eigen::MatrixXd& K, double sf2) {
  for (const double jitter : jitter_ladder(sf2)) {
    Eigen::MatrixXd A = K;
    A.diagonal().array() += jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(A);
    if (llt.info() != Eigen::Success) continue;
    Eigen::MatrixXd L = llt.matrixL();
    const auto diag = L.diagonal().array();
    if (!diag.allFinite() || (diag <= 0.0).any()) continue;
    return Factor{std::move(L), jitter};
  }
  return std::nullopt;
}

struct LmlEval {
  double value;
  Factor factor;
  Eigen::VectorXd alpha;
};

std::optional<LmlEval> eval_lml(const Eigen::MatrixXd& Xs, const Eigen::VectorXd& yc,
                                const GPHyperparameters& theta) {
  Eigen::MatrixXd K = kernel_matrix(Xs, Xs, theta);
  K.diagonal().array() += theta.noise_variance;
  auto f = factorize(K, theta.signal_variance);
  if (!f) return std::nullopt;
  const auto L = f->L.triangularView<Eigen::Lower>();
  Eigen::VectorXd alpha = L.adjoint().solve(L.solve(yc));
  const double n = static_cast<double>(yc.size());
  const double value = -0.5 * yc.dot(alpha) -
                       f->L.diagonal().array().log().sum() - 0.5 * n * kLog2Pi;
  if (!std::isfinite(value)) return std::nullopt;
  return LmlEval{value, std::move(*f), std::move(alpha)};
}

Eigen::VectorXd centered(const TrainingSet& ts, std::size_t k, double* mean = nullptr) {
  if (k >= static_cast<std::size_t>(ts.Y.cols())) {
    throw Error(Errc::dimension_mismatch, "output index out of range");
  }
  const Eigen::VectorXd y = ts.Y.col(static_cast<Eigen::Index>(k));
  const double m = y.mean();
  if (mean != nullptr) *mean = m;
  return (y.array() - m).matrix();
}

double output_scale(const Eigen::VectorXd& yc) {
  const double v = yc.squaredNorm() / static_cast<double>(std::max<Eigen::Index>(1, yc.size()));
  return v > 0.0 && std::isfinite(v) ? v : 1.0;
}

// Gradient of the LML with respect to the log-parameters.
Eigen::VectorXd lml_gradient(const Eigen::MatrixXd& Xs, const GPHyperparameters& theta,
                             const LmlEval& e) {
  const Eigen::Index n = Xs.rows();
  const Eigen::Index d = Xs.cols();
  const Eigen::MatrixXd Kf = kernel_matrix(Xs, Xs, theta);
  const auto L = e.factor.L.triangularView<Eigen::Lower>();
  Eigen::MatrixXd Kinv = L.solve(Eigen::MatrixXd::Identity(n, n));
  Kinv = L.adjoint().solve(Kinv);
  const Eigen::MatrixXd W = e.alpha * e.alpha.transpose() - Kinv;
  const Eigen::MatrixXd WK = W.cwiseProduct(Kf);

  Eigen::VectorXd g(d + 2);
  for (Eigen::Index c = 0; c < d; ++c) {
    const double l2 = theta.lengthscales[c] * theta.lengthscales[c];
    double acc = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      for (Eigen::Index i = 0; i < n; ++i) {
        const double diff = Xs(i, c) - Xs(j, c);
        acc += WK(i, j) * diff * diff;
      }
    }
    g[c] = 0.5 * acc / l2;
  }
  g[d] = 0.5 * WK.sum();
  g[d + 1] = 0.5 * theta.noise_variance * W.trace();
  return g;
}

struct Box {
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;

  Eigen::VectorXd clamp(const Eigen::VectorXd& p) const {
    return p.cwiseMax(lo).cwiseMin(hi);
  }
};

class LogSpaceObjective {
 public:
  LogSpaceObjective(const Eigen::MatrixXd& Xs, const Eigen::VectorXd& yc,
                    const GPHyperparameters& base, bool fix_noise)
      : Xs_(Xs), yc_(yc), base_(base), fix_noise_(fix_noise) {}

  Eigen::Index size() const {
    return Xs_.cols() + (fix_noise_ ? 1 : 2);
  }

  GPHyperparameters unpack(const Eigen::VectorXd& p) const {
    const Eigen::Index d = Xs_.cols();
    GPHyperparameters t = base_;
    t.lengthscales = p.head(d).array().exp();
    t.signal_variance = std::exp(p[d]);
    if (!fix_noise_) t.noise_variance = std::exp(p[d + 1]);
    return t;
  }

  Eigen::VectorXd pack(const GPHyperparameters& t, double noise_floor) const {
    const Eigen::Index d = Xs_.cols();
    Eigen::VectorXd p(size());
    p.head(d) = t.lengthscales.array().log();
    p[d] = std::log(t.signal_variance);
    if (!fix_noise_) p[d + 1] = std::log(std::max(t.noise_variance, noise_floor));
    return p;
  }

  // Negative LML and its gradient; +inf when the factorization fails.
  double operator()(const Eigen::VectorXd& p, Eigen::VectorXd& grad) const {
    const auto theta = unpack(p);
    const auto e = eval_lml(Xs_, yc_, theta);
    if (!e) return std::numeric_limits<double>::infinity();
    const Eigen::VectorXd g = lml_gradient(Xs_, theta, *e);
    grad = -g.head(size());
    return -e->value;
  }

 private:
  const Eigen::MatrixXd& Xs_;
  const Eigen::VectorXd& yc_;
  GPHyperparameters base_;
  bool fix_noise_;
};

// Projected BFGS with Armijo backtracking. Returns the best point visited.
Eigen::VectorXd minimize(const LogSpaceObjective& f, const Box& box,
                         Eigen::VectorXd p, int max_iterations, double& fbest) {
  p = box.clamp(p);
  const Eigen::Index m = p.size();
  Eigen::VectorXd g(m);
  double fx = f(p, g);
  fbest = fx;
  if (!std::isfinite(fx)) return p;

  Eigen::MatrixXd H = Eigen::MatrixXd::Identity(m, m);
  bool scaled = false;
  for (int it = 0; it < max_iterations; ++it) {
    Eigen::VectorXd pg = g;
    for (Eigen::Index i = 0; i < m; ++i) {
      if ((p[i] <= box.lo[i] && g[i] > 0.0) || (p[i] >= box.hi[i] && g[i] < 0.0)) {
        pg[i] = 0.0;
      }
    }
    if (pg.lpNorm<Eigen::Infinity>() < 1e-7) break;

    Eigen::VectorXd dir = -H * g;
    if (g.dot(dir) >= 0.0) {
      H.setIdentity();
      dir = -g;
    }
    if (!scaled) {
      // Keep the first trial step within a unit box in log space.
      const double big = dir.lpNorm<Eigen::Infinity>();
      if (big > 1.0) dir /= big;
    }

    double step = 1.0;
    Eigen::VectorXd pn(m);
    Eigen::VectorXd gn(m);
    double fn = std::numeric_limits<double>::infinity();
    bool accepted = false;
    for (int ls = 0; ls < 40; ++ls) {
      pn = box.clamp(p + step * dir);
      fn = f(pn, gn);
      if (std::isfinite(fn) && fn <= fx + 1e-4 * g.dot(pn - p)) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;

    const Eigen::VectorXd s = pn - p;
    const Eigen::VectorXd y = gn - g;
    const double improvement = fx - fn;
    p = pn;
    g = gn;
    fx = fn;
    if (s.lpNorm<Eigen::Infinity>() < 1e-12 ||
        improvement <= 1e-14 * (1.0 + std::abs(fx))) {
      break;
    }
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (!scaled) {
        H *= sy / y.squaredNorm();
        scaled = true;
      }
      const double rho = 1.0 / sy;
      const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(m, m);
      H = (I - rho * s * y.transpose()) * H * (I - rho * y * s.transpose()) +
          rho * s * s.transpose();
    }
  }
  fbest = fx;
  return p;
}

bool has_duplicate_rows(const Eigen::MatrixXd& X) {
  for (Eigen::Index i = 1; i < X.rows(); ++i) {
    for (Eigen::Index j = 0; j < i; ++j) {
      if (X.row(i) == X.row(j)) return true;
    }
  }
  return false;
}

}  // namespace

void validate(const GPHyperparameters& theta, std::size_t dim) {
  if (static_cast<std::size_t>(theta.lengthscales.size()) != dim) {
    throw Error(Errc::dimension_mismatch,
                "expected " + std::to_string(dim) + " lengthscales, got " +
                    std::to_string(theta.lengthscales.size()));
  }
  if (!(theta.lengthscales.array() > 0.0).all() ||
      !theta.lengthscales.allFinite() || !(theta.signal_variance > 0.0) ||
      !std::isfinite(theta.signal_variance) || !(theta.noise_variance >= 0.0) ||
      !std::isfinite(theta.noise_variance)) {
    throw Error(Errc::invalid_config,
                "hyperparameters need positive lengthscales and signal "
                "variance and a non-negative noise variance");
  }
}

double kernel(const EncodedPoint& x, const EncodedPoint& xp,
              const GPHyperparameters& theta) {
  if (x.size() != xp.size() || x.size() != theta.lengthscales.size()) {
    throw Error(Errc::dimension_mismatch, "kernel arguments differ in dimension");
  }
  const double r2 =
      ((x - xp).array() / theta.lengthscales.array()).square().sum();
  return theta.signal_variance * std::exp(-0.5 * r2);
}

Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                              const GPHyperparameters& theta) {
  if (A.cols() != B.cols() || A.cols() != theta.lengthscales.size()) {
    throw Error(Errc::dimension_mismatch, "kernel arguments differ in dimension");
  }
  const Eigen::ArrayXd inv = theta.lengthscales.array().inverse();
  const Eigen::MatrixXd As = A * inv.matrix().asDiagonal();
  const Eigen::MatrixXd Bs = B * inv.matrix().asDiagonal();
  Eigen::MatrixXd K(A.rows(), B.rows());
  const Eigen::Index d = A.cols();
  for (Eigen::Index j = 0; j < B.rows(); ++j) {
    for (Eigen::Index i = 0; i < A.rows(); ++i) {
      double r2 = 0.0;
      for (Eigen::Index c = 0; c < d; ++c) {
        const double diff = As(i, c) - Bs(j, c);
        r2 += diff * diff;
      }
      K(i, j) = theta.signal_variance * std::exp(-0.5 * r2);
    }
  }
  return K;
}

std::vector<double> jitter_ladder(double signal_variance) {
  std::vector<double> ladder{0.0};
  for (double rel = 1e-8; rel <= 1e-2 * 1.0000001; rel *= 10.0) {
    ladder.push_back(rel * signal_variance);
  }
  return ladder;
}

GPHyperparameters default_hyperparameters(const TrainingSet& ts,
                                          std::size_t output_index) {
  const Domain& dom = *ts.domain;
  GPHyperparameters t;
  t.lengthscales.resize(static_cast<Eigen::Index>(dom.encoded_dim()));
  for (std::size_t i = 0; i < dom.inputs().size(); ++i) {
    const auto& v = dom.inputs()[i];
    const double l = v.kind == VariableKind::categorical ? 1.0 : 0.5;
    t.lengthscales.segment(static_cast<Eigen::Index>(dom.slot_offset(i)),
                           static_cast<Eigen::Index>(v.width()))
        .setConstant(l);
  }
  t.signal_variance = ts.empty() ? 1.0 : output_scale(centered(ts, output_index));
  t.noise_variance = 1e-4 * t.signal_variance;
  return t;
}

double log_marginal_likelihood(const TrainingSet& ts, const GPHyperparameters& theta,
                               std::size_t output_index) {
  validate(theta, ts.domain->encoded_dim());
  if (ts.empty()) throw Error(Errc::too_few_points, "empty training set");
  const auto e = eval_lml(ts.domain->scale_rows(ts.X), centered(ts, output_index), theta);
  if (!e) {
    throw Error(Errc::not_positive_definite,
                "kernel matrix is not positive definite after jitter escalation");
  }
  return e->value;
}

LmlGradient log_marginal_likelihood_gradient(const TrainingSet& ts,
                                             const GPHyperparameters& theta,
                                             std::size_t output_index) {
  validate(theta, ts.domain->encoded_dim());
  if (ts.empty()) throw Error(Errc::too_few_points, "empty training set");
  const Eigen::MatrixXd Xs = ts.domain->scale_rows(ts.X);
  const auto e = eval_lml(Xs, centered(ts, output_index), theta);
  if (!e) {
    throw Error(Errc::not_positive_definite,
                "kernel matrix is not positive definite after jitter escalation");
  }
  return {e->value, lml_gradient(Xs, theta, *e)};
}

GPHyperparameters optimize_hyperparameters(const TrainingSet& ts,
                                           const GPHyperparameters& init,
                                           std::size_t output_index,
                                           const GPFitOptions& options) {
  validate(init, ts.domain->encoded_dim());
  if (ts.empty()) throw Error(Errc::too_few_points, "empty training set");
  const Eigen::MatrixXd Xs = ts.domain->scale_rows(ts.X);
  const Eigen::VectorXd yc = centered(ts, output_index);
  const double v = output_scale(yc);
  const Eigen::Index d = Xs.cols();

  const LogSpaceObjective objective(Xs, yc, init, options.fix_noise);
  const Eigen::Index m = objective.size();
  Box box{Eigen::VectorXd(m), Eigen::VectorXd(m)};
  box.lo.head(d).setConstant(std::log(1e-3));
  box.hi.head(d).setConstant(std::log(1e3));
  box.lo[d] = std::log(1e-6 * v);
  box.hi[d] = std::log(1e4 * v);
  const double noise_floor = 1e-10 * v;
  if (!options.fix_noise) {
    box.lo[d + 1] = std::log(noise_floor);
    box.hi[d + 1] = std::log(10.0 * v);
  }

  GPHyperparameters best = init;
  double best_lml = -std::numeric_limits<double>::infinity();
  if (const auto e = eval_lml(Xs, yc, init)) best_lml = e->value;

  Rng rng(derive_seed(options.seed, Stream::hyperparameters, output_index));
  const int restarts = std::max(1, options.restarts);
  for (int r = 0; r < restarts; ++r) {
    Eigen::VectorXd start(m);
    if (r == 0) {
      start = objective.pack(init, noise_floor);
    } else {
      for (Eigen::Index c = 0; c < d; ++c) {
        start[c] = rng.uniform(std::log(0.05), std::log(2.0));
      }
      start[d] = rng.uniform(std::log(0.2 * v), std::log(5.0 * v));
      if (!options.fix_noise) {
        start[d + 1] = rng.uniform(std::log(1e-6 * v), std::log(1e-2 * v));
      }
    }
    double fmin = 0.0;
    const Eigen::VectorXd p =
        minimize(objective, box, start, options.max_iterations, fmin);
    if (std::isfinite(fmin) && -fmin > best_lml) {
      best_lml = -fmin;
      best = objective.unpack(p);
    }
  }
  if (!std::isfinite(best_lml)) {
    throw Error(Errc::not_positive_definite,
                "no restart produced a positive-definite kernel matrix");
  }
  return best;
}

GPModel::GPModel(TrainingSet training, std::vector<GPOutputFit> outputs)
    : training_(std::move(training)), outputs_(std::move(outputs)) {
  scaled_ = training_.domain->scale_rows(training_.X);
}

PredictionBatch GPModel::predict(const Eigen::MatrixXd& X) const {
  if (static_cast<std::size_t>(X.cols()) != training_.domain->encoded_dim()) {
    throw Error(Errc::dimension_mismatch,
                "prediction points have " + std::to_string(X.cols()) +
                    " slots, model expects " +
                    std::to_string(training_.domain->encoded_dim()));
  }
  const Eigen::MatrixXd Q = training_.domain->scale_rows(X);
  PredictionBatch out;
  out.mean.resize(X.rows(), static_cast<Eigen::Index>(outputs_.size()));
  out.variance.resizeLike(out.mean);
  for (std::size_t k = 0; k < outputs_.size(); ++k) {
    const auto& o = outputs_[k];
    const auto col = static_cast<Eigen::Index>(k);
    const Eigen::MatrixXd Ks = kernel_matrix(scaled_, Q, o.theta);
    out.mean.col(col) = (Ks.transpose() * o.alpha).array() + o.mean;
    const Eigen::MatrixXd V = o.chol.triangularView<Eigen::Lower>().solve(Ks);
    out.variance.col(col) =
        (o.theta.signal_variance + o.theta.noise_variance -
         V.colwise().squaredNorm().transpose().array())
            .max(0.0);
  }
  return out;
}

GPModel fit_gp(const TrainingSet& ts, const std::vector<GPHyperparameters>& init,
               const GPFitOptions& options) {
  const std::size_t outputs = ts.domain->output_count();
  if (ts.empty()) throw Error(Errc::too_few_points, "cannot fit a GP to zero rows");
  if (init.size() != 1 && init.size() != outputs) {
    throw Error(Errc::dimension_mismatch,
                "need one hyperparameter set or one per output");
  }
  const Eigen::MatrixXd Xs = ts.domain->scale_rows(ts.X);
  const bool duplicates = has_duplicate_rows(ts.X);

  std::vector<GPOutputFit> fits;
  for (std::size_t k = 0; k < outputs; ++k) {
    GPHyperparameters theta = init.size() == 1 ? init[0] : init[k];
    validate(theta, ts.domain->encoded_dim());
    const bool pinned = options.fix_noise || !options.optimize;
    if (options.check_duplicates && duplicates && pinned &&
        theta.noise_variance <= 1e-8 * theta.signal_variance) {
      throw Error(Errc::duplicate_input,
                  "duplicate training inputs with noise variance pinned to ~0");
    }
    if (options.optimize) {
      GPFitOptions o = options;
      theta = optimize_hyperparameters(ts, theta, k, o);
    }
    GPOutputFit fit;
    const Eigen::VectorXd yc = centered(ts, k, &fit.mean);
    auto e = eval_lml(Xs, yc, theta);
    if (!e) {
      throw Error(Errc::not_positive_definite,
                  "kernel matrix is not positive definite after jitter escalation");
    }
    fit.theta = theta;
    fit.chol = std::move(e->factor.L);
    fit.jitter = e->factor.jitter;
    fit.alpha = std::move(e->alpha);
    fit.lml = e->value;
    fits.push_back(std::move(fit));
  }
  return GPModel(ts, std::move(fits));
}

GPModel fit_gp(const TrainingSet& ts, const GPFitOptions& options) {
  if (ts.empty()) throw Error(Errc::too_few_points, "cannot fit a GP to zero rows");
  std::vector<GPHyperparameters> init;
  for (std::size_t k = 0; k < ts.domain->output_count(); ++k) {
    init.push_back(default_hyperparameters(ts, k));
  }
  return fit_gp(ts, init, options);
}

PredictionBatch predict_gp(const GPModel& m, const PredictionSet& P) {
  return m.predict(P.X);
}

}  // namespace proxsim
