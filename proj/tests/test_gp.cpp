#include <doctest.h>

#include "oracle.hpp"
#include "proxsim/error.hpp"
#include "proxsim/gp.hpp"
#include "proxsim/rng.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <numeric>

using namespace proxsim;

namespace {

DomainPtr unit_domain(int dim) {
  std::vector<VariableSpec> in;
  for (int i = 0; i < dim; ++i) {
    in.push_back(VariableSpec::continuous("x" + std::to_string(i), 0, 1));
  }
  return std::make_shared<const Domain>(in, std::vector<VariableSpec>{VariableSpec::output("y")});
}

GPHyperparameters theta_of(std::vector<double> ell, double sf2, double sn2) {
  GPHyperparameters t;
  t.lengthscales = Eigen::Map<Eigen::VectorXd>(ell.data(), static_cast<Eigen::Index>(ell.size()));
  t.signal_variance = sf2;
  t.noise_variance = sn2;
  return t;
}

GPFitOptions no_opt() {
  GPFitOptions o;
  o.optimize = false;
  return o;
}

oracle::DenseGP dense_of(const GPModel& m) {
  const auto& fit = m.outputs()[0];
  oracle::DenseGP g;
  const Eigen::MatrixXd& S = m.scaled_inputs();
  for (Eigen::Index i = 0; i < S.rows(); ++i) {
    oracle::Vec row;
    for (Eigen::Index c = 0; c < S.cols(); ++c) row.push_back(S(i, c));
    g.X.push_back(row);
    g.y.push_back(m.training().Y(i, 0));
  }
  g.ell.assign(fit.theta.lengthscales.data(),
               fit.theta.lengthscales.data() + fit.theta.lengthscales.size());
  g.sf2 = fit.theta.signal_variance;
  g.diag = fit.theta.noise_variance + fit.jitter;
  g.extra_var = fit.theta.noise_variance;
  return g;
}

TrainingSet random_set(Rng& rng, int n, int dim) {
  const auto dom = unit_domain(dim);
  Eigen::MatrixXd X(n, dim), Y(n, 1);
  for (int i = 0; i < n; ++i) {
    for (int c = 0; c < dim; ++c) X(i, c) = rng.uniform();
    Y(i, 0) = std::sin(3 * X(i, 0)) + (dim > 1 ? X(i, 1) * X(i, 1) : 0.0) + 0.05 * rng.normal();
  }
  return TrainingSet(dom, X, Y);
}

}  // namespace

TEST_CASE("kernel examples") {
  const auto t1 = theta_of({1.0}, 1.0, 0.0);
  CHECK(kernel(Eigen::VectorXd::Constant(1, 0.3), Eigen::VectorXd::Constant(1, 0.3), t1) == 1.0);
  const double k01 = kernel(Eigen::VectorXd::Constant(1, 0.0), Eigen::VectorXd::Constant(1, 1.0), t1);
  CHECK(k01 == doctest::Approx(oracle::se_ard({0.0}, {1.0}, {1.0}, 1.0)).epsilon(1e-15));
  CHECK(std::abs(k01 - 0.606531) < 1e-6);
  const auto t2 = theta_of({1.0, 1.0}, 2.0, 0.0);
  const double k34 = kernel(Eigen::Vector2d(0, 0), Eigen::Vector2d(3, 4), t2);
  CHECK(k34 == doctest::Approx(oracle::se_ard({0, 0}, {3, 4}, {1, 1}, 2.0)).epsilon(1e-14));
  CHECK(std::abs(k34 - 7.46e-6) < 1e-8);
  CHECK_THROWS_AS(kernel(Eigen::Vector2d(0, 0), Eigen::VectorXd::Zero(1), t2), Error);
}

TEST_CASE("kernel symmetry and bounds over random inputs") {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const int d = 1 + static_cast<int>(rng.below(4));
    GPHyperparameters t;
    t.lengthscales = Eigen::VectorXd(d);
    for (int c = 0; c < d; ++c) t.lengthscales[c] = rng.uniform(0.05, 3.0);
    t.signal_variance = rng.uniform(0.1, 10.0);
    Eigen::VectorXd a(d), b(d);
    for (int c = 0; c < d; ++c) {
      a[c] = rng.uniform(-1, 1);
      b[c] = rng.uniform(-1, 1);
    }
    const double kab = kernel(a, b, t);
    CHECK(kab == kernel(b, a, t));
    CHECK(kab > 0.0);
    CHECK(kab <= t.signal_variance);
    CHECK(kernel(a, a, t) == t.signal_variance);
  }
}

TEST_CASE("log marginal likelihood closed forms") {
  const auto dom = unit_domain(1);
  TrainingSet one(dom, Eigen::MatrixXd::Constant(1, 1, 0.0), Eigen::MatrixXd::Constant(1, 1, 0.0));
  const auto t = theta_of({1.0}, 1.0, 0.0);
  CHECK(std::abs(log_marginal_likelihood(one, t, 0) - (-0.918939)) < 1e-6);
  CHECK(log_marginal_likelihood(one, t, 0) == doctest::Approx(-0.5 * std::log(2 * std::numbers::pi)));
  TrainingSet five(dom, Eigen::MatrixXd::Constant(1, 1, 0.0), Eigen::MatrixXd::Constant(1, 1, 5.0));
  CHECK(log_marginal_likelihood(five, t, 0) == log_marginal_likelihood(one, t, 0));

  Eigen::MatrixXd X(2, 1), Y(2, 1);
  X << 0, 1;
  Y << 0.5, -0.5;
  const auto t2 = theta_of({1.0}, 1.0, 0.1);
  oracle::DenseGP g{{{0.0}, {1.0}}, {0.5, -0.5}, {1.0}, 1.0, 0.1, 0.1};
  CHECK(std::abs(log_marginal_likelihood(TrainingSet(dom, X, Y), t2, 0) - g.lml()) < 1e-8);
}

TEST_CASE("fit_gp single point and determinism") {
  const auto dom = unit_domain(1);
  TrainingSet one(dom, Eigen::MatrixXd::Constant(1, 1, 0.0), Eigen::MatrixXd::Constant(1, 1, 1.0));
  const auto t = theta_of({1.0}, 1.0, 0.0);
  const auto m = fit_gp(one, {t}, no_opt());
  const auto& f = m.outputs()[0];
  CHECK(f.chol.rows() == 1);
  CHECK(f.chol(0, 0) == doctest::Approx(std::sqrt(1.0 + 0.0 + f.jitter)));

  Rng rng(11);
  const auto ts = random_set(rng, 25, 2);
  GPFitOptions o;
  o.seed = 99;
  const auto a = fit_gp(ts, o);
  const auto b = fit_gp(ts, o);
  CHECK(a.outputs()[0].theta == b.outputs()[0].theta);
  CHECK(a.outputs()[0].lml == b.outputs()[0].lml);
  CHECK(a.outputs()[0].alpha == b.outputs()[0].alpha);
}

TEST_CASE("predict_gp one-point posterior") {
  const auto dom = unit_domain(1);
  TrainingSet one(dom, Eigen::MatrixXd::Constant(1, 1, 0.0), Eigen::MatrixXd::Constant(1, 1, 1.0));
  const auto m = fit_gp(one, {theta_of({1.0}, 1.0, 0.0)}, no_opt());
  Eigen::MatrixXd Q(3, 1);
  Q << 0.0, 1.0, 100.0;
  const auto p = m.predict(Q);
  CHECK(std::abs(p.mean(0, 0) - 1.0) < 1e-12);
  CHECK(p.variance(0, 0) <= 1e-8);
  // the label equals the prior mean, so the mean stays 1 everywhere
  CHECK(std::abs(p.mean(1, 0) - 1.0) < 1e-12);
  CHECK(std::abs(p.variance(1, 0) - (1 - std::exp(-1.0))) < 1e-12);
  CHECK(std::abs(p.variance(1, 0) - 0.632121) < 1e-6);
  CHECK(std::abs(p.mean(2, 0) - 1.0) < 1e-12);
  CHECK(std::abs(p.variance(2, 0) - 1.0) < 1e-12);

  // Two points break the symmetry; the one-point formula k*alpha applies to
  // the centered label, checked through the dense oracle.
  Eigen::MatrixXd X(2, 1), Y(2, 1);
  X << 0, 1;
  Y << 1, 0;
  const auto m2 = fit_gp(TrainingSet(dom, X, Y), {theta_of({1.0}, 1.0, 0.0)}, no_opt());
  const auto g = dense_of(m2);
  const auto [mu, var] = g.predict({0.5});
  const auto p2 = m2.predict(Eigen::MatrixXd::Constant(1, 1, 0.5));
  CHECK(std::abs(p2.mean(0, 0) - mu) < 1e-10);
  CHECK(std::abs(p2.variance(0, 0) - var) < 1e-10);
}

TEST_CASE("dense oracle equivalence for random small problems") {
  Rng rng(2024);
  for (int trial = 0; trial < 30; ++trial) {
    const int dim = 1 + static_cast<int>(rng.below(3));
    const int n = 1 + static_cast<int>(rng.below(20));
    const auto ts = random_set(rng, n, dim);
    GPHyperparameters t;
    t.lengthscales = Eigen::VectorXd(dim);
    for (int c = 0; c < dim; ++c) t.lengthscales[c] = rng.uniform(0.2, 1.5);
    t.signal_variance = rng.uniform(0.5, 3.0);
    t.noise_variance = rng.uniform(1e-4, 1e-1);
    const auto m = fit_gp(ts, {t}, no_opt());
    const auto g = dense_of(m);
    CHECK(std::abs(m.outputs()[0].lml - g.lml()) < 1e-8);
    CHECK(std::abs(log_marginal_likelihood(ts, t, 0) - g.lml()) < 1e-8);
    Eigen::MatrixXd Q(5, dim);
    for (int i = 0; i < 5; ++i)
      for (int c = 0; c < dim; ++c) Q(i, c) = rng.uniform();
    const auto p = m.predict(Q);
    for (int i = 0; i < 5; ++i) {
      oracle::Vec q;
      for (int c = 0; c < dim; ++c) q.push_back(Q(i, c));
      const auto [mu, var] = g.predict(q);
      CHECK(std::abs(p.mean(i, 0) - mu) < 1e-8);
      CHECK(std::abs(p.variance(i, 0) - var) < 1e-8);
    }
  }
}

TEST_CASE("latent posterior variance at training inputs is at most the noise") {
  Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const auto ts = random_set(rng, 15, 2);
    GPFitOptions o;
    o.seed = static_cast<std::uint64_t>(trial);
    const auto m = fit_gp(ts, o);
    const auto& th = m.outputs()[0].theta;
    REQUIRE(th.signal_variance <= 10.0);
    const auto p = m.predict(ts.X);
    // predictive variance = latent variance + sn2
    CHECK(p.variance.maxCoeff() - th.noise_variance <= th.noise_variance + 1e-6);
  }
}

TEST_CASE("posterior mean is invariant to row permutations") {
  Rng rng(8);
  const auto ts = random_set(rng, 18, 2);
  const auto t = theta_of({0.4, 0.7}, 1.3, 0.01);
  std::vector<int> perm(18);
  std::iota(perm.begin(), perm.end(), 0);
  std::reverse(perm.begin(), perm.end());
  std::swap(perm[2], perm[9]);
  Eigen::MatrixXd X(18, 2), Y(18, 1);
  for (int i = 0; i < 18; ++i) {
    X.row(i) = ts.X.row(perm[static_cast<std::size_t>(i)]);
    Y.row(i) = ts.Y.row(perm[static_cast<std::size_t>(i)]);
  }
  const auto a = fit_gp(ts, {t}, no_opt());
  const auto b = fit_gp(TrainingSet(ts.domain, X, Y), {t}, no_opt());
  Eigen::MatrixXd Q(20, 2);
  for (int i = 0; i < 20; ++i) Q.row(i) << rng.uniform(), rng.uniform();
  CHECK((a.predict(Q).mean - b.predict(Q).mean).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("adding a point never increases variance when noise is zero") {
  Rng rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 1 + static_cast<int>(rng.below(9));
    const auto ts = random_set(rng, n + 1, 2);
    const auto t = theta_of({0.5, 0.5}, 1.0, 0.0);
    const TrainingSet small(ts.domain, ts.X.topRows(n), ts.Y.topRows(n));
    const auto a = fit_gp(small, {t}, no_opt());
    const auto b = fit_gp(ts, {t}, no_opt());
    const auto ga = dense_of(a);
    const auto gb = dense_of(b);
    for (int q = 0; q < 10; ++q) {
      const oracle::Vec x{rng.uniform(), rng.uniform()};
      const double va = ga.predict(x).second;
      const double vb = gb.predict(x).second;
      CHECK(vb <= va + 1e-10);
      const auto pa = a.predict(Eigen::RowVector2d(x[0], x[1]));
      const auto pb = b.predict(Eigen::RowVector2d(x[0], x[1]));
      CHECK(pb.variance(0, 0) <= pa.variance(0, 0) + 1e-10);
    }
  }
}

TEST_CASE("analytic LML gradient matches central differences") {
  Rng rng(21);
  const auto ts = random_set(rng, 12, 2);
  const auto t = theta_of({0.3, 0.8}, 1.7, 0.02);
  const auto g = log_marginal_likelihood_gradient(ts, t, 0);
  const double h = 1e-5;
  for (int k = 0; k < 4; ++k) {
    auto plus = t;
    auto minus = t;
    auto bump = [&](GPHyperparameters& p, double s) {
      if (k < 2) p.lengthscales[k] *= std::exp(s);
      if (k == 2) p.signal_variance *= std::exp(s);
      if (k == 3) p.noise_variance *= std::exp(s);
    };
    bump(plus, h);
    bump(minus, -h);
    const double fd = (log_marginal_likelihood(ts, plus, 0) -
                       log_marginal_likelihood(ts, minus, 0)) / (2 * h);
    CHECK(std::abs(fd - g.gradient[k]) <= 1e-4 * std::max(1.0, std::abs(fd)));
  }
}

TEST_CASE("optimizer never does worse than its seeds") {
  // Draw 40 points from the GP prior with known hyperparameters.
  const auto dom = unit_domain(2);
  const auto truth = theta_of({0.3, 0.6}, 2.0, 0.01);
  Rng rng(77);
  Eigen::MatrixXd X(40, 2);
  for (int i = 0; i < 40; ++i) X.row(i) << rng.uniform(), rng.uniform();
  Eigen::MatrixXd K = kernel_matrix(X, X, truth);
  K.diagonal().array() += truth.noise_variance;
  const Eigen::MatrixXd L = K.llt().matrixL();
  Eigen::VectorXd z(40);
  for (int i = 0; i < 40; ++i) z[i] = rng.normal();
  const TrainingSet ts(dom, X, L * z);
  const double at_truth = log_marginal_likelihood(ts, truth, 0);
  GPFitOptions o;
  o.seed = 1;
  const auto best = optimize_hyperparameters(ts, truth, 0, o);
  CHECK(log_marginal_likelihood(ts, best, 0) >= at_truth - 1e-9);

  // A one-point problem: whatever we start from, the result is no worse.
  TrainingSet one(dom, Eigen::MatrixXd::Constant(1, 2, 0.5), Eigen::MatrixXd::Constant(1, 1, 3.0));
  const auto init = theta_of({0.5, 0.5}, 1.0, 1e-4);
  const auto r = optimize_hyperparameters(one, init, 0, o);
  CHECK(log_marginal_likelihood(one, r, 0) >= log_marginal_likelihood(one, init, 0) - 1e-12);

  // Same seed, same answer.
  CHECK(optimize_hyperparameters(ts, truth, 0, o) == best);
}

TEST_CASE("signal variance tracks the empirical output variance") {
  const auto dom = unit_domain(1);
  Rng rng(4);
  const int n = 30;
  Eigen::MatrixXd X(n, 1), Y(n, 1);
  for (int i = 0; i < n; ++i) {
    X(i, 0) = rng.uniform();
    Y(i, 0) = 400.0 * std::sin(7.0 * X(i, 0)) + 50.0 * rng.normal();
  }
  const TrainingSet ts(dom, X, Y);
  const double var = (Y.array() - Y.mean()).square().mean();
  GPFitOptions o;
  o.seed = 3;
  const auto t = optimize_hyperparameters(ts, default_hyperparameters(ts, 0), 0, o);
  CHECK(t.signal_variance >= var / 10.0);
  CHECK(t.signal_variance <= var * 10.0);
}

TEST_CASE("duplicate inputs with pinned zero noise") {
  const auto dom = unit_domain(1);
  Eigen::MatrixXd X(2, 1), Y(2, 1);
  X << 0.5, 0.5;
  Y << 1, 2;
  const TrainingSet ts(dom, X, Y);
  GPFitOptions o;
  o.fix_noise = true;
  try {
    fit_gp(ts, {theta_of({1.0}, 1.0, 0.0)}, o);
    FAIL("expected DuplicateInput");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::duplicate_input);
  }
  const auto m = fit_gp(ts, {theta_of({1.0}, 1.0, 0.1)}, o);
  CHECK(std::abs(m.predict(X).mean(0, 0) - 1.5) < 0.1);
}
