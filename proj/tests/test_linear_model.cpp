#include <doctest.h>

#include "oracle.hpp"
#include "proxsim/error.hpp"
#include "proxsim/linear_model.hpp"
#include "proxsim/rng.hpp"

using namespace proxsim;

namespace {

DomainPtr plane_domain() {
  return std::make_shared<const Domain>(
      std::vector<VariableSpec>{VariableSpec::continuous("x1", 0, 1),
                                VariableSpec::continuous("x2", 0, 1)},
      std::vector<VariableSpec>{VariableSpec::output("y")});
}

}  // namespace

TEST_CASE("exact recovery at D+1 affinely independent points") {
  Eigen::MatrixXd X(3, 2), Y(3, 1);
  X << 0, 0, 1, 0, 0, 1;
  for (int i = 0; i < 3; ++i) Y(i, 0) = 1 + 2 * X(i, 0) + 3 * X(i, 1);
  const auto m = fit_linear(TrainingSet(plane_domain(), X, Y));
  CHECK(m.beta0 == doctest::Approx(1).epsilon(1e-8));
  CHECK(std::abs(m.beta0 - 1) < 1e-8);
  CHECK(std::abs(m.beta[0] - 2) < 1e-8);
  CHECK(std::abs(m.beta[1] - 3) < 1e-8);
}

TEST_CASE("constant data") {
  Eigen::MatrixXd X(4, 2), Y(4, 1);
  X << 0, 0, 1, 0, 0, 1, 1, 1;
  Y.setConstant(7.0);
  const auto m = fit_linear(TrainingSet(plane_domain(), X, Y));
  CHECK(std::abs(m.beta0 - 7) < 1e-12);
  CHECK(m.beta.cwiseAbs().maxCoeff() < 1e-12);
  CHECK(m.sigma2 < 1e-24);
}

TEST_CASE("noisy recovery agrees with the normal-equations oracle") {
  Rng rng(7);
  const int n = 200;
  Eigen::MatrixXd X(n, 2), Y(n, 1);
  oracle::Mat ox;
  oracle::Vec oy;
  for (int i = 0; i < n; ++i) {
    X(i, 0) = rng.uniform();
    X(i, 1) = rng.uniform();
    Y(i, 0) = 2 + 3 * X(i, 0) - X(i, 1) + 0.1 * rng.normal();
    ox.push_back({X(i, 0), X(i, 1)});
    oy.push_back(Y(i, 0));
  }
  const auto m = fit_linear(TrainingSet(plane_domain(), X, Y));
  const auto ref = oracle::normal_equations(ox, oy);
  CHECK(std::abs(m.beta0 - ref[0]) < 1e-9);
  CHECK(std::abs(m.beta[0] - ref[1]) < 1e-9);
  CHECK(std::abs(m.beta[1] - ref[2]) < 1e-9);
  CHECK(std::abs(m.beta0 - 2) < 0.1);
  CHECK(std::abs(m.beta[0] - 3) < 0.1);
  CHECK(std::abs(m.beta[1] + 1) < 0.1);
  CHECK(m.sigma2 == doctest::Approx(0.01).epsilon(0.3));
}

TEST_CASE("predict_linear") {
  LinearModel m{plane_domain(), 0, 1.0, Eigen::Vector2d(2, 3), 0.25};
  PredictionSet P{m.domain, Eigen::MatrixXd(2, 2)};
  P.X << 0, 0, 1, 1;
  const auto p = predict_linear(m, P);
  CHECK(p.mean(0, 0) == 1.0);
  CHECK(p.mean(1, 0) == 6.0);
  CHECK(p.variance(0, 0) == 0.25);
  CHECK(p.variance(1, 0) == 0.25);

  PredictionSet bad{m.domain, Eigen::MatrixXd::Zero(1, 3)};
  CHECK_THROWS_AS(predict_linear(m, bad), Error);
}

TEST_CASE("degenerate designs") {
  Eigen::MatrixXd X(2, 2), Y(2, 1);
  X << 0, 0, 1, 1;
  Y << 1, 2;
  try {
    fit_linear(TrainingSet(plane_domain(), X, Y));
    FAIL("expected TooFewPoints");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::too_few_points);
  }
  Eigen::MatrixXd Xc(4, 2), Yc(4, 1);
  Xc << 0, 0, 1, 1, 2, 2, 3, 3;  // collinear
  Yc << 1, 2, 3, 4;
  try {
    fit_linear(TrainingSet(plane_domain(), Xc, Yc));
    FAIL("expected RankDeficient");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::rank_deficient);
  }
}
