#include <cmath>
#include <random>

#include <Eigen/QR>
#include <gtest/gtest.h>

#include "pneumodef/errors.hpp"
#include "pneumodef/sensitivity.hpp"

namespace pneumodef {
namespace {

FeatureMatrix random_inputs(std::mt19937_64& rng, int rows, int cols) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  FeatureMatrix x(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) x(r, c) = u(rng);
  return x;
}

KernelModel random_model(std::mt19937_64& rng, int d, int n, double kb, FeatureScaling scaling = FeatureScaling::none) {
  const FeatureMatrix x = random_inputs(rng, d, n);
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXd y(d, 3);
  for (int r = 0; r < d; ++r)
    for (int c = 0; c < 3; ++c) y(r, c) = g(rng);
  return fit(x, y, KernelHyperparams{1.0, kb, 1e-3}, FitOptions{scaling});
}

Eigen::MatrixXd central_difference(const KernelModel& m, const Eigen::RowVectorXd& x, double h) {
  Eigen::MatrixXd a(m.output_dim(), m.input_dim());
  for (Eigen::Index n = 0; n < m.input_dim(); ++n) {
    Eigen::RowVectorXd p = x, q = x;
    p[n] += h;
    q[n] -= h;
    a.col(n) = (predict(m, std::span<const double>(p.data(), p.size())) -
                predict(m, std::span<const double>(q.data(), q.size()))) /
               (2.0 * h);
  }
  return a;
}

TEST(Jacobian, HandSingleSample) {
  KernelModel m;
  m.hyper = KernelHyperparams{1.0, 1.0, 0.0};
  m.train_x = FeatureMatrix::Zero(1, 1);
  m.weights = Eigen::MatrixXd::Constant(1, 1, 2.0);
  const std::vector<double> x{1.0};
  const Eigen::MatrixXd a = prediction_jacobian(m, x);
  ASSERT_EQ(a.rows(), 1);
  ASSERT_EQ(a.cols(), 1);
  EXPECT_NEAR(a(0, 0), -4.0 * std::exp(-1.0), 1e-15);
  EXPECT_NEAR(a(0, 0), -1.4715177646857693, 1e-15);
}

TEST(Jacobian, FlatKernelLimit) {
  std::mt19937_64 rng(1);
  const KernelModel m = random_model(rng, 10, 4, 1e-300);
  const std::vector<double> x{0.3, -0.2, 0.9, 0.1};
  EXPECT_LT(prediction_jacobian(m, x).cwiseAbs().maxCoeff(), 1e-280);
}

TEST(Jacobian, MatchesFiniteDifferences) {
  std::mt19937_64 rng(2);
  for (FeatureScaling s : {FeatureScaling::none, FeatureScaling::standardize}) {
    const KernelModel m = random_model(rng, 30, 8, 0.8, s);
    for (int trial = 0; trial < 5; ++trial) {
      const Eigen::RowVectorXd x = random_inputs(rng, 1, 8).row(0);
      const Eigen::MatrixXd a = prediction_jacobian(m, std::span<const double>(x.data(), 8));
      const Eigen::MatrixXd fd = central_difference(m, x, 1e-5);
      EXPECT_LT((a - fd).norm() / a.norm(), 1e-5);
    }
  }
}

TEST(Jacobian, FirstOrderResidualIsQuadratic) {
  std::mt19937_64 rng(3);
  const KernelModel m = random_model(rng, 25, 6, 1.2);
  const Eigen::RowVectorXd x = random_inputs(rng, 1, 6).row(0);
  const Eigen::MatrixXd a = prediction_jacobian(m, std::span<const double>(x.data(), 6));
  const Eigen::RowVectorXd dir = random_inputs(rng, 1, 6).row(0).normalized();
  const auto residual = [&](double step) {
    const Eigen::RowVectorXd xp = x + step * dir;
    const Eigen::VectorXd dy = predict(m, std::span<const double>(xp.data(), 6)) -
                               predict(m, std::span<const double>(x.data(), 6));
    return (dy - a * (step * dir).transpose()).norm();
  };
  double step = 1e-2;
  for (int i = 0; i < 3; ++i, step /= 4.0) EXPECT_GE(residual(step) / residual(step / 4.0), 8.0);
}

TEST(Lambda, KnownSingularValues) {
  std::mt19937_64 rng(4);
  const Eigen::MatrixXd u = Eigen::HouseholderQR<Eigen::MatrixXd>(random_inputs(rng, 3, 3)).householderQ();
  const Eigen::MatrixXd v = Eigen::HouseholderQR<Eigen::MatrixXd>(random_inputs(rng, 5, 5)).householderQ();
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(3, 5);
  s(0, 0) = 0.5;
  s(1, 1) = 0.1;
  const Eigen::MatrixXd a = u * s * v.transpose();
  EXPECT_NEAR(max_singular_sq(a), 0.25, 1e-14);
  EXPECT_EQ(max_singular_sq(Eigen::MatrixXd::Zero(3, 5)), 0.0);
}

TEST(Lambda, ZeroWeightsGiveZero) {
  std::mt19937_64 rng(5);
  const FeatureMatrix x = random_inputs(rng, 12, 4);
  const KernelModel m = fit(x, Eigen::MatrixXd::Zero(12, 3), KernelHyperparams{1.0, 1.0, 1e-3});
  const SensitivityReport r = lambda_statistics(m, random_inputs(rng, 7, 4));
  EXPECT_EQ(r.lambda_mean, 0.0);
  EXPECT_EQ(r.lambda_std, 0.0);
  EXPECT_EQ(r.per_sample_max_singular_sq.size(), 7u);
  EXPECT_THROW(lambda_statistics(m, FeatureMatrix(0, 4)), ArgumentError);
  EXPECT_THROW(lambda_statistics(m, random_inputs(rng, 2, 4), PerturbationScope::deflated_landmarks),
               ArgumentError);
}

TEST(Lambda, BoundsFirstOrderOutputError) {
  std::mt19937_64 rng(6);
  const KernelModel m = random_model(rng, 30, 5, 0.9);
  const FeatureMatrix xs = random_inputs(rng, 10, 5);
  const SensitivityReport r = lambda_statistics(m, xs);
  for (int i = 0; i < 10; ++i) {
    const double lam = r.per_sample_max_singular_sq[i];
    EXPECT_GE(lam, 0.0);
    const Eigen::RowVectorXd x = xs.row(i);
    for (int k = 0; k < 5; ++k) {
      const Eigen::RowVectorXd dx = 1e-6 * random_inputs(rng, 1, 5).row(0);
      const Eigen::RowVectorXd xp = x + dx;
      const double dy = (predict(m, std::span<const double>(xp.data(), 5)) -
                         predict(m, std::span<const double>(x.data(), 5)))
                            .norm();
      EXPECT_LE(dy, std::sqrt(lam) * dx.norm() * (1.0 + 1e-4) + 1e-15);
    }
  }
}

TEST(Lambda, SummaryStatistics) {
  const SensitivityReport r = summarize_lambda({1.0, 3.0}, Lobe::lower, PerturbationScope::full);
  EXPECT_EQ(r.lambda_mean, 2.0);
  EXPECT_EQ(r.lambda_std, 1.0);
  EXPECT_EQ(r.lobe, Lobe::lower);
}

TEST(Lambda, DeflatedLandmarkScopeIsNoLarger) {
  std::mt19937_64 rng(7);
  // l = 2 layout: 14 features.
  KernelModel m = random_model(rng, 20, 14, 0.3);
  m.landmark_count = 2;
  const FeatureMatrix xs = random_inputs(rng, 6, 14);
  const auto full = lambda_statistics(m, xs, PerturbationScope::full);
  const auto def = lambda_statistics(m, xs, PerturbationScope::deflated_landmarks);
  for (int i = 0; i < 6; ++i) {
    EXPECT_LE(def.per_sample_max_singular_sq[i], full.per_sample_max_singular_sq[i] * (1 + 1e-12));
  }
}

}  // namespace
}  // namespace pneumodef
