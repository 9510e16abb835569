#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "pneumodef/errors.hpp"
#include "pneumodef/krr.hpp"

namespace pneumodef {
namespace {

FeatureMatrix random_inputs(std::mt19937_64& rng, int rows, int cols, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  FeatureMatrix x(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) x(r, c) = u(rng);
  return x;
}

Eigen::MatrixXd random_targets(std::mt19937_64& rng, int rows, int cols) {
  std::normal_distribution<double> n(0.0, 5.0);
  Eigen::MatrixXd y(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) y(r, c) = n(rng);
  return y;
}

double naive_kernel(const double* a, const double* b, int n, double ka, double kb) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return ka * std::exp(-kb * s);
}

TEST(GaussianKernel, Examples) {
  const KernelHyperparams h{1.0, 0.5, 0.0};
  const std::vector<double> x{0.0, 0.0}, y{1.0, 1.0};
  EXPECT_NEAR(gaussian_kernel(x, y, h), 0.36787944117144233, 1e-16);
  const KernelHyperparams h2{2.5, 3.0, 0.0};
  EXPECT_EQ(gaussian_kernel(y, y, h2), 2.5);
  const KernelHyperparams sharp{1.0, 1e6, 0.0};
  const std::vector<double> far{10.0, 0.0};
  const double v = gaussian_kernel(x, far, sharp);
  EXPECT_EQ(v, 0.0);
  EXPECT_FALSE(std::isnan(v));
  EXPECT_THROW(gaussian_kernel(x, std::vector<double>{1.0}, h), ArgumentError);
}

TEST(Hyperparams, Validate) {
  EXPECT_THROW((KernelHyperparams{0.0, 1.0, 0.0}).validate(), ArgumentError);
  EXPECT_THROW((KernelHyperparams{1.0, -1.0, 0.0}).validate(), ArgumentError);
  EXPECT_THROW((KernelHyperparams{1.0, 1.0, -1e-3}).validate(), ArgumentError);
  EXPECT_NO_THROW((KernelHyperparams{1.0, 1.0, 0.0}).validate());
}

TEST(KernelMatrix, SymmetricAndMatchesEntrywise) {
  std::mt19937_64 rng(1);
  const KernelHyperparams h{1.7, 0.3, 0.0};
  FeatureMatrix one(1, 4);
  one << 1, 2, 3, 4;
  const Eigen::MatrixXd k1 = build_kernel_matrix(one, h);
  ASSERT_EQ(k1.rows(), 1);
  EXPECT_EQ(k1(0, 0), 1.7);

  const FeatureMatrix x = random_inputs(rng, 3, 5);
  const Eigen::MatrixXd k = build_kernel_matrix(x, h);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      EXPECT_NEAR(k(i, j), naive_kernel(x.row(i).data(), x.row(j).data(), 5, 1.7, 0.3), 1e-15);

  const FeatureMatrix big = random_inputs(rng, 80, 6);
  const Eigen::MatrixXd kb = build_kernel_matrix(big, h);
  EXPECT_TRUE(kb == kb.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(kb);
  EXPECT_GE(es.eigenvalues().minCoeff(), -1e-10 * 1.7 * 80);
}

TEST(Fit, HandTwoByTwo) {
  // |x1 - x2|^2 = ln 2 with kb = 1 gives K = [[1, 0.5], [0.5, 1]].
  FeatureMatrix x(2, 1);
  x << 0.0, std::sqrt(std::log(2.0));
  Eigen::MatrixXd y(2, 1);
  y << 1.0, 0.0;
  const KernelModel m = fit(x, y, KernelHyperparams{1.0, 1.0, 0.1});
  // Explicit inverse of [[a, b], [b, a]] with a = 1.1, b = 0.5.
  const double a = 1.1, b = 0.5, det = a * a - b * b;
  EXPECT_NEAR(m.weights(0, 0), a / det, 1e-12);
  EXPECT_NEAR(m.weights(1, 0), -b / det, 1e-12);
  EXPECT_NEAR(m.weights(0, 0), 1.1458333333333333, 1e-12);
  EXPECT_NEAR(m.weights(1, 0), -0.5208333333333333, 1e-12);
}

TEST(Fit, NearIdentityKernel) {
  FeatureMatrix x(4, 2);
  x << 0, 0, 100, 0, 0, 100, 100, 100;
  std::mt19937_64 rng(2);
  const Eigen::MatrixXd y = random_targets(rng, 4, 3);
  const KernelModel m = fit(x, y, KernelHyperparams{1.0, 1.0, 0.0});
  EXPECT_LT((m.weights - y).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Fit, HeavyRegularizationShrinks) {
  std::mt19937_64 rng(3);
  const FeatureMatrix x = random_inputs(rng, 20, 3);
  const Eigen::MatrixXd y = random_targets(rng, 20, 3);
  const KernelModel m = fit(x, y, KernelHyperparams{1.0, 1.0, 1e9});
  EXPECT_LT(m.weights.norm(), 1e-8 * y.norm());
}

TEST(Fit, NormalEquationResidual) {
  std::mt19937_64 rng(4);
  for (double lambda : {0.0, 1e-3, 1e-1}) {
    const FeatureMatrix x = random_inputs(rng, 40, 4);
    const Eigen::MatrixXd y = random_targets(rng, 40, 3);
    const KernelHyperparams h{1.0, 1.5, lambda};
    const KernelModel m = fit(x, y, h);
    Eigen::MatrixXd k = build_kernel_matrix(x, h);
    k.diagonal().array() += lambda;
    EXPECT_LE((k * m.weights - y).norm(), 1e-8 * y.norm()) << lambda;
  }
}

TEST(Predict, InterpolatesTrainingTargets) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 5; ++trial) {
    const FeatureMatrix x = random_inputs(rng, 30, 3);
    const Eigen::MatrixXd y = random_targets(rng, 30, 3);
    const KernelModel m = fit(x, y, KernelHyperparams{1.0, 2.0, 0.0});
    const Eigen::MatrixXd p = predict_batch(m, x);
    for (int d = 0; d < 30; ++d) {
      EXPECT_LE((p.row(d) - y.row(d)).norm(), 1e-6 * y.row(d).norm());
      const Eigen::VectorXd one = predict(m, std::span<const double>(x.row(d).data(), 3));
      EXPECT_LE((one.transpose() - y.row(d)).norm(), 1e-6 * y.row(d).norm());
    }
  }
}

TEST(Predict, MatchesNaiveSummation) {
  std::mt19937_64 rng(6);
  const FeatureMatrix x = random_inputs(rng, 20, 4);
  const Eigen::MatrixXd y = random_targets(rng, 20, 3);
  const KernelModel m = fit(x, y, KernelHyperparams{0.8, 0.7, 1e-2});
  const FeatureMatrix q = random_inputs(rng, 5, 4);
  const Eigen::MatrixXd p = predict_batch(m, q);
  for (int i = 0; i < 5; ++i) {
    for (int c = 0; c < 3; ++c) {
      double s = 0.0;
      for (int d = 0; d < 20; ++d) s += naive_kernel(q.row(i).data(), x.row(d).data(), 4, 0.8, 0.7) * m.weights(d, c);
      EXPECT_NEAR(p(i, c), s, 1e-12 * (1.0 + std::abs(s)));
    }
  }
}

TEST(Predict, FarAwayDecaysToZero) {
  std::mt19937_64 rng(7);
  const FeatureMatrix x = random_inputs(rng, 10, 2);
  const KernelModel m = fit(x, random_targets(rng, 10, 3), KernelHyperparams{1.0, 1.0, 1e-3});
  const std::vector<double> far{1e4, -1e4};
  EXPECT_EQ(predict(m, far), Eigen::Vector3d::Zero());
  EXPECT_THROW(predict(m, std::vector<double>{1.0}), ArgumentError);
}

TEST(Predict, LinearInTargets) {
  std::mt19937_64 rng(8);
  const FeatureMatrix x = random_inputs(rng, 25, 3);
  const Eigen::MatrixXd y = random_targets(rng, 25, 3);
  const KernelHyperparams h{1.0, 1.0, 1e-3};
  const FeatureMatrix q = random_inputs(rng, 7, 3);
  const Eigen::MatrixXd p = predict_batch(fit(x, y, h), q);
  // Powers of two scale exactly in floating point.
  EXPECT_TRUE(predict_batch(fit(x, 4.0 * y, h), q) == 4.0 * p);
  const Eigen::MatrixXd p3 = predict_batch(fit(x, 3.0 * y, h), q);
  EXPECT_LE((p3 - 3.0 * p).norm(), 1e-12 * p3.norm());
}

TEST(Fit, SingularSystemRaisesConditioningError) {
  FeatureMatrix x(3, 2);
  x << 1, 2, 1, 2, 0, 0;
  Eigen::MatrixXd y = Eigen::MatrixXd::Ones(3, 3);
  EXPECT_THROW(fit(x, y, KernelHyperparams{1.0, 1.0, 0.0}), ConditioningError);
  EXPECT_NO_THROW(fit(x, y, KernelHyperparams{1.0, 1.0, 1e-3}));
}

TEST(Scaling, StandardizeAndBlocks) {
  std::mt19937_64 rng(9);
  FeatureMatrix x = random_inputs(rng, 50, 14, 3.0);
  x.col(12).array() += 1e5;
  x.col(13).setConstant(0.6);
  const InputScaling st = InputScaling::fit(x, FeatureScaling::standardize);
  const FeatureMatrix z = st.apply(x);
  for (int c = 0; c < 13; ++c) {
    // Column 12 carries a 1e5 offset, so its centred mean keeps ~1e5 * eps of noise.
    EXPECT_NEAR(z.col(c).mean(), 0.0, 1e-10);
    EXPECT_NEAR(std::sqrt(z.col(c).array().square().mean()), 1.0, 1e-12);
  }
  EXPECT_EQ(st.scale[13], 1.0);

  // Two landmarks: columns 0-5 and 6-11 are the relative-position blocks.
  const InputScaling lb = InputScaling::fit(x, FeatureScaling::landmark_blocks);
  const FeatureMatrix w = lb.apply(x);
  EXPECT_NEAR(std::sqrt(w.leftCols(6).array().square().mean()), 1.0, 1e-12);
  EXPECT_NEAR(std::sqrt(w.middleCols(6, 6).array().square().mean()), 1.0, 1e-12);
  EXPECT_NEAR(w.col(12).mean(), 1.0, 1e-12);
  EXPECT_TRUE(w.col(13) == x.col(13));
  EXPECT_THROW(InputScaling::fit(x.leftCols(13), FeatureScaling::landmark_blocks), ArgumentError);

  EXPECT_TRUE(InputScaling::fit(x, FeatureScaling::none).is_identity());
  EXPECT_EQ(feature_scaling_from_string(to_string(FeatureScaling::landmark_blocks)),
            FeatureScaling::landmark_blocks);
}

std::vector<std::string> groups_of(int rows, int per_group) {
  std::vector<std::string> g;
  for (int r = 0; r < rows; ++r) g.push_back("g" + std::to_string(r / per_group));
  return g;
}

TEST(GridSearch, SinglePoint) {
  std::mt19937_64 rng(10);
  const FeatureMatrix x = random_inputs(rng, 40, 2);
  const Eigen::MatrixXd y = random_targets(rng, 40, 3);
  HyperGrid g;
  g.kb = {0.5};
  g.lambda = {1e-2};
  const auto r = grid_search(x, y, groups_of(40, 10), g, 4);
  ASSERT_EQ(r.table.size(), 1u);
  EXPECT_EQ(r.best, (KernelHyperparams{1.0, 0.5, 1e-2}));
}

TEST(GridSearch, TiesKeepFirst) {
  std::mt19937_64 rng(11);
  const FeatureMatrix x = random_inputs(rng, 30, 2);
  const Eigen::MatrixXd y = random_targets(rng, 30, 3);
  // With lambda = 0, ka = 4 scales K, its factor and W by exact powers of
  // two, so predictions and fold scores tie bit for bit.
  HyperGrid g;
  g.ka = {4.0, 1.0};
  g.kb = {1.0};
  g.lambda = {0.0};
  const auto r = grid_search(x, y, groups_of(30, 10), g, 3);
  ASSERT_EQ(r.table.size(), 2u);
  ASSERT_EQ(r.table[0].mean_rmse, r.table[1].mean_rmse);
  EXPECT_EQ(r.best.ka, 4.0);
  g.ka = {1.0, 4.0};
  EXPECT_EQ(grid_search(x, y, groups_of(30, 10), g, 3).best.ka, 1.0);
}

TEST(GridSearch, SmoothDeformationSelectsInteriorBandwidth) {
  std::mt19937_64 rng(12);
  const int rows = 120;
  const FeatureMatrix x = random_inputs(rng, rows, 2, 2.0);
  Eigen::MatrixXd y(rows, 3);
  for (int r = 0; r < rows; ++r) {
    const double a = x(r, 0), b = x(r, 1);
    y.row(r) << std::sin(a) + 0.3 * b, std::cos(0.7 * b) * a, 0.5 * a * b;
  }
  const auto groups = groups_of(rows, 10);
  HyperGrid g;
  g.kb = {1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0};
  g.lambda = {1e-6};
  const auto r = grid_search(x, y, groups, g, 4);
  EXPECT_GT(r.best.kb, g.kb.front());
  EXPECT_LT(r.best.kb, g.kb.back());
  HyperGrid wide = g;
  wide.kb.insert(wide.kb.begin(), 1e-5);
  wide.kb.push_back(1000.0);
  EXPECT_EQ(grid_search(x, y, groups, wide, 4).best.kb, r.best.kb);
  EXPECT_EQ(r.table.size(), g.kb.size());
}

TEST(GridSearch, FoldsNeverSplitGroups) {
  std::mt19937_64 rng(13);
  const FeatureMatrix x = random_inputs(rng, 24, 2);
  const Eigen::MatrixXd y = random_targets(rng, 24, 3);
  const auto folds = make_group_folds(x, y, groups_of(24, 4), 3);
  ASSERT_EQ(folds.size(), 3u);
  for (const auto& f : folds) {
    EXPECT_EQ(f.val_x.rows(), 8);
    EXPECT_EQ(f.train_x.rows(), 16);
  }
  EXPECT_THROW(make_group_folds(x, y, groups_of(24, 4), 1), ArgumentError);
  EXPECT_THROW(make_group_folds(x, y, groups_of(24, 12), 3), ArgumentError);
}

TEST(DefaultGrid, CentredOnMedianDistance) {
  std::mt19937_64 rng(14);
  const FeatureMatrix x = random_inputs(rng, 60, 3);
  const double med = median_squared_distance(x);
  EXPECT_GT(med, 0.0);
  const HyperGrid g = default_grid(x);
  ASSERT_EQ(g.kb.size(), 7u);
  EXPECT_NEAR(g.kb.back() * med, 1.0, 1e-12);
  EXPECT_NEAR(g.kb.front() * med, 1e-6, 1e-18);
  EXPECT_EQ(g.lambda, (std::vector<double>{1e-4, 1e-3, 1e-2, 1e-1}));
}

}  // namespace
}  // namespace pneumodef
