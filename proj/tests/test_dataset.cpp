#include <random>

#include <gtest/gtest.h>

#include "pneumodef/dataset.hpp"
#include "pneumodef/errors.hpp"
#include "pneumodef/synthgen.hpp"
#include "test_util.hpp"

namespace pneumodef {
namespace {

// Triangular bipyramid: apexes 0 (+z) and 1 (-z) over the ring 2, 3, 4.
Mesh bipyramid(double s = 1.0, const Vec3& shift = Vec3::Zero()) {
  std::vector<Vec3> v = {Vec3(0, 0, 1), Vec3(0, 0, -1), Vec3(2, 0, 0), Vec3(0, 2, 0), Vec3(-2, -2, 0)};
  for (auto& p : v) p = s * p + shift;
  return Mesh(std::move(v), {{0, 2, 3}, {0, 3, 4}, {0, 4, 2}, {1, 3, 2}, {1, 4, 3}, {1, 2, 4}});
}

Mesh sphere_mesh(int vertices, double scale) {
  const SphereLayout s = sphere_layout(vertices);
  std::vector<Vec3> v;
  for (const auto& p : s.unit_points) v.push_back(scale * p);
  return Mesh(std::move(v), s.triangles);
}

std::vector<CaseRecord> sphere_cases(int vertices, int count) {
  std::vector<CaseRecord> out;
  for (int i = 0; i < count; ++i) {
    out.push_back(make_case("s" + std::to_string(i), sphere_mesh(vertices, 10.0 + i),
                            sphere_mesh(vertices, 8.0 + 0.5 * i)));
  }
  return out;
}

std::vector<CaseRecord> synthetic_cases(int count) {
  std::vector<CaseRecord> out;
  for (const auto& c : generate_cohort(default_params(Lobe::upper, 1), count)) out.push_back(c.record);
  return out;
}

std::vector<int> six_landmarks() {
  const auto c = generate_case(default_params(Lobe::upper, 1), 1);
  LandmarkConfig cfg = c.landmarks;
  cfg.active_count = 6;
  return select_landmarks(cfg);
}

TEST(Dataset, FeatureDimension) {
  EXPECT_EQ(feature_dimension(6), 38);
  EXPECT_EQ(feature_dimension(3), 20);
  const auto cases = synthetic_cases(1);
  const auto lm = six_landmarks();
  int target = 0;
  while (std::find(lm.begin(), lm.end(), target) != lm.end()) ++target;
  EXPECT_EQ(build_features(cases[0], lm, target).x.size(), 38);
  EXPECT_EQ(build_features(cases[0], std::span<const int>(lm).first(3), target).x.size(), 20);
}

TEST(Dataset, HandBuiltFeatures) {
  const CaseRecord c = make_case("hand", bipyramid(), bipyramid(0.5, Vec3(1, 1, 1)));
  EXPECT_NEAR(c.v_inf, 4.0, 1e-12);
  EXPECT_NEAR(c.volume_ratio, 0.125, 1e-12);
  const std::vector<int> lm = {2, 3};
  const FeatureSample s = build_features(c, lm, 0);
  Eigen::VectorXd expect(14);
  expect << -2, 0, 1,  // v0 - v2
      0, -2, 1,        // v0 - v3
      0.5, -0.5, 0,    // d2 - centroid(d2, d3)
      -0.5, 0.5, 0,    // d3 - centroid
      4.0, 0.125;
  EXPECT_LT((s.x - expect).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((s.y - Vec3(-0.5, -0.5, 0.5)).norm(), 1e-12);
  EXPECT_EQ(s.vertex_index, 0);
  EXPECT_EQ(s.case_id, "hand");

  EXPECT_THROW(build_features(c, lm, 2), ArgumentError);
  EXPECT_THROW(build_features(c, lm, 5), ArgumentError);
  EXPECT_THROW(build_features(c, std::vector<int>{}, 0), ArgumentError);
}

TEST(Dataset, TargetAtLandmarkPositionGivesZeroOffset) {
  // Vertex 4 sits exactly where landmark 1 (vertex 0) is.
  const Mesh inflated({Vec3(1, 2, 3), Vec3(4, 0, 0), Vec3(0, 5, 0), Vec3(0, 0, 6), Vec3(1, 2, 3)}, {});
  CaseObservation obs;
  obs.inflated = &inflated;
  obs.deflated_landmarks = {Vec3(0, 0, 0), Vec3(1, 1, 1)};
  obs.v_inf = 10.0;
  const std::vector<int> lm = {0, 2};
  std::vector<double> out(14);
  write_features(obs, lm, 4, out);
  EXPECT_EQ(out[0], 0.0);
  EXPECT_EQ(out[1], 0.0);
  EXPECT_EQ(out[2], 0.0);
  EXPECT_EQ(out[13], kDefaultVolumeRatio);
  std::vector<double> wrong(13);
  EXPECT_THROW(write_features(obs, lm, 4, wrong), ArgumentError);
}

TEST(Dataset, SampleCountIdentity) {
  EXPECT_EQ(expected_sample_count(400, 6, 8, true), 14184u);
  EXPECT_EQ(expected_sample_count(400, 3, 1, true), 397u);
  EXPECT_EQ(expected_sample_count(400, 6, 3, true), 2364u);
  EXPECT_EQ(expected_sample_count(400, 6, 8, false), 394u * 8u);

  const auto cases = synthetic_cases(8);
  const auto lm = six_landmarks();
  const SampleSet full = build_dataset(cases, lm, true);
  EXPECT_EQ(full.size(), 14184);
  EXPECT_EQ(full.x.cols(), 38);
  const std::vector<CaseRecord> three(cases.begin(), cases.begin() + 3);
  EXPECT_EQ(build_dataset(three, lm, true).size(), 2364);
  const std::vector<CaseRecord> one(cases.begin(), cases.begin() + 1);
  EXPECT_EQ(build_dataset(one, std::span<const int>(lm).first(3), true).size(), 397);
}

TEST(Dataset, SampleCountRandomConfigurations) {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> vdist(30, 220), cdist(1, 6), ldist(1, 12);
  for (int trial = 0; trial < 10; ++trial) {
    const int v = vdist(rng), c = cdist(rng), l = ldist(rng);
    const auto cases = sphere_cases(v, c);
    std::vector<int> lm;
    for (int k = 0; k < l; ++k) lm.push_back(k * (v / l));
    for (bool aug : {false, true}) {
      const auto n = static_cast<std::size_t>(v - l) * (c + (aug ? c * (c - 1) / 2 : 0));
      EXPECT_EQ(static_cast<std::size_t>(build_dataset(cases, lm, aug).size()), n)
          << "V=" << v << " c=" << c << " l=" << l << " aug=" << aug;
      EXPECT_EQ(expected_sample_count(v, l, c, aug), n);
    }
  }
}

TEST(Dataset, RowsMatchBuildFeatures) {
  const auto cases = synthetic_cases(2);
  const auto lm = six_landmarks();
  const SampleSet set = build_dataset(cases, lm, true);
  ASSERT_EQ(set.size(), 394 * 3);
  for (Eigen::Index d : {Eigen::Index(0), Eigen::Index(393), Eigen::Index(394), Eigen::Index(1000)}) {
    const FeatureSample s = set.sample(d);
    const CaseRecord& src = d < 394 ? cases[0] : cases[1];
    if (d >= 788) {
      EXPECT_EQ(s.case_id, cases[0].case_id + "+" + cases[1].case_id);
      continue;
    }
    const FeatureSample ref = build_features(src, lm, s.vertex_index);
    EXPECT_TRUE(s.x == ref.x);
    EXPECT_TRUE(s.y == ref.y);
  }
  // Case order, then increasing vertex index.
  for (Eigen::Index d = 1; d < 394; ++d) EXPECT_LT(set.vertex_indices[d - 1], set.vertex_indices[d]);
}

TEST(Dataset, TranslationInvariance) {
  std::mt19937_64 rng(3);
  const auto cases = synthetic_cases(1);
  const auto lm = six_landmarks();
  std::uniform_real_distribution<double> u(-500.0, 500.0);
  for (int trial = 0; trial < 5; ++trial) {
    const Vec3 t(u(rng), u(rng), u(rng));
    const Vec3 t2(u(rng), u(rng), u(rng));
    const CaseRecord moved = make_case("m", testing::translated(cases[0].inflated, t),
                                       testing::translated(cases[0].deflated, t2));
    for (int target : {0, 17, 250, 399}) {
      if (std::find(lm.begin(), lm.end(), target) != lm.end()) continue;
      const auto a = build_features(cases[0], lm, target);
      const auto b = build_features(moved, lm, target);
      EXPECT_LT((a.x.head(36) - b.x.head(36)).cwiseAbs().maxCoeff(), 1e-9);
      EXPECT_LT(std::abs(a.x[36] - b.x[36]), 1e-9 * a.x[36]);
      EXPECT_LT(std::abs(a.x[37] - b.x[37]), 1e-9);
    }
  }
}

TEST(Augment, Midpoints) {
  const CaseRecord a = make_case("a", testing::unit_cube(), testing::unit_cube());
  EXPECT_EQ(augment_midpoint(a, a).inflated.vertices(), a.inflated.vertices());
  const CaseRecord b =
      make_case("b", testing::unit_cube(Vec3(2, 0, 0)), testing::unit_cube(Vec3(2, 0, 0)));
  const CaseRecord m = augment_midpoint(a, b);
  EXPECT_EQ(m.inflated.vertices(), testing::unit_cube(Vec3(1, 0, 0)).vertices());
  EXPECT_TRUE(m.is_augmented);
  EXPECT_EQ(m.sources, (std::vector<std::string>{"a", "b"}));

  const Mesh cube = testing::unit_cube();
  const Mesh lower_cube(cube.vertices(), cube.triangles(), Lobe::lower);
  const CaseRecord lower = make_case("l", lower_cube, lower_cube);
  EXPECT_THROW(augment_midpoint(a, lower), ArgumentError);
  const CaseRecord tetra = make_case("t", testing::unit_tetrahedron(), testing::unit_tetrahedron());
  EXPECT_THROW(augment_midpoint(a, tetra), ArgumentError);
}

TEST(Augment, PairCount) {
  const auto cases = sphere_cases(40, 5);
  const auto all = expand_cases(cases, true);
  ASSERT_EQ(all.size(), 5u + 10u);
  int augmented = 0;
  for (const auto& c : all) augmented += c.is_augmented ? 1 : 0;
  EXPECT_EQ(augmented, 10);
  EXPECT_EQ(expand_cases(cases, false).size(), 5u);
}

TEST(LeaveOneOut, Split) {
  const auto cases = synthetic_cases(9);
  const auto split = split_leave_one_out(cases, "case03");
  EXPECT_EQ(split.test.case_id, "case03");
  ASSERT_EQ(split.train.size(), 8u);
  for (const auto& c : split.train) EXPECT_NE(c.case_id, "case03");
  // Midpoints from the training side never carry the test case.
  for (const auto& c : expand_cases(split.train, true)) {
    EXPECT_EQ(std::find(c.sources.begin(), c.sources.end(), "case03"), c.sources.end());
  }

  const std::vector<CaseRecord> one(cases.begin(), cases.begin() + 1);
  EXPECT_THROW(split_leave_one_out(one, "case01"), ArgumentError);
  EXPECT_THROW(split_leave_one_out(cases, "case99"), ArgumentError);
  std::vector<CaseRecord> with_aug = cases;
  with_aug.push_back(augment_midpoint(cases[0], cases[1]));
  EXPECT_THROW(split_leave_one_out(with_aug, "case01"), ArgumentError);
}

TEST(Reconstruct, InvertsTargets) {
  const auto cases = synthetic_cases(1);
  const auto lm = six_landmarks();
  const auto landmarks_def = gather(cases[0].deflated.vertices(), lm);
  const SampleSet set = build_dataset(cases, lm, false);
  std::vector<Vec3> y;
  for (Eigen::Index d = 0; d < set.size(); ++d) y.push_back(set.y.row(d).transpose());
  const auto pos = reconstruct_positions(y, landmarks_def);
  for (Eigen::Index d = 0; d < set.size(); ++d) {
    EXPECT_LT((pos[d] - cases[0].deflated.vertex(set.vertex_indices[d])).norm(), 1e-12);
  }

  const std::vector<Vec3> zero = {Vec3::Zero()};
  EXPECT_LT((reconstruct_positions(zero, landmarks_def)[0] - centroid(landmarks_def)).norm(), 1e-15);

  std::vector<Vec3> shifted = landmarks_def;
  const Vec3 t(3, -2, 7);
  for (auto& p : shifted) p += t;
  const auto a = reconstruct_positions(y, landmarks_def);
  const auto b = reconstruct_positions(y, shifted);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_LT((b[i] - a[i] - t).norm(), 1e-12);
}

}  // namespace
}  // namespace pneumodef
