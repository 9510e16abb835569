#include <algorithm>
#include <set>

#include <gtest/gtest.h>

#include "pneumodef/errors.hpp"
#include "pneumodef/landmarks.hpp"
#include "pneumodef/synthgen.hpp"

namespace pneumodef {
namespace {

std::set<int> as_set(const std::vector<int>& v) { return {v.begin(), v.end()}; }

TEST(Ordering, NamedModels) {
  EXPECT_EQ(active_numbers(Ordering::experiment2, 3), (std::vector<int>{1, 5, 3}));
  EXPECT_EQ(as_set(active_numbers(Ordering::experiment2, 3)), (std::set<int>{1, 3, 5}));
  EXPECT_EQ(as_set(active_numbers(Ordering::experiment2, 6)), (std::set<int>{1, 3, 5, 7, 9, 11}));
  EXPECT_EQ(active_numbers(Ordering::experiment1, 12),
            (std::vector<int>{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12}));
  EXPECT_EQ(active_numbers(Ordering::experiment1, 4), (std::vector<int>{1, 2, 3, 4}));
}

TEST(Ordering, PrefixMonotone) {
  for (Ordering o : {Ordering::experiment1, Ordering::experiment2}) {
    for (int k = 1; k < kLandmarkCount; ++k) {
      const auto a = as_set(active_numbers(o, k));
      const auto b = as_set(active_numbers(o, k + 1));
      EXPECT_EQ(a.size(), static_cast<std::size_t>(k));
      EXPECT_TRUE(std::includes(b.begin(), b.end(), a.begin(), a.end()));
    }
  }
}

TEST(Ordering, StringRoundTrip) {
  EXPECT_EQ(ordering_from_string(to_string(Ordering::experiment1)), Ordering::experiment1);
  EXPECT_EQ(ordering_from_string("experiment2"), Ordering::experiment2);
  EXPECT_THROW(ordering_from_string("experiment3"), ArgumentError);
}

TEST(SelectLandmarks, MapsNumbersToVertices) {
  LandmarkConfig cfg;
  for (int k = 0; k < kLandmarkCount; ++k) cfg.full_indices[k] = 100 + k;
  cfg.active_count = 3;
  cfg.ordering = Ordering::experiment2;
  EXPECT_EQ(select_landmarks(cfg), (std::vector<int>{100, 104, 102}));
  cfg.active_count = 0;
  EXPECT_THROW(cfg.validate(400), ArgumentError);
  cfg.active_count = 12;
  EXPECT_NO_THROW(cfg.validate(400));
  EXPECT_THROW(cfg.validate(105), ArgumentError);
  cfg.full_indices[3] = 100;
  EXPECT_THROW(cfg.validate(400), ArgumentError);
}

// Equilateral triangle whose sides each carry 8 equal segments; vertices
// 0, 8 and 16 are its corners.
struct TriangleContour {
  Mesh mesh;
  std::vector<int> loop;
  std::array<Vec3, 3> corners;
};

TriangleContour triangle_contour() {
  const Vec3 c[3] = {Vec3(0, 0, 0), Vec3(24, 0, 0), Vec3(12, 12 * std::sqrt(3.0), 0)};
  std::vector<Vec3> pts;
  for (int side = 0; side < 3; ++side)
    for (int s = 0; s < 8; ++s) pts.push_back(c[side] + (c[(side + 1) % 3] - c[side]) * (s / 8.0));
  TriangleContour t{Mesh(std::move(pts), {}), {}, {c[0], c[1], c[2]}};
  for (int i = 0; i < 24; ++i) t.loop.push_back(i);
  return t;
}

TEST(PlaceContourLandmarks, EquilateralMidpoints) {
  const auto t = triangle_contour();
  const LandmarkConfig cfg = place_contour_landmarks(t.mesh, t.loop, t.corners);
  const std::array<int, kLandmarkCount> expect{0, 2, 4, 6, 8, 10, 12, 14, 16, 18, 20, 22};
  EXPECT_EQ(cfg.full_indices, expect);

  // The loop direction must not matter, only the hint order.
  std::vector<int> reversed(t.loop.rbegin(), t.loop.rend());
  EXPECT_EQ(place_contour_landmarks(t.mesh, reversed, t.corners).full_indices, expect);
}

TEST(PlaceContourLandmarks, NumberingFollowsHints) {
  const auto t = triangle_contour();
  const std::array<Vec3, 3> hints{t.corners[1], t.corners[0], t.corners[2]};
  const LandmarkConfig cfg = place_contour_landmarks(t.mesh, t.loop, hints);
  EXPECT_EQ(cfg.full_indices[0], 8);
  EXPECT_EQ(cfg.full_indices[2], 4);
  EXPECT_EQ(cfg.full_indices[4], 0);
  EXPECT_EQ(cfg.full_indices[8], 16);
}

TEST(PlaceContourLandmarks, Errors) {
  const auto t = triangle_contour();
  const std::array<Vec3, 3> same{t.corners[0], t.corners[0], t.corners[2]};
  EXPECT_THROW(place_contour_landmarks(t.mesh, t.loop, same), DegenerateLandmarkError);
  const std::vector<int> short_loop{0, 1, 2, 3};
  EXPECT_THROW(place_contour_landmarks(t.mesh, short_loop, t.corners), ArgumentError);
  std::vector<int> bad = t.loop;
  bad[5] = 99;
  EXPECT_THROW(place_contour_landmarks(t.mesh, bad, t.corners), ArgumentError);
}

class SyntheticLandmarks : public ::testing::TestWithParam<Lobe> {};

TEST_P(SyntheticLandmarks, FissureSideComesFirst) {
  const GeneratorParams params = default_params(GetParam(), 5);
  const SyntheticCase sc = generate_case(params, 2);
  const auto& idx = sc.landmarks.full_indices;
  EXPECT_EQ(std::set<int>(idx.begin(), idx.end()).size(), 12u);

  const auto& verts = sc.record.inflated.vertices();
  Vec3 mid = Vec3::Zero();
  for (int v : sc.contour) mid += verts[v];
  mid /= static_cast<double>(sc.contour.size());
  const Vec3 f = params.fissure_axis.normalized();
  double fissure_min = 1e300, far_max = -1e300;
  for (int k = 0; k < 5; ++k) fissure_min = std::min(fissure_min, (verts[idx[k]] - mid).dot(f));
  for (int k = 6; k < 11; ++k) far_max = std::max(far_max, (verts[idx[k]] - mid).dot(f));
  EXPECT_GT(fissure_min, far_max);

  // Landmarks are contour vertices.
  for (int v : idx) EXPECT_NE(std::find(sc.contour.begin(), sc.contour.end(), v), sc.contour.end());
}

TEST_P(SyntheticLandmarks, SharedAcrossCases) {
  const auto cohort = generate_cohort(default_params(GetParam(), 8), 4);
  for (const auto& c : cohort) EXPECT_EQ(c.landmarks.full_indices, cohort[0].landmarks.full_indices);
}

INSTANTIATE_TEST_SUITE_P(Lobes, SyntheticLandmarks, ::testing::Values(Lobe::upper, Lobe::lower),
                         [](const auto& info) { return std::string(to_string(info.param)); });

}  // namespace
}  // namespace pneumodef
