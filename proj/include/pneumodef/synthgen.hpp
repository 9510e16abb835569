#pragma once

// Procedural lobe-like mesh pairs standing in for CT-derived data.
//
// The inflated lobe is a remeshed tri-axial ellipsoid whose outline (the
// equator contour) is a rounded triangle, with a smooth random radial
// perturbation, a flattened "major fissure" face on the +fissure_axis side
// and a saddle-shaped lift that keeps the contour out of any single plane. The deflated lobe is the inflated one pushed through a smooth
// non-affine field (compression toward the fissure face plus a bend along
// z) and then uniformly rescaled to the target volume ratio.

#include <array>
#include <cstdint>
#include <vector>

#include "pneumodef/dataset.hpp"
#include "pneumodef/landmarks.hpp"

namespace pneumodef {

struct GeneratorParams {
  std::uint64_t seed = 1;
  int vertex_count = 400;
  Vec3 base_radii{45.0, 38.0, 24.0};  // mm; z is the thin (ventral-dorsal) axis
  double shape_perturbation = 0.08;   // [0, 0.3]
  double target_volume_ratio = kDefaultVolumeRatio;
  double bend_strength = 0.25;        // [0, 0.5]
  Vec3 fissure_axis{1.0, 0.0, 0.0};   // projected onto the xy plane
  Lobe lobe = Lobe::upper;
  double case_variation = 0.10;       // relative per-case jitter of shape parameters

  // Throws ArgumentError when out of range.
  void validate() const;
};

// Defaults for each lobe; the lower lobe is larger and its contour is
// numbered in the opposite direction.
GeneratorParams default_params(Lobe lobe, std::uint64_t seed);

struct SyntheticCase {
  CaseRecord record;
  std::vector<int> contour;            // closed equator vertex loop of the inflated mesh
  std::array<Vec3, 3> corner_hints{};  // fissure corners first, apex last
  LandmarkConfig landmarks;
};

// Deterministic in (params, case_index), case_index >= 1. Throws
// GenerationError if the volume-ratio rescale fails to converge.
SyntheticCase generate_case(const GeneratorParams& params, int case_index);

// Cases 1..n_cases with ids "case01", "case02", ...
std::vector<SyntheticCase> generate_cohort(const GeneratorParams& params, int n_cases);

// Closed sphere triangulation with exactly vertex_count vertices laid out
// in latitude rings; the middle ring lies on the equator. Exposed for tests.
struct SphereLayout {
  std::vector<Vec3> unit_points;
  std::vector<Triangle> triangles;
  std::vector<int> equator;  // indices ordered by increasing azimuth
};
SphereLayout sphere_layout(int vertex_count);

}  // namespace pneumodef
