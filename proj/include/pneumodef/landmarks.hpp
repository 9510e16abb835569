#pragma once

#include <array>
#include <span>
#include <string_view>
#include <vector>

#include "pneumodef/mesh.hpp"

namespace pneumodef {

inline constexpr int kLandmarkCount = 12;

// experiment1: landmarks added in contour order 1..12.
// experiment2: 1, 5, 3, 9, 7, 11, 2, 4, 6, 8, 10, 12 (prefixes of length 3
// and 6 are the 3- and 6-landmark models).
enum class Ordering { experiment1, experiment2 };

std::string_view to_string(Ordering ordering);
Ordering ordering_from_string(std::string_view name);

// 1-based landmark numbers in the order they are switched on.
std::span<const int, kLandmarkCount> ordering_sequence(Ordering ordering);

struct LandmarkConfig {
  // Vertex index of landmark number k+1, in contour numbering.
  std::array<int, kLandmarkCount> full_indices{};
  int active_count = kLandmarkCount;
  Ordering ordering = Ordering::experiment2;

  // Distinct indices below vertex_count, 1 <= active_count <= 12.
  void validate(std::size_t vertex_count) const;
};

// Vertex indices of the active landmarks, in activation order.
std::vector<int> select_landmarks(const LandmarkConfig& config);

// 1-based landmark numbers of the active prefix, in activation order.
std::vector<int> active_numbers(Ordering ordering, int active_count);

// Places 12 landmarks on a closed contour loop of mesh vertices.
//
// Corner hints are snapped to the nearest contour vertex. hints[0] and
// hints[1] bound the major-fissure side; hints[2] is the opposite corner.
// Arc-length midpoints are inserted between consecutive corners and then
// again between every consecutive pair, each snapped to the nearest contour
// vertex. Numbering starts at hints[0] and runs along the fissure side, so
// landmarks 1-5 lie on it. Throws DegenerateLandmarkError when two
// landmarks collapse onto one vertex.
LandmarkConfig place_contour_landmarks(const Mesh& mesh, std::span<const int> contour,
                                       const std::array<Vec3, 3>& corner_hints);

}  // namespace pneumodef
