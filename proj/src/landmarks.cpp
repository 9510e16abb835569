#include "pneumodef/landmarks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "pneumodef/errors.hpp"

namespace pneumodef {
namespace {

constexpr std::array<int, kLandmarkCount> kExperiment1 = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12};
constexpr std::array<int, kLandmarkCount> kExperiment2 = {1, 5, 3, 9, 7, 11, 2, 4, 6, 8, 10, 12};

// Closed polyline through contour vertices with cumulative arc length.
class ContourArc {
 public:
  ContourArc(const Mesh& mesh, std::vector<int> loop) : mesh_(&mesh), loop_(std::move(loop)) {
    cumulative_.resize(loop_.size() + 1, 0.0);
    for (std::size_t i = 0; i < loop_.size(); ++i) {
      const auto& a = mesh_->vertex(static_cast<std::size_t>(loop_[i]));
      const auto& b = mesh_->vertex(static_cast<std::size_t>(loop_[(i + 1) % loop_.size()]));
      cumulative_[i + 1] = cumulative_[i] + (b - a).norm();
    }
    if (!(length() > 0.0)) throw GeometryError("contour loop has zero length");
  }

  double length() const { return cumulative_.back(); }
  std::size_t size() const { return loop_.size(); }
  int vertex_at(std::size_t pos) const { return loop_[pos]; }
  double arc_at(std::size_t pos) const { return cumulative_[pos]; }

  // Forward arc distance from loop position a to loop position b.
  double forward(std::size_t a, std::size_t b) const {
    const double d = cumulative_[b] - cumulative_[a];
    return d >= 0.0 ? d : d + length();
  }

  Vec3 point_at(double arc) const {
    arc = std::fmod(arc, length());
    if (arc < 0.0) arc += length();
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), arc);
    const auto seg = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, it - cumulative_.begin() - 1));
    const std::size_t i = std::min(seg, loop_.size() - 1);
    const double seg_len = cumulative_[i + 1] - cumulative_[i];
    const double t = seg_len > 0.0 ? (arc - cumulative_[i]) / seg_len : 0.0;
    const auto& a = mesh_->vertex(static_cast<std::size_t>(loop_[i]));
    const auto& b = mesh_->vertex(static_cast<std::size_t>(loop_[(i + 1) % loop_.size()]));
    return a + t * (b - a);
  }

  std::size_t nearest_position(const Vec3& p) const {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < loop_.size(); ++i) {
      const double d = (mesh_->vertex(static_cast<std::size_t>(loop_[i])) - p).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = i;
      }
    }
    return best;
  }

 private:
  const Mesh* mesh_;
  std::vector<int> loop_;
  std::vector<double> cumulative_;
};

}  // namespace

std::string_view to_string(Ordering ordering) {
  return ordering == Ordering::experiment1 ? "experiment1" : "experiment2";
}

Ordering ordering_from_string(std::string_view name) {
  if (name == "experiment1") return Ordering::experiment1;
  if (name == "experiment2") return Ordering::experiment2;
  throw ArgumentError("unknown landmark ordering '" + std::string(name) + "'");
}

std::span<const int, kLandmarkCount> ordering_sequence(Ordering ordering) {
  return ordering == Ordering::experiment1 ? std::span<const int, kLandmarkCount>(kExperiment1)
                                           : std::span<const int, kLandmarkCount>(kExperiment2);
}

void LandmarkConfig::validate(std::size_t vertex_count) const {
  if (active_count < 1 || active_count > kLandmarkCount) {
    throw ArgumentError("active landmark count must be in 1..12, got " +
                        std::to_string(active_count));
  }
  std::set<int> seen;
  for (int idx : full_indices) {
    if (idx < 0 || static_cast<std::size_t>(idx) >= vertex_count) {
      throw ArgumentError("landmark vertex index " + std::to_string(idx) + " out of range");
    }
    if (!seen.insert(idx).second) {
      throw ArgumentError("duplicate landmark vertex index " + std::to_string(idx));
    }
  }
}

std::vector<int> active_numbers(Ordering ordering, int active_count) {
  if (active_count < 1 || active_count > kLandmarkCount) {
    throw ArgumentError("active landmark count must be in 1..12, got " +
                        std::to_string(active_count));
  }
  const auto seq = ordering_sequence(ordering);
  return {seq.begin(), seq.begin() + active_count};
}

std::vector<int> select_landmarks(const LandmarkConfig& config) {
  std::vector<int> out;
  for (int number : active_numbers(config.ordering, config.active_count)) {
    out.push_back(config.full_indices[static_cast<std::size_t>(number - 1)]);
  }
  return out;
}

LandmarkConfig place_contour_landmarks(const Mesh& mesh, std::span<const int> contour,
                                       const std::array<Vec3, 3>& corner_hints) {
  if (contour.size() < static_cast<std::size_t>(kLandmarkCount)) {
    throw ArgumentError("contour needs at least 12 vertices");
  }
  for (int idx : contour) {
    if (idx < 0 || static_cast<std::size_t>(idx) >= mesh.vertex_count()) {
      throw ArgumentError("contour vertex index out of range");
    }
  }
  std::vector<int> loop(contour.begin(), contour.end());
  ContourArc arc(mesh, loop);

  std::array<std::size_t, 3> corner{};
  for (std::size_t c = 0; c < 3; ++c) corner[c] = arc.nearest_position(corner_hints[c]);
  if (corner[0] == corner[1] || corner[1] == corner[2] || corner[0] == corner[2]) {
    throw DegenerateLandmarkError("corner hints snap to the same contour vertex");
  }
  // Walk so that corner 1 is met before corner 2 when leaving corner 0.
  if (arc.forward(corner[0], corner[1]) > arc.forward(corner[0], corner[2])) {
    std::reverse(loop.begin(), loop.end());
    arc = ContourArc(mesh, loop);
    for (std::size_t c = 0; c < 3; ++c) corner[c] = arc.nearest_position(corner_hints[c]);
  }

  // Landmark k (0-based) sits at contour position positions[k].
  std::array<std::size_t, kLandmarkCount> positions{};
  for (std::size_t side = 0; side < 3; ++side) {
    const std::size_t from = corner[side];
    const std::size_t to = corner[(side + 1) % 3];
    const double start = arc.arc_at(from);
    const double span_len = arc.forward(from, to);
    const auto snap = [&](double a) { return arc.nearest_position(arc.point_at(a)); };
    const auto offset = [&](std::size_t pos) { return arc.forward(from, pos); };

    const std::size_t mid = snap(start + 0.5 * span_len);
    const double mid_off = offset(mid);
    const std::size_t first_quarter = snap(start + 0.5 * mid_off);
    const std::size_t last_quarter = snap(start + 0.5 * (mid_off + span_len));
    positions[side * 4 + 0] = from;
    positions[side * 4 + 1] = first_quarter;
    positions[side * 4 + 2] = mid;
    positions[side * 4 + 3] = last_quarter;
  }

  LandmarkConfig config;
  std::set<int> seen;
  for (std::size_t k = 0; k < kLandmarkCount; ++k) {
    const int v = arc.vertex_at(positions[k]);
    if (!seen.insert(v).second) {
      throw DegenerateLandmarkError("landmark " + std::to_string(k + 1) +
                                    " collapses onto an earlier landmark vertex");
    }
    config.full_indices[k] = v;
  }
  return config;
}

}  // namespace pneumodef
