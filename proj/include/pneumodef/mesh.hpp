#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace pneumodef {

// All coordinates are millimeters.
using Vec3 = Eigen::Vector3d;
using Triangle = std::array<int, 3>;

enum class Lobe { upper, lower };

std::string_view to_string(Lobe lobe);
Lobe lobe_from_string(std::string_view name);

// Triangulated surface with fixed topology. Vertex order is the
// correspondence key between the inflated and deflated states.
class Mesh {
 public:
  Mesh() = default;
  // Throws ArgumentError if any triangle references a missing vertex.
  Mesh(std::vector<Vec3> vertices, std::vector<Triangle> triangles,
       Lobe lobe = Lobe::upper);

  const std::vector<Vec3>& vertices() const noexcept { return vertices_; }
  const std::vector<Triangle>& triangles() const noexcept { return triangles_; }
  Lobe lobe() const noexcept { return lobe_; }
  std::size_t vertex_count() const noexcept { return vertices_.size(); }
  const Vec3& vertex(std::size_t i) const { return vertices_.at(i); }

  // Same topology and lobe, new positions. The count must match.
  Mesh with_vertices(std::vector<Vec3> vertices) const;

  bool same_topology(const Mesh& other) const noexcept {
    return vertices_.size() == other.vertices_.size() &&
           triangles_ == other.triangles_;
  }

 private:
  std::vector<Vec3> vertices_;
  std::vector<Triangle> triangles_;
  Lobe lobe_ = Lobe::upper;
};

// Every undirected edge is shared by exactly two triangles with opposite
// orientation, and no triangle repeats a vertex.
bool is_closed_manifold(const Mesh& mesh);
void require_closed_manifold(const Mesh& mesh);

// Enclosed volume in mm^3 (absolute value of the signed tetrahedron sum).
// Throws GeometryError for non-manifold input.
double mesh_volume(const Mesh& mesh);

// Signed tetrahedron sum, no topology checks. Positive for outward-facing
// triangles.
double signed_volume(std::span<const Vec3> vertices, std::span<const Triangle> triangles);

// Throws ArgumentError on an empty list.
Vec3 centroid(std::span<const Vec3> points);

Eigen::AlignedBox3d bounding_box(std::span<const Vec3> points);

// |a - b|^2 summed as dx*dx + dy*dy + dz*dz, so results do not depend on how
// Eigen vectorizes the reduction.
inline double squared_distance(const Vec3& a, const Vec3& b) {
  const double dx = a.x() - b.x();
  const double dy = a.y() - b.y();
  const double dz = a.z() - b.z();
  return dx * dx + dy * dy + dz * dz;
}

std::vector<Vec3> gather(std::span<const Vec3> points, std::span<const int> indices);

// ASCII PLY. Faces must be triangles.
Mesh load_ply(const std::filesystem::path& path, Lobe lobe = Lobe::upper);

// Optional scalars in [0,1] are written as a white-to-blue vertex color.
void save_ply(const Mesh& mesh, const std::filesystem::path& path,
              std::optional<std::span<const double>> vertex_scalars = std::nullopt);

std::array<unsigned char, 3> scalar_to_color(double s);

}  // namespace pneumodef
