#include "pneumodef/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "pneumodef/errors.hpp"

namespace pneumodef {

std::string_view to_string(Lobe lobe) {
  return lobe == Lobe::upper ? "upper" : "lower";
}

Lobe lobe_from_string(std::string_view name) {
  if (name == "upper") return Lobe::upper;
  if (name == "lower") return Lobe::lower;
  throw ArgumentError("unknown lobe '" + std::string(name) + "'");
}

Mesh::Mesh(std::vector<Vec3> vertices, std::vector<Triangle> triangles, Lobe lobe)
    : vertices_(std::move(vertices)), triangles_(std::move(triangles)), lobe_(lobe) {
  const auto n = static_cast<int>(vertices_.size());
  for (std::size_t t = 0; t < triangles_.size(); ++t) {
    for (int idx : triangles_[t]) {
      if (idx < 0 || idx >= n) {
        throw ArgumentError("triangle " + std::to_string(t) + " references vertex " +
                            std::to_string(idx) + " of " + std::to_string(n));
      }
    }
  }
}

Mesh Mesh::with_vertices(std::vector<Vec3> vertices) const {
  if (vertices.size() != vertices_.size()) {
    throw ArgumentError("with_vertices: expected " + std::to_string(vertices_.size()) +
                        " vertices, got " + std::to_string(vertices.size()));
  }
  Mesh out;
  out.vertices_ = std::move(vertices);
  out.triangles_ = triangles_;
  out.lobe_ = lobe_;
  return out;
}

bool is_closed_manifold(const Mesh& mesh) {
  const auto& tris = mesh.triangles();
  if (tris.empty()) return false;
  std::vector<std::pair<int, int>> directed;
  directed.reserve(tris.size() * 3);
  for (const auto& t : tris) {
    if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2]) return false;
    for (int k = 0; k < 3; ++k) directed.emplace_back(t[k], t[(k + 1) % 3]);
  }
  std::sort(directed.begin(), directed.end());
  // Each directed edge exactly once, and its reverse present.
  for (std::size_t i = 1; i < directed.size(); ++i) {
    if (directed[i] == directed[i - 1]) return false;
  }
  for (const auto& [a, b] : directed) {
    if (!std::binary_search(directed.begin(), directed.end(), std::make_pair(b, a))) {
      return false;
    }
  }
  return true;
}

void require_closed_manifold(const Mesh& mesh) {
  if (!is_closed_manifold(mesh)) {
    throw GeometryError("mesh is not a closed, consistently oriented 2-manifold");
  }
}

double signed_volume(std::span<const Vec3> v, std::span<const Triangle> triangles) {
  if (v.empty()) return 0.0;
  // Any apex gives the same sum on a closed surface; using a mesh vertex
  // keeps the result stable under large translations.
  const Vec3 apex = v.front();
  double six_vol = 0.0;
  for (const auto& t : triangles) {
    const Vec3 a = v[t[0]] - apex;
    const Vec3 b = v[t[1]] - apex;
    const Vec3 c = v[t[2]] - apex;
    six_vol += a.dot(b.cross(c));
  }
  return six_vol / 6.0;
}

double mesh_volume(const Mesh& mesh) {
  require_closed_manifold(mesh);
  return std::abs(signed_volume(mesh.vertices(), mesh.triangles()));
}

Vec3 centroid(std::span<const Vec3> points) {
  if (points.empty()) throw ArgumentError("centroid of an empty point list");
  Vec3 sum = Vec3::Zero();
  for (const auto& p : points) sum += p;
  return sum / static_cast<double>(points.size());
}

Eigen::AlignedBox3d bounding_box(std::span<const Vec3> points) {
  Eigen::AlignedBox3d box;
  for (const auto& p : points) box.extend(p);
  return box;
}

std::vector<Vec3> gather(std::span<const Vec3> points, std::span<const int> indices) {
  std::vector<Vec3> out;
  out.reserve(indices.size());
  for (int i : indices) {
    if (i < 0 || static_cast<std::size_t>(i) >= points.size()) {
      throw ArgumentError("vertex index " + std::to_string(i) + " out of range");
    }
    out.push_back(points[static_cast<std::size_t>(i)]);
  }
  return out;
}

std::array<unsigned char, 3> scalar_to_color(double s) {
  s = std::clamp(s, 0.0, 1.0);
  const auto rg = static_cast<unsigned char>(std::lround(255.0 * (1.0 - s)));
  return {rg, rg, 255};
}

}  // namespace pneumodef
