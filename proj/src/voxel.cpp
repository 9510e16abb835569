#include "pneumodef/voxel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "kernels_detail.hpp"
#include "pneumodef/errors.hpp"
#include "pneumodef/kernels.hpp"

namespace pneumodef {

namespace detail {

std::optional<int> count_crossings(const Mesh& mesh, const Vec3& p, const Vec3& dir) {
  constexpr double kBary = 1e-10;
  const auto& v = mesh.vertices();
  int crossings = 0;
  for (const auto& t : mesh.triangles()) {
    const Vec3& a = v[t[0]];
    const Vec3 e1 = v[t[1]] - a;
    const Vec3 e2 = v[t[2]] - a;
    const double scale = e1.norm() * e2.norm();
    const Vec3 h = dir.cross(e2);
    const double det = e1.dot(h);
    const Vec3 s = p - a;
    if (std::abs(det) <= 1e-12 * scale) {
      // Ray parallel to the triangle plane: only a problem when in-plane.
      const Vec3 n = e1.cross(e2);
      const double nn = n.norm();
      if (nn == 0.0 || std::abs(s.dot(n)) <= 1e-12 * nn * std::sqrt(scale)) {
        return std::nullopt;
      }
      continue;
    }
    const double inv = 1.0 / det;
    const double u = s.dot(h) * inv;
    if (u < -kBary || u > 1.0 + kBary) continue;
    const Vec3 q = s.cross(e1);
    const double w = dir.dot(q) * inv;
    if (w < -kBary || u + w > 1.0 + kBary) continue;
    const double dist = e2.dot(q) * inv;
    const double eps_t = 1e-10 * std::sqrt(scale);
    if (dist < -eps_t) continue;
    if (dist <= eps_t) return std::nullopt;
    if (u < kBary || w < kBary || u + w > 1.0 - kBary) return std::nullopt;
    ++crossings;
  }
  return crossings;
}

}  // namespace detail

GridSpec grid_for_box(const Eigen::AlignedBox3d& box, double spacing) {
  if (!(spacing > 0.0) || !std::isfinite(spacing)) {
    throw ArgumentError("voxel spacing must be positive");
  }
  if (box.isEmpty()) throw ArgumentError("cannot build a grid around an empty box");
  GridSpec g;
  g.spacing = spacing;
  g.origin = box.min() - Vec3::Constant(spacing);
  double total = 1.0;
  for (int a = 0; a < 3; ++a) {
    const double extent = box.max()[a] - box.min()[a];
    const double cells = std::ceil(extent / spacing) + 2.0;
    total *= std::max(cells, 1.0);
    if (total > static_cast<double>(kMaxVoxels)) {
      throw ResolutionError("voxel grid exceeds " + std::to_string(kMaxVoxels) +
                            " voxels at spacing " + std::to_string(spacing));
    }
    g.dims[static_cast<std::size_t>(a)] = static_cast<int>(std::max(cells, 1.0));
  }
  return g;
}

VoxelGrid::VoxelGrid(GridSpec spec, std::vector<std::uint8_t> occupancy)
    : spec_(spec), occupancy_(std::move(occupancy)) {
  if (!(spec_.spacing > 0.0)) throw ArgumentError("voxel spacing must be positive");
  if (occupancy_.size() != spec_.size()) {
    throw ArgumentError("occupancy length does not match grid dimensions");
  }
}

std::size_t VoxelGrid::occupied_count() const noexcept {
  return static_cast<std::size_t>(
      std::count_if(occupancy_.begin(), occupancy_.end(), [](std::uint8_t b) { return b != 0; }));
}

double VoxelGrid::occupied_volume() const noexcept {
  return static_cast<double>(occupied_count()) * spec_.spacing * spec_.spacing * spec_.spacing;
}

bool point_in_mesh(const Mesh& mesh, const Vec3& p) {
  static const std::array<Vec3, 4> kDirections = {
      Vec3(1.0, 0.0, 0.0),
      Vec3(0.5773502691896258, 0.6180339887498949, 0.5329070518200751).normalized(),
      Vec3(-0.3141592653589793, 0.8660254037844386, -0.3889174223083491).normalized(),
      Vec3(0.2718281828459045, -0.4142135623730950, 0.8689693251304817).normalized(),
  };
  for (const auto& dir : kDirections) {
    if (auto n = detail::count_crossings(mesh, p, dir)) return (*n % 2) == 1;
  }
  // Every direction grazed: the point sits on the surface. Count it inside.
  return true;
}

VoxelGrid voxelize(const Mesh& mesh, double spacing) {
  require_closed_manifold(mesh);
  const auto grid = grid_for_box(bounding_box(mesh.vertices()), spacing);
  return VoxelGrid(grid, kernels::omp::occupancy(mesh, grid));
}

VoxelGrid voxelize(const Mesh& mesh, const GridSpec& grid) {
  require_closed_manifold(mesh);
  if (!(grid.spacing > 0.0)) throw ArgumentError("voxel spacing must be positive");
  if (grid.size() > kMaxVoxels) throw ResolutionError("voxel grid too large");
  return VoxelGrid(grid, kernels::omp::occupancy(mesh, grid));
}

}  // namespace pneumodef
