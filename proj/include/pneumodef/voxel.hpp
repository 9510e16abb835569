#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "pneumodef/mesh.hpp"

namespace pneumodef {

// Axis-aligned voxel lattice. Voxel (i,j,k) has its center at
// origin + spacing * (i+0.5, j+0.5, k+0.5).
struct GridSpec {
  Vec3 origin = Vec3::Zero();
  double spacing = 1.0;
  std::array<int, 3> dims{0, 0, 0};

  std::size_t size() const noexcept {
    return static_cast<std::size_t>(dims[0]) * static_cast<std::size_t>(dims[1]) *
           static_cast<std::size_t>(dims[2]);
  }
  std::size_t index(int i, int j, int k) const noexcept {
    return (static_cast<std::size_t>(k) * static_cast<std::size_t>(dims[1]) +
            static_cast<std::size_t>(j)) *
               static_cast<std::size_t>(dims[0]) +
           static_cast<std::size_t>(i);
  }
  Vec3 center(int i, int j, int k) const {
    return origin + spacing * Vec3(i + 0.5, j + 0.5, k + 0.5);
  }
};

inline constexpr std::size_t kMaxVoxels = 100'000'000;

// Grid covering `box` padded by one voxel on every side. Throws
// ArgumentError for spacing <= 0 and ResolutionError above kMaxVoxels.
GridSpec grid_for_box(const Eigen::AlignedBox3d& box, double spacing);

class VoxelGrid {
 public:
  VoxelGrid(GridSpec spec, std::vector<std::uint8_t> occupancy);

  const GridSpec& spec() const noexcept { return spec_; }
  const std::vector<std::uint8_t>& occupancy() const noexcept { return occupancy_; }
  bool occupied(int i, int j, int k) const { return occupancy_[spec_.index(i, j, k)] != 0; }
  std::size_t occupied_count() const noexcept;
  double occupied_volume() const noexcept;

 private:
  GridSpec spec_;
  std::vector<std::uint8_t> occupancy_;
};

// Ray-crossing parity test. Retries with fixed alternate directions when a
// ray grazes an edge or vertex.
bool point_in_mesh(const Mesh& mesh, const Vec3& p);

// Occupied iff the voxel center lies inside the closed mesh.
VoxelGrid voxelize(const Mesh& mesh, double spacing);
VoxelGrid voxelize(const Mesh& mesh, const GridSpec& grid);

}  // namespace pneumodef
