#pragma once

// Hot loops, each in two builds: `serial` is the plain reference kept for
// testing, `omp` is the OpenMP version the library calls. Both produce
// bit-identical results for any thread count.

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "pneumodef/mesh.hpp"
#include "pneumodef/voxel.hpp"

namespace pneumodef {

using FeatureMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

namespace kernels::serial {

// out(d,d') = ka * exp(-kb * |x_d - x_d'|^2), upper triangle mirrored.
Eigen::MatrixXd gaussian_gram(const FeatureMatrix& xs, double ka, double kb);
// out(i,d) = ka * exp(-kb * |a_i - b_d|^2).
Eigen::MatrixXd gaussian_cross(const FeatureMatrix& a, const FeatureMatrix& b, double ka,
                               double kb);
// max over a of min over b of |a - b|.
double directed_hausdorff(std::span<const Vec3> a, std::span<const Vec3> b);
// Brute force: one parity test per voxel center against every triangle.
std::vector<std::uint8_t> occupancy(const Mesh& mesh, const GridSpec& grid);

}  // namespace kernels::serial

namespace kernels::omp {

Eigen::MatrixXd gaussian_gram(const FeatureMatrix& xs, double ka, double kb);
Eigen::MatrixXd gaussian_cross(const FeatureMatrix& a, const FeatureMatrix& b, double ka,
                               double kb);
double directed_hausdorff(std::span<const Vec3> a, std::span<const Vec3> b);
// Scanline fill along x per (y,z) column with triangles binned by their yz
// footprint. Columns that graze an edge fall back to per-voxel tests.
std::vector<std::uint8_t> occupancy(const Mesh& mesh, const GridSpec& grid);

}  // namespace kernels::omp

}  // namespace pneumodef
