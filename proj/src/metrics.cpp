#include "pneumodef/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "pneumodef/errors.hpp"
#include "pneumodef/kernels.hpp"
#include "pneumodef/voxel.hpp"

namespace pneumodef {

std::string_view to_string(Method m) {
  switch (m) {
    case Method::kernel:
      return "kernel";
    case Method::affine:
      return "affine";
    case Method::tps:
      return "tps";
  }
  return "kernel";
}

Method method_from_string(std::string_view name) {
  if (name == "kernel") return Method::kernel;
  if (name == "affine") return Method::affine;
  if (name == "tps") return Method::tps;
  throw ArgumentError("unknown method '" + std::string(name) + "'");
}

RmseResult rmse(const Mesh& predicted, const Mesh& truth, std::span<const int> excluded) {
  if (!predicted.same_topology(truth)) {
    throw ArgumentError("rmse: predicted and truth meshes differ in topology");
  }
  const std::size_t n = truth.vertex_count();
  std::vector<char> skip(n, 0);
  for (int e : excluded) {
    if (e < 0 || static_cast<std::size_t>(e) >= n) throw ArgumentError("excluded index out of range");
    skip[static_cast<std::size_t>(e)] = 1;
  }
  RmseResult out;
  out.per_vertex.resize(n);
  double sum = 0.0;
  std::size_t used = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double sq = squared_distance(predicted.vertices()[i], truth.vertices()[i]);
    out.per_vertex[i] = std::sqrt(sq);
    if (!skip[i]) {
      sum += sq;
      ++used;
    }
  }
  if (used == 0) throw ArgumentError("rmse: every vertex is excluded");
  out.rmse = std::sqrt(sum / static_cast<double>(used));
  return out;
}

double hausdorff(std::span<const Vec3> a, std::span<const Vec3> b) {
  if (a.empty() || b.empty()) throw ArgumentError("hausdorff of an empty point set");
  return std::max(kernels::omp::directed_hausdorff(a, b), kernels::omp::directed_hausdorff(b, a));
}

double hausdorff(const Mesh& a, const Mesh& b) { return hausdorff(a.vertices(), b.vertices()); }

namespace {

Eigen::AlignedBox3d union_box(const Mesh& a, const Mesh& b) {
  Eigen::AlignedBox3d box = bounding_box(a.vertices());
  box.extend(bounding_box(b.vertices()));
  return box;
}

}  // namespace

double default_dsc_spacing(const Mesh& a, const Mesh& b) {
  return union_box(a, b).diagonal().norm() / 200.0;
}

DscResult dsc(const Mesh& a, const Mesh& b, std::optional<double> spacing) {
  DscResult out;
  out.spacing = spacing.value_or(default_dsc_spacing(a, b));
  const GridSpec grid = grid_for_box(union_box(a, b), out.spacing);
  const VoxelGrid va = voxelize(a, grid);
  const VoxelGrid vb = voxelize(b, grid);
  std::size_t inter = 0;
  const auto& oa = va.occupancy();
  const auto& ob = vb.occupancy();
  for (std::size_t i = 0; i < oa.size(); ++i) inter += (oa[i] && ob[i]) ? 1 : 0;
  const std::size_t total = va.occupied_count() + vb.occupied_count();
  out.dsc = total == 0 ? 1.0 : 2.0 * static_cast<double>(inter) / static_cast<double>(total);
  return out;
}

}  // namespace pneumodef
