#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pneumodef/landmarks.hpp"
#include "pneumodef/mesh.hpp"

namespace pneumodef {

enum class Method { kernel, affine, tps };

std::string_view to_string(Method m);
Method method_from_string(std::string_view name);

struct RmseResult {
  double rmse = 0.0;
  std::vector<double> per_vertex;  // |p_i - t_i| for every vertex
};

// Root mean squared per-vertex error. Vertices listed in `excluded`
// (observed landmarks) are left out of the mean but kept in per_vertex.
// Throws ArgumentError on topology mismatch.
RmseResult rmse(const Mesh& predicted, const Mesh& truth, std::span<const int> excluded = {});

// Symmetric Hausdorff distance between vertex sets (no surface sampling).
double hausdorff(std::span<const Vec3> a, std::span<const Vec3> b);
double hausdorff(const Mesh& a, const Mesh& b);

// Union bounding-box diagonal / 200.
double default_dsc_spacing(const Mesh& a, const Mesh& b);

struct DscResult {
  double dsc = 0.0;
  double spacing = 0.0;
};

// Dice coefficient 2|A n B| / (|A| + |B|) of the voxel occupancies of both
// meshes rasterized on one grid around their union bounding box.
DscResult dsc(const Mesh& a, const Mesh& b, std::optional<double> spacing = std::nullopt);

struct EvaluationReport {
  std::string case_id;
  Method method = Method::kernel;
  Lobe lobe = Lobe::upper;
  int landmark_count = 0;
  Ordering ordering = Ordering::experiment2;
  std::string status = "ok";  // "ok" or "degenerate"
  double rmse_mm = 0.0;
  double dsc = 0.0;
  double hausdorff_mm = 0.0;
  double spacing_mm = 0.0;
  std::vector<double> per_vertex_error_mm;

  bool ok() const noexcept { return status == "ok"; }
};

}  // namespace pneumodef
