#pragma once

// Shared per-element arithmetic so serial and OpenMP builds agree bit for bit.

#include <cmath>
#include <optional>

#include "pneumodef/mesh.hpp"

namespace pneumodef::detail {

// Four interleaved partial sums break the add dependency chain; the
// summation order is fixed, so the result does not depend on the caller.
inline double squared_distance(const double* a, const double* b, Eigen::Index n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  Eigen::Index i = 0;
  for (; i + 4 <= n; i += 4) {
    const double d0 = a[i] - b[i];
    const double d1 = a[i + 1] - b[i + 1];
    const double d2 = a[i + 2] - b[i + 2];
    const double d3 = a[i + 3] - b[i + 3];
    s0 += d0 * d0;
    s1 += d1 * d1;
    s2 += d2 * d2;
    s3 += d3 * d3;
  }
  for (; i < n; ++i) {
    const double d = a[i] - b[i];
    s0 += d * d;
  }
  return (s0 + s1) + (s2 + s3);
}

inline double gaussian(double ka, double kb, double sq) { return ka * std::exp(-kb * sq); }

// Number of ray crossings of p + t*dir (t > 0), or nullopt when the ray
// grazes an edge, vertex or the point lies on the surface.
std::optional<int> count_crossings(const Mesh& mesh, const Vec3& p, const Vec3& dir);

}  // namespace pneumodef::detail
