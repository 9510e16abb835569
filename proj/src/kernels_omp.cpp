#include <algorithm>
#include <cmath>
#include <limits>

#include "kernels_detail.hpp"
#include "pneumodef/kernels.hpp"

namespace pneumodef::kernels::omp {

Eigen::MatrixXd gaussian_gram(const FeatureMatrix& xs, double ka, double kb) {
  const Eigen::Index n = xs.rows();
  const Eigen::Index dim = xs.cols();
  Eigen::MatrixXd out(n, n);
  // Lower triangle column by column (contiguous in column-major storage);
  // columns shrink, so schedule dynamically.
#pragma omp parallel for schedule(dynamic, 16)
  for (Eigen::Index e = 0; e < n; ++e) {
    out(e, e) = ka;
    const double* xe = xs.row(e).data();
    for (Eigen::Index d = e + 1; d < n; ++d) {
      out(d, e) = detail::gaussian(ka, kb, detail::squared_distance(xs.row(d).data(), xe, dim));
    }
  }
  // Mirror in tiles to keep both sides cache resident.
  constexpr Eigen::Index kTile = 64;
  const Eigen::Index tiles = (n + kTile - 1) / kTile;
#pragma omp parallel for schedule(dynamic)
  for (Eigen::Index tc = 0; tc < tiles; ++tc) {
    for (Eigen::Index tr = tc; tr < tiles; ++tr) {
      const Eigen::Index c_end = std::min(n, (tc + 1) * kTile);
      const Eigen::Index r_end = std::min(n, (tr + 1) * kTile);
      for (Eigen::Index r = tr * kTile; r < r_end; ++r) {
        for (Eigen::Index c = tc * kTile; c < std::min(c_end, r); ++c) out(c, r) = out(r, c);
      }
    }
  }
  return out;
}

Eigen::MatrixXd gaussian_cross(const FeatureMatrix& a, const FeatureMatrix& b, double ka,
                               double kb) {
  Eigen::MatrixXd out(a.rows(), b.rows());
  const Eigen::Index cols = b.rows();
#pragma omp parallel for schedule(static)
  for (Eigen::Index d = 0; d < cols; ++d) {
    const double* bd = b.row(d).data();
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      out(i, d) = detail::gaussian(ka, kb, detail::squared_distance(a.row(i).data(), bd, a.cols()));
    }
  }
  return out;
}

double directed_hausdorff(std::span<const Vec3> a, std::span<const Vec3> b) {
  std::vector<double> nearest(a.size());
  const auto n = static_cast<std::ptrdiff_t>(a.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& q : b) best = std::min(best, squared_distance(a[static_cast<std::size_t>(i)], q));
    nearest[static_cast<std::size_t>(i)] = best;
  }
  double worst = 0.0;
  for (double d : nearest) worst = std::max(worst, d);
  return std::sqrt(worst);
}

namespace {

struct ColumnBins {
  std::vector<std::size_t> offsets;  // CSR over columns j + k*dims[1]
  std::vector<int> triangles;
};

ColumnBins bin_triangles(const Mesh& mesh, const GridSpec& grid) {
  const int ny = grid.dims[1];
  const int nz = grid.dims[2];
  const auto& v = mesh.vertices();
  const auto column_range = [&](double lo, double hi, double origin, int n) {
    const int first = std::max(0, static_cast<int>(std::ceil((lo - origin) / grid.spacing - 0.5)));
    const int last =
        std::min(n - 1, static_cast<int>(std::floor((hi - origin) / grid.spacing - 0.5)));
    return std::pair{first, last};
  };

  ColumnBins bins;
  bins.offsets.assign(static_cast<std::size_t>(ny) * static_cast<std::size_t>(nz) + 1, 0);
  const auto& tris = mesh.triangles();
  std::vector<std::array<int, 4>> ranges(tris.size());
  for (std::size_t t = 0; t < tris.size(); ++t) {
    const Vec3& a = v[tris[t][0]];
    const Vec3& b = v[tris[t][1]];
    const Vec3& c = v[tris[t][2]];
    const auto [j0, j1] = column_range(std::min({a.y(), b.y(), c.y()}),
                                       std::max({a.y(), b.y(), c.y()}), grid.origin.y(), ny);
    const auto [k0, k1] = column_range(std::min({a.z(), b.z(), c.z()}),
                                       std::max({a.z(), b.z(), c.z()}), grid.origin.z(), nz);
    ranges[t] = {j0, j1, k0, k1};
    for (int k = k0; k <= k1; ++k) {
      for (int j = j0; j <= j1; ++j) {
        ++bins.offsets[static_cast<std::size_t>(k) * static_cast<std::size_t>(ny) +
                       static_cast<std::size_t>(j) + 1];
      }
    }
  }
  for (std::size_t c = 1; c < bins.offsets.size(); ++c) bins.offsets[c] += bins.offsets[c - 1];
  bins.triangles.resize(bins.offsets.back());
  std::vector<std::size_t> cursor(bins.offsets.begin(), bins.offsets.end() - 1);
  for (std::size_t t = 0; t < tris.size(); ++t) {
    const auto& r = ranges[t];
    for (int k = r[2]; k <= r[3]; ++k) {
      for (int j = r[0]; j <= r[1]; ++j) {
        const auto col = static_cast<std::size_t>(k) * static_cast<std::size_t>(ny) +
                         static_cast<std::size_t>(j);
        bins.triangles[cursor[col]++] = static_cast<int>(t);
      }
    }
  }
  return bins;
}

// x coordinates where the +x line through (y,z) crosses the binned
// triangles; false when it grazes an edge or vertex.
bool column_hits(const Mesh& mesh, std::span<const int> candidates, double y, double z,
                 std::vector<double>& hits) {
  constexpr double kBary = 1e-10;
  const auto& v = mesh.vertices();
  const auto& tris = mesh.triangles();
  hits.clear();
  for (int t : candidates) {
    const Vec3& a = v[tris[static_cast<std::size_t>(t)][0]];
    const Vec3& b = v[tris[static_cast<std::size_t>(t)][1]];
    const Vec3& c = v[tris[static_cast<std::size_t>(t)][2]];
    const auto orient = [](double py, double pz, double qy, double qz, double ry, double rz) {
      return (qy - py) * (rz - pz) - (qz - pz) * (ry - py);
    };
    const double area2 = orient(a.y(), a.z(), b.y(), b.z(), c.y(), c.z());
    const double scale = (b - a).squaredNorm() + (c - a).squaredNorm();
    if (std::abs(area2) <= 1e-14 * scale) return false;
    const double la = orient(b.y(), b.z(), c.y(), c.z(), y, z) / area2;
    const double lb = orient(c.y(), c.z(), a.y(), a.z(), y, z) / area2;
    const double lc = orient(a.y(), a.z(), b.y(), b.z(), y, z) / area2;
    if (la < -kBary || lb < -kBary || lc < -kBary) continue;
    if (la < kBary || lb < kBary || lc < kBary) return false;
    hits.push_back(la * a.x() + lb * b.x() + lc * c.x());
  }
  std::sort(hits.begin(), hits.end());
  return hits.size() % 2 == 0;
}

}  // namespace

std::vector<std::uint8_t> occupancy(const Mesh& mesh, const GridSpec& grid) {
  std::vector<std::uint8_t> occ(grid.size(), 0);
  const ColumnBins bins = bin_triangles(mesh, grid);
  const int nx = grid.dims[0];
  const int ny = grid.dims[1];
  const auto columns = static_cast<std::ptrdiff_t>(ny) * grid.dims[2];
  const double touch = 1e-9 * grid.spacing;

#pragma omp parallel
  {
    std::vector<double> hits;
#pragma omp for schedule(dynamic, 32)
    for (std::ptrdiff_t col = 0; col < columns; ++col) {
      const int j = static_cast<int>(col % ny);
      const int k = static_cast<int>(col / ny);
      const auto begin = bins.offsets[static_cast<std::size_t>(col)];
      const auto end = bins.offsets[static_cast<std::size_t>(col) + 1];
      if (begin == end) continue;
      const std::span<const int> candidates(bins.triangles.data() + begin, end - begin);
      const Vec3 base = grid.center(0, j, k);
      const bool clean = column_hits(mesh, candidates, base.y(), base.z(), hits);
      std::size_t below = 0;
      for (int i = 0; i < nx; ++i) {
        const Vec3 center = grid.center(i, j, k);
        std::uint8_t inside = 0;
        if (!clean) {
          inside = point_in_mesh(mesh, center) ? 1 : 0;
        } else {
          while (below < hits.size() && hits[below] < center.x() - touch) ++below;
          if (below < hits.size() && hits[below] <= center.x() + touch) {
            inside = point_in_mesh(mesh, center) ? 1 : 0;
          } else {
            inside = (below % 2 == 1) ? 1 : 0;
          }
        }
        occ[grid.index(i, j, k)] = inside;
      }
    }
  }
  return occ;
}

}  // namespace pneumodef::kernels::omp
