#include <cmath>
#include <limits>
#include <algorithm>

#include "kernels_detail.hpp"
#include "pneumodef/kernels.hpp"

namespace pneumodef::kernels::serial {

Eigen::MatrixXd gaussian_gram(const FeatureMatrix& xs, double ka, double kb) {
  const Eigen::Index n = xs.rows();
  const Eigen::Index dim = xs.cols();
  Eigen::MatrixXd out(n, n);
  for (Eigen::Index d = 0; d < n; ++d) {
    out(d, d) = ka;
    for (Eigen::Index e = d + 1; e < n; ++e) {
      const double k =
          detail::gaussian(ka, kb, detail::squared_distance(xs.row(d).data(), xs.row(e).data(), dim));
      out(d, e) = k;
      out(e, d) = k;
    }
  }
  return out;
}

Eigen::MatrixXd gaussian_cross(const FeatureMatrix& a, const FeatureMatrix& b, double ka,
                               double kb) {
  Eigen::MatrixXd out(a.rows(), b.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index d = 0; d < b.rows(); ++d) {
      out(i, d) = detail::gaussian(
          ka, kb, detail::squared_distance(a.row(i).data(), b.row(d).data(), a.cols()));
    }
  }
  return out;
}

double directed_hausdorff(std::span<const Vec3> a, std::span<const Vec3> b) {
  double worst = 0.0;
  for (const auto& p : a) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& q : b) best = std::min(best, squared_distance(p, q));
    worst = std::max(worst, best);
  }
  return std::sqrt(worst);
}

std::vector<std::uint8_t> occupancy(const Mesh& mesh, const GridSpec& grid) {
  std::vector<std::uint8_t> occ(grid.size(), 0);
  for (int k = 0; k < grid.dims[2]; ++k) {
    for (int j = 0; j < grid.dims[1]; ++j) {
      for (int i = 0; i < grid.dims[0]; ++i) {
        occ[grid.index(i, j, k)] = point_in_mesh(mesh, grid.center(i, j, k)) ? 1 : 0;
      }
    }
  }
  return occ;
}

}  // namespace pneumodef::kernels::serial
