#include "pneumodef/baselines.hpp"

#include <cmath>

#include <Eigen/LU>
#include <Eigen/QR>
#include <Eigen/SVD>

#include "pneumodef/errors.hpp"

namespace pneumodef {
namespace {

constexpr double kRankTolerance = 1e-9;

void check_pairs(std::span<const Vec3> src, std::span<const Vec3> dst) {
  if (src.size() != dst.size()) throw ArgumentError("source and target landmark counts differ");
  if (src.empty()) throw ArgumentError("no landmarks given");
}

// Rank of [1 | src] judged on centered, RMS-normalized points so the
// threshold does not depend on units or placement.
int homogeneous_rank(std::span<const Vec3> src) {
  const Vec3 c = centroid(src);
  Eigen::MatrixX3d centered(static_cast<Eigen::Index>(src.size()), 3);
  for (std::size_t i = 0; i < src.size(); ++i) {
    centered.row(static_cast<Eigen::Index>(i)) = (src[i] - c).transpose();
  }
  const double rms = std::sqrt(centered.squaredNorm() / static_cast<double>(src.size()));
  if (!(rms > 0.0)) return 1;
  const Eigen::JacobiSVD<Eigen::MatrixX3d> svd(centered / rms);
  const auto& s = svd.singularValues();
  int rank = 1;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s[i] > kRankTolerance * s[0]) ++rank;
  }
  return rank;
}

}  // namespace

AffineTransform fit_affine(std::span<const Vec3> src, std::span<const Vec3> dst) {
  check_pairs(src, dst);
  const int rank = homogeneous_rank(src);
  if (rank < 4) {
    throw DegenerateConfigurationError("affine fit needs landmarks spanning 3-D", rank);
  }
  const auto n = static_cast<Eigen::Index>(src.size());
  Eigen::MatrixX4d h(n, 4);
  Eigen::MatrixX3d b(n, 3);
  for (Eigen::Index i = 0; i < n; ++i) {
    h.row(i) << 1.0, src[static_cast<std::size_t>(i)].transpose();
    b.row(i) = dst[static_cast<std::size_t>(i)].transpose();
  }
  const Eigen::Matrix<double, 4, 3> params = h.colPivHouseholderQr().solve(b);
  AffineTransform t;
  t.translation = params.row(0).transpose();
  t.linear = params.bottomRows<3>().transpose();
  return t;
}

Mesh apply_affine(const AffineTransform& t, const Mesh& mesh) {
  std::vector<Vec3> out(mesh.vertex_count());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = t(mesh.vertices()[i]);
  return mesh.with_vertices(std::move(out));
}

Vec3 TpsWarp::operator()(const Vec3& v) const {
  Vec3 out = affine_part.row(0).transpose() + affine_part.bottomRows<3>().transpose() * v;
  for (Eigen::Index k = 0; k < control_points.rows(); ++k) {
    const double r = (v - control_points.row(k).transpose()).norm();
    out += r * nonlinear_weights.row(k).transpose();
  }
  return out;
}

TpsWarp fit_tps(std::span<const Vec3> src, std::span<const Vec3> dst, double regularization) {
  check_pairs(src, dst);
  if (!(regularization >= 0.0)) throw ArgumentError("TPS regularization must be >= 0");
  const int rank = homogeneous_rank(src);
  if (rank < 4) {
    throw DegenerateConfigurationError("thin-plate spline needs landmarks spanning 3-D", rank);
  }
  const auto l = static_cast<Eigen::Index>(src.size());
  Eigen::MatrixXd system = Eigen::MatrixXd::Zero(l + 4, l + 4);
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(l + 4, 3);
  for (Eigen::Index j = 0; j < l; ++j) {
    const Vec3& pj = src[static_cast<std::size_t>(j)];
    for (Eigen::Index k = 0; k < l; ++k) {
      system(j, k) = (pj - src[static_cast<std::size_t>(k)]).norm();
    }
    system(j, j) += regularization;
    system(j, l) = 1.0;
    system(l, j) = 1.0;
    for (int a = 0; a < 3; ++a) {
      system(j, l + 1 + a) = pj[a];
      system(l + 1 + a, j) = pj[a];
    }
    rhs.row(j) = dst[static_cast<std::size_t>(j)].transpose();
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(system);
  lu.setThreshold(1e-12);
  if (lu.rank() < l + 4) {
    // Coincident control points make Phi rank deficient.
    throw DegenerateConfigurationError("thin-plate spline system is singular",
                                       static_cast<int>(lu.rank()));
  }
  const Eigen::MatrixXd sol = lu.solve(rhs);

  TpsWarp warp;
  warp.regularization = regularization;
  warp.control_points.resize(l, 3);
  for (Eigen::Index j = 0; j < l; ++j) {
    warp.control_points.row(j) = src[static_cast<std::size_t>(j)].transpose();
  }
  warp.nonlinear_weights = sol.topRows(l);
  warp.affine_part = sol.bottomRows<4>();
  return warp;
}

Mesh apply_tps(const TpsWarp& warp, const Mesh& mesh) {
  std::vector<Vec3> out(mesh.vertex_count());
  const auto n = static_cast<std::ptrdiff_t>(out.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    out[static_cast<std::size_t>(i)] = warp(mesh.vertices()[static_cast<std::size_t>(i)]);
  }
  return mesh.with_vertices(std::move(out));
}

}  // namespace pneumodef
