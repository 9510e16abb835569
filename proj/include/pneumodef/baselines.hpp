#pragma once

// Landmark-driven comparison warps: least-squares affine and 3-D thin-plate
// spline with kernel U(r) = r.

#include <span>

#include <Eigen/Core>

#include "pneumodef/mesh.hpp"

namespace pneumodef {

struct AffineTransform {
  Eigen::Matrix3d linear = Eigen::Matrix3d::Identity();
  Vec3 translation = Vec3::Zero();

  Vec3 operator()(const Vec3& v) const { return linear * v + translation; }
};

// Least-squares fit of dst ~ A*src + t. Throws DegenerateConfigurationError
// (carrying the rank of the 4x4 normal system) unless src spans 3-D, which
// rules out every 3-point input.
AffineTransform fit_affine(std::span<const Vec3> src, std::span<const Vec3> dst);

Mesh apply_affine(const AffineTransform& t, const Mesh& mesh);

struct TpsWarp {
  Eigen::MatrixX3d control_points;     // l x 3 source landmarks
  Eigen::MatrixX3d nonlinear_weights;  // l x 3
  Eigen::Matrix<double, 4, 3> affine_part = Eigen::Matrix<double, 4, 3>::Zero();  // rows 1,x,y,z
  double regularization = 0.0;

  Vec3 operator()(const Vec3& v) const;
};

// Solves [[Phi + reg*E, P], [P^T, 0]] [w; a] = [dst; 0] with
// Phi_jk = |src_j - src_k| and P = [1 | src]. Throws
// DegenerateConfigurationError for coplanar or coincident control points.
TpsWarp fit_tps(std::span<const Vec3> src, std::span<const Vec3> dst, double regularization = 0.0);

Mesh apply_tps(const TpsWarp& warp, const Mesh& mesh);

}  // namespace pneumodef
