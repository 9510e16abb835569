#pragma once

// Gaussian-kernel ridge regression.
//
//   K(x, x') = ka * exp(-kb * |x - x'|^2)
//   W        = (K + lambda * E)^-1 Y       (solved by Cholesky, never inverted)
//   y(x)     = sum_d K(x, x_d) W_d

#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "pneumodef/kernels.hpp"
#include "pneumodef/mesh.hpp"

namespace pneumodef {

struct KernelHyperparams {
  double ka = 1.0;
  double kb = 1.0;  // inverse squared input units
  double lambda = 1e-3;

  // ka > 0, kb > 0, lambda >= 0; throws ArgumentError otherwise.
  void validate() const;
  friend bool operator==(const KernelHyperparams&, const KernelHyperparams&) = default;
};

enum class FeatureScaling {
  none,         // raw features
  standardize,  // per-column zero mean / unit variance from the training inputs
  // Landmark feature layout only: each relative-position block divided by
  // its RMS entry, v_inf divided by its mean, the volume ratio untouched.
  landmark_blocks,
};

std::string_view to_string(FeatureScaling s);
FeatureScaling feature_scaling_from_string(std::string_view name);

// Affine map applied to every input before the kernel: (x - shift) / scale.
// Empty vectors mean identity. Columns with zero spread keep scale 1.
struct InputScaling {
  Eigen::RowVectorXd shift;
  Eigen::RowVectorXd scale;

  bool is_identity() const noexcept { return shift.size() == 0; }
  static InputScaling fit(const FeatureMatrix& xs, FeatureScaling mode);
  FeatureMatrix apply(const FeatureMatrix& xs) const;
};

struct KernelModel {
  KernelHyperparams hyper;
  FeatureMatrix train_x;    // D x N raw inputs
  Eigen::MatrixXd weights;  // D x M
  InputScaling scaling;
  int landmark_count = 0;
  std::string feature_order_tag;
  Lobe lobe = Lobe::upper;

  Eigen::Index input_dim() const noexcept { return train_x.cols(); }
  Eigen::Index output_dim() const noexcept { return weights.cols(); }
  // Training inputs as seen by the kernel.
  FeatureMatrix kernel_inputs() const { return scaling.apply(train_x); }
};

struct FitOptions {
  FeatureScaling scaling = FeatureScaling::none;
};

// Throws ArgumentError on dimension mismatch.
double gaussian_kernel(std::span<const double> x, std::span<const double> x_prime,
                       const KernelHyperparams& hyper);

// Symmetric D x D matrix, diagonal exactly ka.
Eigen::MatrixXd build_kernel_matrix(const FeatureMatrix& xs, const KernelHyperparams& hyper);

// Throws ConditioningError when K + lambda*E is numerically singular.
KernelModel fit(const FeatureMatrix& xs, const Eigen::MatrixXd& ys, const KernelHyperparams& hyper,
                const FitOptions& options = {});

// Solves (K + lambda*E) W = Y in place of K. Exposed for grid search.
Eigen::MatrixXd solve_regularized(Eigen::MatrixXd k, double lambda, const Eigen::MatrixXd& ys);

Eigen::VectorXd predict(const KernelModel& model, std::span<const double> x_new);
Eigen::MatrixXd predict_batch(const KernelModel& model, const FeatureMatrix& xs);

// ---- hyperparameter search -------------------------------------------------

struct HyperGrid {
  std::vector<double> ka{1.0};
  std::vector<double> kb;
  std::vector<double> lambda{1e-4, 1e-3, 1e-2, 1e-1};
};

// Median of pairwise squared distances over a fixed subsample of rows.
double median_squared_distance(const FeatureMatrix& xs);

// ka = {1}, kb = 10^-6..10^0 / median squared distance, lambda = 10^-4..10^-1.
HyperGrid default_grid(const FeatureMatrix& kernel_inputs);

struct CvFold {
  FeatureMatrix train_x;
  Eigen::MatrixXd train_y;
  FeatureMatrix val_x;
  Eigen::MatrixXd val_y;
};

struct CvRow {
  KernelHyperparams hyper;
  double mean_rmse = 0.0;
  double std_rmse = 0.0;
};

struct GridSearchResult {
  KernelHyperparams best;
  std::vector<CvRow> table;  // ka outermost, lambda innermost
};

// Folds over groups (source cases): group g, in order of first appearance,
// goes to fold g % folds. Throws ArgumentError if folds < 2 or there are
// fewer groups than folds.
std::vector<CvFold> make_group_folds(const FeatureMatrix& xs, const Eigen::MatrixXd& ys,
                                     std::span<const std::string> groups, int folds);

// Mean fold RMSE for every grid point; ties keep the first in iteration order.
GridSearchResult grid_search(std::span<const CvFold> folds, const HyperGrid& grid,
                             FeatureScaling scaling = FeatureScaling::none);

GridSearchResult grid_search(const FeatureMatrix& xs, const Eigen::MatrixXd& ys,
                             std::span<const std::string> groups, const HyperGrid& grid, int folds,
                             FeatureScaling scaling = FeatureScaling::none);

}  // namespace pneumodef
