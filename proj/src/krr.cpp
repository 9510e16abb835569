#include "pneumodef/krr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include <Eigen/Cholesky>

#include "kernels_detail.hpp"
#include "pneumodef/errors.hpp"

namespace pneumodef {

void KernelHyperparams::validate() const {
  if (!(ka > 0.0) || !std::isfinite(ka)) throw ArgumentError("k_a must be positive");
  if (!(kb > 0.0) || !std::isfinite(kb)) throw ArgumentError("k_b must be positive");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ArgumentError("lambda must be >= 0");
}

std::string_view to_string(FeatureScaling s) {
  switch (s) {
    case FeatureScaling::none:
      return "none";
    case FeatureScaling::standardize:
      return "standardize";
    case FeatureScaling::landmark_blocks:
      return "landmark_blocks";
  }
  return "none";
}

FeatureScaling feature_scaling_from_string(std::string_view name) {
  if (name == "none") return FeatureScaling::none;
  if (name == "standardize") return FeatureScaling::standardize;
  if (name == "landmark_blocks") return FeatureScaling::landmark_blocks;
  throw ArgumentError("unknown feature scaling '" + std::string(name) + "'");
}

InputScaling InputScaling::fit(const FeatureMatrix& xs, FeatureScaling mode) {
  InputScaling s;
  if (mode == FeatureScaling::none || xs.rows() == 0) return s;
  const double n = static_cast<double>(xs.rows());
  if (mode == FeatureScaling::landmark_blocks) {
    const Eigen::Index l = (xs.cols() - 2) / 6;
    if (l < 1 || 6 * l + 2 != xs.cols()) {
      throw ArgumentError("landmark_blocks scaling needs the 6l+2 feature layout");
    }
    auto rms = [&](Eigen::Index first) {
      const double v = std::sqrt(xs.middleCols(first, 3 * l).squaredNorm() / (n * 3.0 * static_cast<double>(l)));
      return v > 0.0 ? v : 1.0;
    };
    s.shift = Eigen::RowVectorXd::Zero(xs.cols());
    s.scale = Eigen::RowVectorXd::Ones(xs.cols());
    s.scale.segment(0, 3 * l).setConstant(rms(0));
    s.scale.segment(3 * l, 3 * l).setConstant(rms(3 * l));
    const double v_mean = xs.col(6 * l).mean();
    if (v_mean > 0.0) s.scale[6 * l] = v_mean;
    return s;
  }
  s.shift = xs.colwise().sum() / n;
  s.scale.resize(xs.cols());
  for (Eigen::Index c = 0; c < xs.cols(); ++c) {
    const double var = (xs.col(c).array() - s.shift[c]).square().sum() / n;
    const double sd = std::sqrt(var);
    // Constant columns (e.g. a fixed volume ratio) are left unscaled.
    s.scale[c] = sd > 1e-12 * (1.0 + std::abs(s.shift[c])) ? sd : 1.0;
  }
  return s;
}

FeatureMatrix InputScaling::apply(const FeatureMatrix& xs) const {
  if (is_identity()) return xs;
  if (xs.cols() != shift.size()) throw ArgumentError("scaling dimension mismatch");
  FeatureMatrix out(xs.rows(), xs.cols());
  for (Eigen::Index r = 0; r < xs.rows(); ++r) {
    out.row(r) = (xs.row(r) - shift).cwiseQuotient(scale);
  }
  return out;
}

double gaussian_kernel(std::span<const double> x, std::span<const double> x_prime,
                       const KernelHyperparams& hyper) {
  if (x.size() != x_prime.size()) {
    throw ArgumentError("kernel inputs differ in dimension (" + std::to_string(x.size()) +
                        " vs " + std::to_string(x_prime.size()) + ")");
  }
  return detail::gaussian(hyper.ka, hyper.kb,
                          detail::squared_distance(x.data(), x_prime.data(),
                                                   static_cast<Eigen::Index>(x.size())));
}

Eigen::MatrixXd build_kernel_matrix(const FeatureMatrix& xs, const KernelHyperparams& hyper) {
  return kernels::omp::gaussian_gram(xs, hyper.ka, hyper.kb);
}

Eigen::MatrixXd solve_regularized(Eigen::MatrixXd k, double lambda, const Eigen::MatrixXd& ys) {
  if (k.rows() != k.cols() || k.rows() != ys.rows()) {
    throw ArgumentError("kernel matrix and targets disagree in size");
  }
  const Eigen::Index n = k.rows();
  k.diagonal().array() += lambda;
  const Eigen::VectorXd diag = k.diagonal();

  Eigen::LLT<Eigen::Ref<Eigen::MatrixXd>, Eigen::Lower> llt(k);
  if (llt.info() != Eigen::Success) {
    // Locate the first non-positive pivot from the partial factor.
    double pivot = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      pivot = diag[i] - k.row(i).head(i).squaredNorm();
      if (!(pivot > 0.0)) break;
    }
    throw ConditioningError("K + lambda*E is not positive definite", pivot);
  }
  const Eigen::ArrayXd pivots = k.diagonal().array().square();
  const double smallest = pivots.minCoeff();
  if (smallest < static_cast<double>(n) * std::numeric_limits<double>::epsilon() * pivots.maxCoeff()) {
    throw ConditioningError("K + lambda*E is numerically singular", smallest);
  }
  return llt.solve(ys);
}

KernelModel fit(const FeatureMatrix& xs, const Eigen::MatrixXd& ys, const KernelHyperparams& hyper,
                const FitOptions& options) {
  hyper.validate();
  if (xs.rows() < 1) throw ArgumentError("fit needs at least one sample");
  if (ys.rows() != xs.rows()) throw ArgumentError("inputs and targets differ in row count");

  KernelModel model;
  model.hyper = hyper;
  model.train_x = xs;
  model.scaling = InputScaling::fit(xs, options.scaling);
  model.weights =
      solve_regularized(build_kernel_matrix(model.kernel_inputs(), hyper), hyper.lambda, ys);
  return model;
}

Eigen::MatrixXd predict_batch(const KernelModel& model, const FeatureMatrix& xs) {
  if (xs.cols() != model.input_dim()) {
    throw ArgumentError("prediction input has dimension " + std::to_string(xs.cols()) +
                        ", model expects " + std::to_string(model.input_dim()));
  }
  const Eigen::MatrixXd cross = kernels::omp::gaussian_cross(
      model.scaling.apply(xs), model.kernel_inputs(), model.hyper.ka, model.hyper.kb);
  return cross * model.weights;
}

Eigen::VectorXd predict(const KernelModel& model, std::span<const double> x_new) {
  if (static_cast<Eigen::Index>(x_new.size()) != model.input_dim()) {
    throw ArgumentError("prediction input has dimension " + std::to_string(x_new.size()) +
                        ", model expects " + std::to_string(model.input_dim()));
  }
  FeatureMatrix row = Eigen::Map<const Eigen::RowVectorXd>(x_new.data(), model.input_dim());
  return predict_batch(model, row).row(0).transpose();
}

double median_squared_distance(const FeatureMatrix& xs) {
  constexpr Eigen::Index kMaxRows = 400;
  const Eigen::Index n = xs.rows();
  std::vector<Eigen::Index> rows;
  if (n <= kMaxRows) {
    for (Eigen::Index i = 0; i < n; ++i) rows.push_back(i);
  } else {
    for (Eigen::Index i = 0; i < kMaxRows; ++i) rows.push_back(i * n / kMaxRows);
  }
  std::vector<double> d2;
  d2.reserve(rows.size() * rows.size() / 2);
  for (std::size_t a = 0; a < rows.size(); ++a) {
    for (std::size_t b = a + 1; b < rows.size(); ++b) {
      d2.push_back((xs.row(rows[a]) - xs.row(rows[b])).squaredNorm());
    }
  }
  if (d2.empty()) return 1.0;
  auto mid = d2.begin() + static_cast<std::ptrdiff_t>(d2.size() / 2);
  std::nth_element(d2.begin(), mid, d2.end());
  return *mid > 0.0 ? *mid : 1.0;
}

HyperGrid default_grid(const FeatureMatrix& kernel_inputs) {
  HyperGrid grid;
  const double median = median_squared_distance(kernel_inputs);
  for (int e = -6; e <= 0; ++e) grid.kb.push_back(std::pow(10.0, e) / median);
  return grid;
}

std::vector<CvFold> make_group_folds(const FeatureMatrix& xs, const Eigen::MatrixXd& ys,
                                     std::span<const std::string> groups, int folds) {
  if (folds < 2) throw ArgumentError("cross-validation needs at least 2 folds");
  if (static_cast<Eigen::Index>(groups.size()) != xs.rows() || ys.rows() != xs.rows()) {
    throw ArgumentError("group labels, inputs and targets differ in length");
  }
  std::map<std::string, int> rank;
  std::vector<int> fold_of(groups.size());
  for (std::size_t i = 0; i < groups.size(); ++i) {
    auto [it, inserted] = rank.try_emplace(groups[i], static_cast<int>(rank.size()));
    fold_of[i] = it->second % folds;
  }
  if (static_cast<int>(rank.size()) < folds) {
    throw ArgumentError("fewer source cases (" + std::to_string(rank.size()) + ") than folds (" +
                        std::to_string(folds) + ")");
  }
  std::vector<CvFold> out(static_cast<std::size_t>(folds));
  for (int f = 0; f < folds; ++f) {
    std::vector<Eigen::Index> tr, va;
    for (std::size_t i = 0; i < groups.size(); ++i) {
      (fold_of[i] == f ? va : tr).push_back(static_cast<Eigen::Index>(i));
    }
    auto& fold = out[static_cast<std::size_t>(f)];
    fold.train_x = xs(tr, Eigen::all);
    fold.train_y = ys(tr, Eigen::all);
    fold.val_x = xs(va, Eigen::all);
    fold.val_y = ys(va, Eigen::all);
  }
  return out;
}

GridSearchResult grid_search(std::span<const CvFold> folds, const HyperGrid& grid,
                             FeatureScaling scaling) {
  if (grid.ka.empty() || grid.kb.empty() || grid.lambda.empty()) {
    throw ArgumentError("hyperparameter grids must be nonempty");
  }
  if (folds.size() < 2) throw ArgumentError("cross-validation needs at least 2 folds");
  for (double ka : grid.ka) KernelHyperparams{ka, 1.0, 0.0}.validate();
  for (double kb : grid.kb) KernelHyperparams{1.0, kb, 0.0}.validate();
  for (double lam : grid.lambda) KernelHyperparams{1.0, 1.0, lam}.validate();

  const std::size_t cells = grid.ka.size() * grid.kb.size() * grid.lambda.size();
  std::vector<std::vector<double>> fold_rmse(cells, std::vector<double>(folds.size()));

  for (std::size_t f = 0; f < folds.size(); ++f) {
    const auto& fold = folds[f];
    const auto s = InputScaling::fit(fold.train_x, scaling);
    const FeatureMatrix tx = s.apply(fold.train_x);
    const FeatureMatrix vx = s.apply(fold.val_x);
    for (std::size_t a = 0; a < grid.ka.size(); ++a) {
      for (std::size_t b = 0; b < grid.kb.size(); ++b) {
        const double ka = grid.ka[a];
        const double kb = grid.kb[b];
        const Eigen::MatrixXd gram = kernels::omp::gaussian_gram(tx, ka, kb);
        const Eigen::MatrixXd cross = kernels::omp::gaussian_cross(vx, tx, ka, kb);
        for (std::size_t c = 0; c < grid.lambda.size(); ++c) {
          const std::size_t cell = (a * grid.kb.size() + b) * grid.lambda.size() + c;
          double rmse = std::numeric_limits<double>::infinity();
          try {
            const Eigen::MatrixXd w = solve_regularized(gram, grid.lambda[c], fold.train_y);
            const Eigen::MatrixXd pred = cross * w;
            rmse = std::sqrt((pred - fold.val_y).rowwise().squaredNorm().mean());
          } catch (const ConditioningError&) {
            // An unusable grid point scores +inf and is never selected.
          }
          fold_rmse[cell][f] = rmse;
        }
      }
    }
  }

  GridSearchResult result;
  double best = std::numeric_limits<double>::infinity();
  bool have_best = false;
  for (std::size_t a = 0; a < grid.ka.size(); ++a) {
    for (std::size_t b = 0; b < grid.kb.size(); ++b) {
      for (std::size_t c = 0; c < grid.lambda.size(); ++c) {
        const std::size_t cell = (a * grid.kb.size() + b) * grid.lambda.size() + c;
        const auto& r = fold_rmse[cell];
        CvRow row;
        row.hyper = {grid.ka[a], grid.kb[b], grid.lambda[c]};
        double sum = 0.0;
        for (double v : r) sum += v;
        row.mean_rmse = sum / static_cast<double>(r.size());
        double var = 0.0;
        for (double v : r) var += (v - row.mean_rmse) * (v - row.mean_rmse);
        row.std_rmse = std::sqrt(var / static_cast<double>(r.size()));
        if (!have_best || row.mean_rmse < best) {
          best = row.mean_rmse;
          result.best = row.hyper;
          have_best = true;
        }
        result.table.push_back(row);
      }
    }
  }
  return result;
}

GridSearchResult grid_search(const FeatureMatrix& xs, const Eigen::MatrixXd& ys,
                             std::span<const std::string> groups, const HyperGrid& grid, int folds,
                             FeatureScaling scaling) {
  const auto f = make_group_folds(xs, ys, groups, folds);
  return grid_search(f, grid, scaling);
}

}  // namespace pneumodef
