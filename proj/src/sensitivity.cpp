#include "pneumodef/sensitivity.hpp"

#include <cmath>

#include <Eigen/SVD>

#include "pneumodef/errors.hpp"

namespace pneumodef {

namespace {

// `train` is model.kernel_inputs(), hoisted out of per-sample loops.
Eigen::MatrixXd jacobian_with(const KernelModel& model, const FeatureMatrix& train,
                              std::span<const double> x_new) {
  if (static_cast<Eigen::Index>(x_new.size()) != model.input_dim()) {
    throw ArgumentError("jacobian input has dimension " + std::to_string(x_new.size()) +
                        ", model expects " + std::to_string(model.input_dim()));
  }
  FeatureMatrix raw = Eigen::Map<const Eigen::RowVectorXd>(x_new.data(), model.input_dim());
  const FeatureMatrix x = model.scaling.apply(raw);
  const Eigen::MatrixXd k_row =
      kernels::serial::gaussian_cross(x, train, model.hyper.ka, model.hyper.kb);  // 1 x D
  const Eigen::VectorXd k = k_row.row(0).transpose();

  // sum_d W_d k_d (x - x_d)^T = (W^T k) x^T - W^T diag(k) X
  const Eigen::MatrixXd wk = model.weights.transpose() * k.asDiagonal();  // M x D
  Eigen::MatrixXd a = wk.rowwise().sum() * x.row(0) - wk * train;
  a *= -2.0 * model.hyper.kb;
  if (!model.scaling.is_identity()) {
    a = a * model.scaling.scale.cwiseInverse().asDiagonal();
  }
  return a;
}

}  // namespace

Eigen::MatrixXd prediction_jacobian(const KernelModel& model, std::span<const double> x_new) {
  return jacobian_with(model, model.kernel_inputs(), x_new);
}

double max_singular_sq(const Eigen::MatrixXd& a) {
  if (a.size() == 0) return 0.0;
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
  const double s = svd.singularValues()(0);
  return s * s;
}

SensitivityReport summarize_lambda(std::vector<double> values, Lobe lobe, PerturbationScope scope) {
  SensitivityReport r;
  r.lobe = lobe;
  r.scope = scope;
  r.per_sample_max_singular_sq = std::move(values);
  const auto& v = r.per_sample_max_singular_sq;
  if (v.empty()) return r;
  double sum = 0.0;
  for (double x : v) sum += x;
  r.lambda_mean = sum / static_cast<double>(v.size());
  double var = 0.0;
  for (double x : v) var += (x - r.lambda_mean) * (x - r.lambda_mean);
  r.lambda_std = std::sqrt(var / static_cast<double>(v.size()));
  return r;
}

SensitivityReport lambda_statistics(const KernelModel& model, const FeatureMatrix& xs,
                                    PerturbationScope scope) {
  if (xs.rows() == 0) throw ArgumentError("lambda statistics need at least one sample");
  const Eigen::Index n = model.input_dim();
  const Eigen::Index l = model.landmark_count;
  if (scope == PerturbationScope::deflated_landmarks && (l <= 0 || 6 * l + 2 != n)) {
    throw ArgumentError("model does not carry the landmark feature layout");
  }
  const FeatureMatrix train = model.kernel_inputs();
  std::vector<double> values(static_cast<std::size_t>(xs.rows()));
  const auto rows = static_cast<std::ptrdiff_t>(xs.rows());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t r = 0; r < rows; ++r) {
    const Eigen::RowVectorXd x = xs.row(r);
    Eigen::MatrixXd a = jacobian_with(model, train, std::span<const double>(x.data(), static_cast<std::size_t>(n)));
    if (scope == PerturbationScope::deflated_landmarks) a = a.middleCols(3 * l, 3 * l).eval();
    values[static_cast<std::size_t>(r)] = max_singular_sq(a);
  }
  return summarize_lambda(std::move(values), model.lobe, scope);
}

}  // namespace pneumodef
