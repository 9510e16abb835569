#pragma once

// First-order propagation of input measurement error through a trained
// kernel model: dy = A dx with A the Jacobian of the prediction.

#include <span>
#include <vector>

#include <Eigen/Core>

#include "pneumodef/krr.hpp"

namespace pneumodef {

// M x N Jacobian with respect to the raw (unscaled) input:
//   A(m,n) = sum_d W(d,m) * dK(x, x_d)/dx_n,
//   dK/dx_n = -2 kb (x_n - x_d,n) K(x, x_d)   (in the kernel's input space).
Eigen::MatrixXd prediction_jacobian(const KernelModel& model, std::span<const double> x_new);

enum class PerturbationScope {
  full,                // every input component
  deflated_landmarks,  // only the r_def block (intraoperative measurements)
};

struct SensitivityReport {
  // Largest eigenvalue of A^T A per sample (= largest squared singular value).
  std::vector<double> per_sample_max_singular_sq;
  double lambda_mean = 0.0;
  double lambda_std = 0.0;  // population standard deviation
  Lobe lobe = Lobe::upper;
  PerturbationScope scope = PerturbationScope::full;
};

double max_singular_sq(const Eigen::MatrixXd& a);

// Rows of `xs` are test inputs. Throws ArgumentError when xs is empty.
SensitivityReport lambda_statistics(const KernelModel& model, const FeatureMatrix& xs,
                                    PerturbationScope scope = PerturbationScope::full);

// Mean and population standard deviation of a list of Lambda values.
SensitivityReport summarize_lambda(std::vector<double> values, Lobe lobe, PerturbationScope scope);

}  // namespace pneumodef
