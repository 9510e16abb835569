#pragma once

// Leave-one-out evaluation and the landmark / training-size sweeps.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pneumodef/dataset.hpp"
#include "pneumodef/krr.hpp"
#include "pneumodef/landmarks.hpp"
#include "pneumodef/metrics.hpp"

namespace pneumodef {

// Hyperparameters used when no search is requested. Chosen by grouped
// cross-validation on a separate synthetic cohort (generator seed 101).
inline constexpr double kDefaultKb = 0.02;
inline constexpr double kDefaultLambda = 0.01;

inline HyperGrid fixed_grid(double kb = kDefaultKb, double lambda = kDefaultLambda) {
  HyperGrid g;
  g.ka = {1.0};
  g.kb = {kb};
  g.lambda = {lambda};
  return g;
}

struct KernelSettings {
  FeatureScaling scaling = FeatureScaling::landmark_blocks;
  bool augment = true;
  // A grid with a single point skips the search. Empty kb means the default
  // kb grid for the training inputs.
  HyperGrid grid = fixed_grid();
  int cv_folds = 4;
};

struct EvaluationSettings {
  std::vector<Method> methods{Method::kernel, Method::affine, Method::tps};
  int landmark_count = 6;
  Ordering ordering = Ordering::experiment2;
  double volume_ratio = kDefaultVolumeRatio;  // assumed for the test case
  std::optional<double> dsc_spacing;
  bool compute_dsc = true;
  KernelSettings kernel;
};

// All cases of one lobe, sharing one topology and landmark numbering.
struct Cohort {
  Lobe lobe = Lobe::upper;
  std::vector<CaseRecord> cases;
  std::array<int, kLandmarkCount> landmark_indices{};  // by landmark number
};

// Throws ArgumentError when lobes, topologies or landmark numbering differ.
Cohort make_cohort(std::vector<CaseRecord> cases, const std::array<int, kLandmarkCount>& landmarks);

struct TrainedKernel {
  KernelModel model;
  std::vector<CvRow> search_table;  // empty when the grid had a single point
};

// Builds the (optionally augmented) training set from `train` and fits.
// Grid search folds never split a source case.
TrainedKernel train_kernel(std::span<const CaseRecord> train, std::span<const int> landmarks,
                           const KernelSettings& settings);

// Deflated mesh of `test` predicted from its inflated mesh and the observed
// deflated landmarks. Landmark vertices take their observed positions.
Mesh predict_deflated(const KernelModel& model, const CaseRecord& test, std::span<const int> landmarks,
                      double volume_ratio);

// Scores a predicted mesh against the test case; landmarks are left out of
// the RMSE.
EvaluationReport score_prediction(const Mesh& predicted, const CaseRecord& test,
                                  std::span<const int> landmarks, Method method,
                                  const EvaluationSettings& settings);

// Affine or TPS warp of the inflated mesh driven by the landmarks. A
// degenerate configuration yields status "degenerate" and NaN metrics.
EvaluationReport evaluate_baseline(const CaseRecord& test, std::span<const int> landmarks, Method method,
                                   const EvaluationSettings& settings);

struct CaseResult {
  std::vector<EvaluationReport> reports;  // one per requested method
  std::optional<KernelModel> model;       // the kernel model trained for this fold
  std::optional<Mesh> kernel_prediction;
};

// Every original case is the test case once; augmented cases are built from
// the training side only. Rows come back ordered by case, then method.
std::vector<CaseResult> leave_one_out(const Cohort& cohort, const EvaluationSettings& settings,
                                      bool keep_models = false);

struct SummaryRow {
  Method method = Method::kernel;
  Lobe lobe = Lobe::upper;
  Ordering ordering = Ordering::experiment2;
  int landmark_count = 0;
  int training_cases = 0;  // case sweep only
  int n_ok = 0;
  int n_degenerate = 0;
  double rmse_mean = 0.0, rmse_std = 0.0;
  double dsc_mean = 0.0, dsc_std = 0.0;
  double hd_mean = 0.0, hd_std = 0.0;
  int combinations = 0;  // case sweep: training sets evaluated per test case
  bool subsampled = false;
};

// Mean and population standard deviation over rows with status "ok";
// NaN when none.
SummaryRow summarize(std::span<const EvaluationReport> rows, Method method);

struct SweepLandmarkSettings {
  std::vector<Ordering> orderings{Ordering::experiment1, Ordering::experiment2};
  std::vector<int> counts{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12};
};

// One summary row per (ordering, count, method).
std::vector<SummaryRow> sweep_landmarks(const Cohort& cohort, const EvaluationSettings& base,
                                        const SweepLandmarkSettings& sweep);

struct SweepCaseSettings {
  std::vector<int> training_counts;  // empty means 1..n-1
  std::vector<int> landmark_counts{3, 6};
  int max_combinations = 200;
  std::uint64_t seed = 1;
};

// Training subsets of size c drawn from the cases other than the test case;
// exhaustive when C(n-1, c) <= max_combinations, else a seeded subsample.
std::vector<std::vector<int>> training_combinations(int pool, int c, int max_combinations,
                                                    std::uint64_t seed, bool* subsampled = nullptr);

// Kernel RMSE averaged over test cases and training subsets, one row per
// (landmark count, training-set size).
std::vector<SummaryRow> sweep_cases(const Cohort& cohort, const EvaluationSettings& base,
                                    const SweepCaseSettings& sweep);

// Binomial coefficient, saturating at UINT64_MAX.
std::uint64_t binomial(int n, int k);

}  // namespace pneumodef
