#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "pneumodef/kernels.hpp"
#include "pneumodef/mesh.hpp"

namespace pneumodef {

// Volume ratio assumed for an unseen case, whose deflated volume cannot be
// measured during surgery.
inline constexpr double kDefaultVolumeRatio = 0.60;

// Feature layout, recorded with every trained model.
inline constexpr std::string_view kFeatureOrderTag = "r_inf[1..l];r_def[1..l];v_inf;vr";

// N = 3l*2 + 2.
constexpr int feature_dimension(int landmark_count) { return 6 * landmark_count + 2; }

// Corresponded inflated/deflated mesh pair of one lobe.
struct CaseRecord {
  std::string case_id;
  Mesh inflated;
  Mesh deflated;
  Lobe lobe = Lobe::upper;
  double v_inf = 0.0;         // mm^3
  double volume_ratio = 1.0;  // deflated / inflated volume
  bool is_augmented = false;
  // Original case ids this record was derived from (itself for originals).
  std::vector<std::string> sources;
};

// Computes volumes and checks topology. Throws ArgumentError when the two
// meshes disagree in topology.
CaseRecord make_case(std::string case_id, Mesh inflated, Mesh deflated);

// What is known about a case at prediction time: the preoperative mesh and
// the measured deflated landmark positions.
struct CaseObservation {
  const Mesh* inflated = nullptr;
  std::vector<Vec3> deflated_landmarks;  // aligned with the landmark index list
  double v_inf = 0.0;
  double volume_ratio = kDefaultVolumeRatio;
};

CaseObservation observe(const CaseRecord& c, std::span<const int> landmarks);
CaseObservation observe(const CaseRecord& c, std::span<const int> landmarks,
                        double assumed_volume_ratio);

struct FeatureSample {
  Eigen::VectorXd x;
  Vec3 y = Vec3::Zero();
  std::string case_id;
  int vertex_index = -1;
};

// Input vector for one target vertex, written into `out` (length 6l+2).
void write_features(const CaseObservation& obs, std::span<const int> landmarks, int target_vertex,
                    std::span<double> out);

// Throws ArgumentError when target_vertex is a landmark or landmarks is empty.
FeatureSample build_features(const CaseRecord& c, std::span<const int> landmarks,
                             int target_vertex);

// Vertex-wise midpoint of two cases with the same lobe and topology.
CaseRecord augment_midpoint(const CaseRecord& a, const CaseRecord& b);

// The originals followed by every pairwise midpoint (i < j), when augment is set.
std::vector<CaseRecord> expand_cases(const std::vector<CaseRecord>& cases, bool augment);

// Samples in matrix form: row d of x and y is one FeatureSample.
struct SampleSet {
  FeatureMatrix x;
  Eigen::MatrixXd y;  // D x 3
  std::vector<std::string> case_ids;
  std::vector<int> vertex_indices;

  Eigen::Index size() const noexcept { return x.rows(); }
  FeatureSample sample(Eigen::Index d) const;
};

// One sample per non-landmark vertex of every case (and midpoint case when
// augment is set): D = (V - l) * (c + C(c,2)). Ordered by case, then vertex.
SampleSet build_dataset(const std::vector<CaseRecord>& cases, std::span<const int> landmarks,
                        bool augment);

// Input rows for every non-landmark vertex of an observed case.
FeatureMatrix observation_matrix(const CaseObservation& obs, std::span<const int> landmarks,
                                 std::vector<int>* vertex_indices = nullptr);

struct LeaveOneOutSplit {
  std::vector<CaseRecord> train;
  CaseRecord test;
};

// Inputs must be original cases only. Throws ArgumentError for an unknown
// id or an empty training side.
LeaveOneOutSplit split_leave_one_out(const std::vector<CaseRecord>& cases,
                                     std::string_view test_id);

// Absolute positions from centroid-relative predictions.
std::vector<Vec3> reconstruct_positions(std::span<const Vec3> y_predictions,
                                        std::span<const Vec3> deflated_landmarks);

std::size_t expected_sample_count(std::size_t vertex_count, std::size_t landmark_count,
                                  std::size_t case_count, bool augment);

}  // namespace pneumodef
