#include "pneumodef/dataset.hpp"

#include <algorithm>
#include <set>

#include "pneumodef/errors.hpp"

namespace pneumodef {
namespace {

void check_landmarks(std::span<const int> landmarks, std::size_t vertex_count) {
  if (landmarks.empty()) throw ArgumentError("at least one landmark is required");
  std::set<int> seen;
  for (int l : landmarks) {
    if (l < 0 || static_cast<std::size_t>(l) >= vertex_count) {
      throw ArgumentError("landmark index " + std::to_string(l) + " out of range");
    }
    if (!seen.insert(l).second) {
      throw ArgumentError("duplicate landmark index " + std::to_string(l));
    }
  }
}

std::vector<int> target_vertices(std::size_t vertex_count, std::span<const int> landmarks) {
  std::vector<char> is_landmark(vertex_count, 0);
  for (int l : landmarks) is_landmark[static_cast<std::size_t>(l)] = 1;
  std::vector<int> out;
  out.reserve(vertex_count - landmarks.size());
  for (std::size_t v = 0; v < vertex_count; ++v) {
    if (!is_landmark[v]) out.push_back(static_cast<int>(v));
  }
  return out;
}

std::size_t choose2(std::size_t n) { return n * (n - (n > 0 ? 1 : 0)) / 2; }

}  // namespace

CaseRecord make_case(std::string case_id, Mesh inflated, Mesh deflated) {
  if (!inflated.same_topology(deflated)) {
    throw ArgumentError("case '" + case_id + "': inflated and deflated topology differ");
  }
  CaseRecord c;
  c.case_id = std::move(case_id);
  c.lobe = inflated.lobe();
  c.v_inf = mesh_volume(inflated);
  c.volume_ratio = mesh_volume(deflated) / c.v_inf;
  c.inflated = std::move(inflated);
  c.deflated = std::move(deflated);
  c.sources = {c.case_id};
  return c;
}

CaseObservation observe(const CaseRecord& c, std::span<const int> landmarks) {
  return observe(c, landmarks, c.volume_ratio);
}

CaseObservation observe(const CaseRecord& c, std::span<const int> landmarks,
                        double assumed_volume_ratio) {
  CaseObservation obs;
  obs.inflated = &c.inflated;
  obs.deflated_landmarks = gather(c.deflated.vertices(), landmarks);
  obs.v_inf = c.v_inf;
  obs.volume_ratio = assumed_volume_ratio;
  return obs;
}

void write_features(const CaseObservation& obs, std::span<const int> landmarks, int target_vertex,
                    std::span<double> out) {
  const auto l = landmarks.size();
  if (out.size() != 6 * l + 2 || obs.deflated_landmarks.size() != l) {
    throw ArgumentError("feature buffer or landmark observation has the wrong size");
  }
  const auto& inf = obs.inflated->vertices();
  const Vec3& target = inf[static_cast<std::size_t>(target_vertex)];
  const Vec3 def_center = centroid(obs.deflated_landmarks);
  for (std::size_t k = 0; k < l; ++k) {
    const Vec3 r_inf = target - inf[static_cast<std::size_t>(landmarks[k])];
    const Vec3 r_def = obs.deflated_landmarks[k] - def_center;
    for (int a = 0; a < 3; ++a) {
      out[3 * k + static_cast<std::size_t>(a)] = r_inf[a];
      out[3 * (l + k) + static_cast<std::size_t>(a)] = r_def[a];
    }
  }
  out[6 * l] = obs.v_inf;
  out[6 * l + 1] = obs.volume_ratio;
}

FeatureSample build_features(const CaseRecord& c, std::span<const int> landmarks,
                             int target_vertex) {
  check_landmarks(landmarks, c.inflated.vertex_count());
  if (target_vertex < 0 || static_cast<std::size_t>(target_vertex) >= c.inflated.vertex_count()) {
    throw ArgumentError("target vertex out of range");
  }
  if (std::find(landmarks.begin(), landmarks.end(), target_vertex) != landmarks.end()) {
    throw ArgumentError("target vertex " + std::to_string(target_vertex) + " is a landmark");
  }
  const auto obs = observe(c, landmarks);
  FeatureSample s;
  s.x.resize(feature_dimension(static_cast<int>(landmarks.size())));
  write_features(obs, landmarks, target_vertex, std::span<double>(s.x.data(), static_cast<std::size_t>(s.x.size())));
  s.y = c.deflated.vertex(static_cast<std::size_t>(target_vertex)) - centroid(obs.deflated_landmarks);
  s.case_id = c.case_id;
  s.vertex_index = target_vertex;
  return s;
}

CaseRecord augment_midpoint(const CaseRecord& a, const CaseRecord& b) {
  if (a.lobe != b.lobe) throw ArgumentError("cannot interpolate cases of different lobes");
  if (!a.inflated.same_topology(b.inflated) || !a.deflated.same_topology(b.deflated)) {
    throw ArgumentError("cannot interpolate cases with different topology");
  }
  const auto midpoint = [](const Mesh& p, const Mesh& q) {
    std::vector<Vec3> v(p.vertex_count());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = 0.5 * (p.vertices()[i] + q.vertices()[i]);
    return p.with_vertices(std::move(v));
  };
  CaseRecord c = make_case(a.case_id + "+" + b.case_id, midpoint(a.inflated, b.inflated),
                           midpoint(a.deflated, b.deflated));
  c.is_augmented = true;
  c.sources.clear();
  for (const auto* src : {&a, &b}) {
    for (const auto& s : src->sources) {
      if (std::find(c.sources.begin(), c.sources.end(), s) == c.sources.end()) {
        c.sources.push_back(s);
      }
    }
  }
  return c;
}

std::vector<CaseRecord> expand_cases(const std::vector<CaseRecord>& cases, bool augment) {
  std::vector<CaseRecord> out = cases;
  if (augment) {
    for (std::size_t i = 0; i < cases.size(); ++i) {
      for (std::size_t j = i + 1; j < cases.size(); ++j) {
        out.push_back(augment_midpoint(cases[i], cases[j]));
      }
    }
  }
  return out;
}

FeatureSample SampleSet::sample(Eigen::Index d) const {
  FeatureSample s;
  s.x = x.row(d).transpose();
  s.y = y.row(d).transpose();
  s.case_id = case_ids[static_cast<std::size_t>(d)];
  s.vertex_index = vertex_indices[static_cast<std::size_t>(d)];
  return s;
}

FeatureMatrix observation_matrix(const CaseObservation& obs, std::span<const int> landmarks,
                                 std::vector<int>* vertex_indices) {
  check_landmarks(landmarks, obs.inflated->vertex_count());
  const auto targets = target_vertices(obs.inflated->vertex_count(), landmarks);
  const int dim = feature_dimension(static_cast<int>(landmarks.size()));
  FeatureMatrix x(static_cast<Eigen::Index>(targets.size()), dim);
  const auto n = static_cast<std::ptrdiff_t>(targets.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t r = 0; r < n; ++r) {
    write_features(obs, landmarks, targets[static_cast<std::size_t>(r)],
                   std::span<double>(x.row(r).data(), static_cast<std::size_t>(dim)));
  }
  if (vertex_indices) *vertex_indices = targets;
  return x;
}

SampleSet build_dataset(const std::vector<CaseRecord>& cases, std::span<const int> landmarks,
                        bool augment) {
  if (cases.empty()) throw ArgumentError("build_dataset needs at least one case");
  for (const auto& c : cases) {
    if (c.lobe != cases.front().lobe) throw ArgumentError("cases mix upper and lower lobes");
    if (!c.inflated.same_topology(cases.front().inflated) ||
        !c.deflated.same_topology(cases.front().inflated)) {
      throw ArgumentError("case '" + c.case_id + "' has a different topology");
    }
  }
  check_landmarks(landmarks, cases.front().inflated.vertex_count());

  const auto all = expand_cases(cases, augment);
  const auto per_case = cases.front().inflated.vertex_count() - landmarks.size();
  const int dim = feature_dimension(static_cast<int>(landmarks.size()));
  SampleSet set;
  set.x.resize(static_cast<Eigen::Index>(per_case * all.size()), dim);
  set.y.resize(set.x.rows(), 3);
  set.case_ids.reserve(static_cast<std::size_t>(set.x.rows()));
  set.vertex_indices.reserve(static_cast<std::size_t>(set.x.rows()));

  Eigen::Index row = 0;
  for (const auto& c : all) {
    const auto obs = observe(c, landmarks);
    std::vector<int> targets;
    set.x.middleRows(row, static_cast<Eigen::Index>(per_case)) =
        observation_matrix(obs, landmarks, &targets);
    const Vec3 center = centroid(obs.deflated_landmarks);
    for (std::size_t r = 0; r < targets.size(); ++r) {
      set.y.row(row + static_cast<Eigen::Index>(r)) =
          (c.deflated.vertex(static_cast<std::size_t>(targets[r])) - center).transpose();
      set.case_ids.push_back(c.case_id);
      set.vertex_indices.push_back(targets[r]);
    }
    row += static_cast<Eigen::Index>(per_case);
  }
  return set;
}

LeaveOneOutSplit split_leave_one_out(const std::vector<CaseRecord>& cases,
                                     std::string_view test_id) {
  LeaveOneOutSplit split;
  bool found = false;
  for (const auto& c : cases) {
    if (c.is_augmented) {
      throw ArgumentError("leave-one-out split expects original cases only, got '" + c.case_id +
                          "'");
    }
    if (c.case_id == test_id) {
      split.test = c;
      found = true;
    } else {
      split.train.push_back(c);
    }
  }
  if (!found) throw ArgumentError("unknown test case '" + std::string(test_id) + "'");
  if (split.train.empty()) throw ArgumentError("leave-one-out needs at least two cases");
  return split;
}

std::vector<Vec3> reconstruct_positions(std::span<const Vec3> y_predictions,
                                        std::span<const Vec3> deflated_landmarks) {
  const Vec3 center = centroid(deflated_landmarks);
  std::vector<Vec3> out;
  out.reserve(y_predictions.size());
  for (const auto& y : y_predictions) out.push_back(y + center);
  return out;
}

std::size_t expected_sample_count(std::size_t vertex_count, std::size_t landmark_count,
                                  std::size_t case_count, bool augment) {
  return (vertex_count - landmark_count) * (case_count + (augment ? choose2(case_count) : 0));
}

}  // namespace pneumodef
