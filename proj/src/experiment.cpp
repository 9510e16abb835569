#include "pneumodef/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <set>

#include "pneumodef/baselines.hpp"
#include "pneumodef/errors.hpp"

namespace pneumodef {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<int> active_landmarks(const Cohort& cohort, int count, Ordering ordering) {
  LandmarkConfig cfg;
  cfg.full_indices = cohort.landmark_indices;
  cfg.active_count = count;
  cfg.ordering = ordering;
  cfg.validate(cohort.cases.front().inflated.vertex_count());
  return select_landmarks(cfg);
}

EvaluationReport blank_report(const CaseRecord& test, std::span<const int> landmarks, Method method,
                              const EvaluationSettings& settings) {
  EvaluationReport r;
  r.case_id = test.case_id;
  r.method = method;
  r.lobe = test.lobe;
  r.landmark_count = static_cast<int>(landmarks.size());
  r.ordering = settings.ordering;
  return r;
}

std::size_t grid_size(const HyperGrid& g) { return g.ka.size() * g.kb.size() * g.lambda.size(); }

void mean_std(const std::vector<double>& v, double& mean, double& sd) {
  if (v.empty()) {
    mean = sd = kNaN;
    return;
  }
  mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double acc = 0.0;
  for (double x : v) acc += (x - mean) * (x - mean);
  sd = std::sqrt(acc / static_cast<double>(v.size()));
}

}  // namespace

Cohort make_cohort(std::vector<CaseRecord> cases, const std::array<int, kLandmarkCount>& landmarks) {
  if (cases.empty()) throw ArgumentError("a cohort needs at least one case");
  Cohort c;
  c.lobe = cases.front().lobe;
  for (const auto& r : cases) {
    if (r.lobe != c.lobe) throw ArgumentError("cohort mixes lobes");
    if (!r.inflated.same_topology(cases.front().inflated)) {
      throw ArgumentError("case '" + r.case_id + "' does not share the cohort topology");
    }
  }
  LandmarkConfig cfg;
  cfg.full_indices = landmarks;
  cfg.validate(cases.front().inflated.vertex_count());
  c.cases = std::move(cases);
  c.landmark_indices = landmarks;
  return c;
}

TrainedKernel train_kernel(std::span<const CaseRecord> train, std::span<const int> landmarks,
                           const KernelSettings& settings) {
  if (train.empty()) throw ArgumentError("no training cases");
  const std::vector<CaseRecord> cases(train.begin(), train.end());
  const SampleSet all = build_dataset(cases, landmarks, settings.augment);

  HyperGrid grid = settings.grid;
  if (grid.kb.empty()) {
    const InputScaling sc = InputScaling::fit(all.x, settings.scaling);
    grid.kb = default_grid(sc.apply(all.x)).kb;
  }
  if (grid.ka.empty() || grid.lambda.empty()) throw ArgumentError("hyperparameter grid is empty");

  TrainedKernel out;
  KernelHyperparams best{grid.ka.front(), grid.kb.front(), grid.lambda.front()};
  const int n = static_cast<int>(cases.size());
  if (grid_size(grid) > 1) {
    const int folds = std::min(settings.cv_folds, n);
    if (folds < 2) throw ArgumentError("grid search needs at least two training cases");
    std::vector<CvFold> cv;
    for (int f = 0; f < folds; ++f) {
      std::vector<CaseRecord> fit_side, val_side;
      for (int i = 0; i < n; ++i) (i % folds == f ? val_side : fit_side).push_back(cases[static_cast<std::size_t>(i)]);
      const SampleSet a = build_dataset(fit_side, landmarks, settings.augment);
      const SampleSet b = build_dataset(val_side, landmarks, false);
      cv.push_back(CvFold{a.x, a.y, b.x, b.y});
    }
    const GridSearchResult gs = grid_search(cv, grid, settings.scaling);
    best = gs.best;
    out.search_table = gs.table;
  }
  out.model = fit(all.x, all.y, best, FitOptions{settings.scaling});
  out.model.landmark_count = static_cast<int>(landmarks.size());
  out.model.feature_order_tag = std::string(kFeatureOrderTag);
  out.model.lobe = cases.front().lobe;
  return out;
}

Mesh predict_deflated(const KernelModel& model, const CaseRecord& test, std::span<const int> landmarks,
                      double volume_ratio) {
  const CaseObservation obs = observe(test, landmarks, volume_ratio);
  std::vector<int> targets;
  const FeatureMatrix x = observation_matrix(obs, landmarks, &targets);
  const Eigen::MatrixXd y = predict_batch(model, x);
  std::vector<Vec3> rel(static_cast<std::size_t>(y.rows()));
  for (Eigen::Index r = 0; r < y.rows(); ++r) rel[static_cast<std::size_t>(r)] = y.row(r).transpose();
  const std::vector<Vec3> abs = reconstruct_positions(rel, obs.deflated_landmarks);

  std::vector<Vec3> v = test.inflated.vertices();
  for (std::size_t k = 0; k < targets.size(); ++k) v[static_cast<std::size_t>(targets[k])] = abs[k];
  for (std::size_t k = 0; k < landmarks.size(); ++k) {
    v[static_cast<std::size_t>(landmarks[k])] = obs.deflated_landmarks[k];
  }
  return test.inflated.with_vertices(std::move(v));
}

EvaluationReport score_prediction(const Mesh& predicted, const CaseRecord& test,
                                  std::span<const int> landmarks, Method method,
                                  const EvaluationSettings& settings) {
  EvaluationReport r = blank_report(test, landmarks, method, settings);
  const RmseResult e = rmse(predicted, test.deflated, landmarks);
  r.rmse_mm = e.rmse;
  r.per_vertex_error_mm = e.per_vertex;
  r.hausdorff_mm = hausdorff(predicted, test.deflated);
  if (settings.compute_dsc) {
    const DscResult d = dsc(predicted, test.deflated, settings.dsc_spacing);
    r.dsc = d.dsc;
    r.spacing_mm = d.spacing;
  } else {
    r.dsc = kNaN;
    r.spacing_mm = kNaN;
  }
  return r;
}

EvaluationReport evaluate_baseline(const CaseRecord& test, std::span<const int> landmarks, Method method,
                                   const EvaluationSettings& settings) {
  const std::vector<Vec3> src = gather(test.inflated.vertices(), landmarks);
  const std::vector<Vec3> dst = gather(test.deflated.vertices(), landmarks);
  try {
    Mesh warped;
    if (method == Method::affine) {
      warped = apply_affine(fit_affine(src, dst), test.inflated);
    } else if (method == Method::tps) {
      warped = apply_tps(fit_tps(src, dst), test.inflated);
    } else {
      throw ArgumentError("evaluate_baseline called with the kernel method");
    }
    return score_prediction(warped, test, landmarks, method, settings);
  } catch (const DegenerateConfigurationError&) {
    EvaluationReport r = blank_report(test, landmarks, method, settings);
    r.status = "degenerate";
    r.rmse_mm = r.dsc = r.hausdorff_mm = r.spacing_mm = kNaN;
    return r;
  }
}

std::vector<CaseResult> leave_one_out(const Cohort& cohort, const EvaluationSettings& settings,
                                      bool keep_models) {
  if (settings.methods.empty()) throw ArgumentError("no methods requested");
  const std::vector<int> lm = active_landmarks(cohort, settings.landmark_count, settings.ordering);
  std::vector<Method> methods = settings.methods;
  std::sort(methods.begin(), methods.end());
  methods.erase(std::unique(methods.begin(), methods.end()), methods.end());

  std::vector<CaseResult> out;
  for (const auto& c : cohort.cases) {
    const LeaveOneOutSplit split = split_leave_one_out(cohort.cases, c.case_id);
    CaseResult res;
    for (Method m : methods) {
      if (m == Method::kernel) {
        TrainedKernel tk = train_kernel(split.train, lm, settings.kernel);
        Mesh pred = predict_deflated(tk.model, split.test, lm, settings.volume_ratio);
        res.reports.push_back(score_prediction(pred, split.test, lm, m, settings));
        if (keep_models) {
          res.model = std::move(tk.model);
          res.kernel_prediction = std::move(pred);
        }
      } else {
        res.reports.push_back(evaluate_baseline(split.test, lm, m, settings));
      }
    }
    out.push_back(std::move(res));
  }
  return out;
}

SummaryRow summarize(std::span<const EvaluationReport> rows, Method method) {
  SummaryRow s;
  s.method = method;
  std::vector<double> rm, dc, hd;
  for (const auto& r : rows) {
    if (r.method != method) continue;
    s.lobe = r.lobe;
    s.ordering = r.ordering;
    s.landmark_count = r.landmark_count;
    if (r.ok()) {
      ++s.n_ok;
      rm.push_back(r.rmse_mm);
      dc.push_back(r.dsc);
      hd.push_back(r.hausdorff_mm);
    } else {
      ++s.n_degenerate;
    }
  }
  mean_std(rm, s.rmse_mean, s.rmse_std);
  mean_std(dc, s.dsc_mean, s.dsc_std);
  mean_std(hd, s.hd_mean, s.hd_std);
  return s;
}

std::vector<SummaryRow> sweep_landmarks(const Cohort& cohort, const EvaluationSettings& base,
                                        const SweepLandmarkSettings& sweep) {
  std::vector<SummaryRow> out;
  std::vector<Method> methods = base.methods;
  std::sort(methods.begin(), methods.end());
  methods.erase(std::unique(methods.begin(), methods.end()), methods.end());
  for (Ordering ordering : sweep.orderings) {
    for (int count : sweep.counts) {
      EvaluationSettings s = base;
      s.ordering = ordering;
      s.landmark_count = count;
      std::vector<EvaluationReport> rows;
      for (auto& cr : leave_one_out(cohort, s)) {
        for (auto& r : cr.reports) rows.push_back(std::move(r));
      }
      for (Method m : methods) {
        SummaryRow row = summarize(rows, m);
        row.lobe = cohort.lobe;
        row.ordering = ordering;
        row.landmark_count = count;
        row.training_cases = static_cast<int>(cohort.cases.size()) - 1;
        out.push_back(row);
      }
    }
  }
  return out;
}

std::uint64_t binomial(int n, int k) {
  if (k < 0 || n < 0 || k > n) return 0;
  k = std::min(k, n - k);
  unsigned __int128 r = 1;
  for (int i = 1; i <= k; ++i) {
    r = r * static_cast<unsigned>(n - k + i) / static_cast<unsigned>(i);
    if (r > std::numeric_limits<std::uint64_t>::max()) return std::numeric_limits<std::uint64_t>::max();
  }
  return static_cast<std::uint64_t>(r);
}

std::vector<std::vector<int>> training_combinations(int pool, int c, int max_combinations,
                                                    std::uint64_t seed, bool* subsampled) {
  if (c < 1 || c > pool) throw ArgumentError("training-set size out of range");
  if (max_combinations < 1) throw ArgumentError("max_combinations must be positive");
  std::vector<std::vector<int>> out;
  const std::uint64_t total = binomial(pool, c);
  if (subsampled) *subsampled = total > static_cast<std::uint64_t>(max_combinations);
  if (total <= static_cast<std::uint64_t>(max_combinations)) {
    std::vector<int> idx(static_cast<std::size_t>(c));
    std::iota(idx.begin(), idx.end(), 0);
    while (true) {
      out.push_back(idx);
      int i = c - 1;
      while (i >= 0 && idx[static_cast<std::size_t>(i)] == pool - c + i) --i;
      if (i < 0) break;
      ++idx[static_cast<std::size_t>(i)];
      for (int j = i + 1; j < c; ++j) idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
    }
    return out;
  }
  std::mt19937_64 rng(seed);
  std::set<std::vector<int>> seen;
  std::vector<int> all(static_cast<std::size_t>(pool));
  while (seen.size() < static_cast<std::size_t>(max_combinations)) {
    std::iota(all.begin(), all.end(), 0);
    for (int i = 0; i < c; ++i) {
      const auto span = static_cast<std::uint64_t>(pool - i);
      const int j = i + static_cast<int>(rng() % span);
      std::swap(all[static_cast<std::size_t>(i)], all[static_cast<std::size_t>(j)]);
    }
    std::vector<int> pick(all.begin(), all.begin() + c);
    std::sort(pick.begin(), pick.end());
    seen.insert(std::move(pick));
  }
  out.assign(seen.begin(), seen.end());
  return out;
}

std::vector<SummaryRow> sweep_cases(const Cohort& cohort, const EvaluationSettings& base,
                                    const SweepCaseSettings& sweep) {
  const int n = static_cast<int>(cohort.cases.size());
  if (n < 2) throw ArgumentError("the case sweep needs at least two cases");
  std::vector<int> counts = sweep.training_counts;
  if (counts.empty()) {
    for (int c = 1; c < n; ++c) counts.push_back(c);
  }
  std::vector<SummaryRow> out;
  for (int l : sweep.landmark_counts) {
    EvaluationSettings s = base;
    s.landmark_count = l;
    const std::vector<int> lm = active_landmarks(cohort, l, s.ordering);
    for (int c : counts) {
      if (c < 1 || c > n - 1) throw ArgumentError("training-set size " + std::to_string(c) + " out of range");
      bool sub = false;
      const auto combos = training_combinations(n - 1, c, sweep.max_combinations, sweep.seed, &sub);
      std::vector<EvaluationReport> rows;
      for (int t = 0; t < n; ++t) {
        std::vector<int> pool;
        for (int i = 0; i < n; ++i) {
          if (i != t) pool.push_back(i);
        }
        const CaseRecord& test = cohort.cases[static_cast<std::size_t>(t)];
        for (const auto& combo : combos) {
          std::vector<CaseRecord> train;
          for (int k : combo) train.push_back(cohort.cases[static_cast<std::size_t>(pool[static_cast<std::size_t>(k)])]);
          const TrainedKernel tk = train_kernel(train, lm, s.kernel);
          const Mesh pred = predict_deflated(tk.model, test, lm, s.volume_ratio);
          rows.push_back(score_prediction(pred, test, lm, Method::kernel, s));
        }
      }
      SummaryRow row = summarize(rows, Method::kernel);
      row.lobe = cohort.lobe;
      row.ordering = s.ordering;
      row.landmark_count = l;
      row.training_cases = c;
      row.combinations = static_cast<int>(combos.size());
      row.subsampled = sub;
      out.push_back(row);
    }
  }
  return out;
}

}  // namespace pneumodef
