// pneumodef: synthetic cohorts, leave-one-out evaluation, sweeps and
// sensitivity reports for landmark-driven deflation estimation.
//
// Exit codes: 0 success, 2 usage, 3 data or geometry, 4 numerical conditioning.

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "pneumodef/baselines.hpp"
#include "pneumodef/errors.hpp"
#include "pneumodef/experiment.hpp"
#include "pneumodef/manifest.hpp"
#include "pneumodef/model_io.hpp"
#include "pneumodef/report.hpp"
#include "pneumodef/sensitivity.hpp"
#include "pneumodef/synthgen.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace pneumodef;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitConditioning = 4;

// Error maps saturate at this per-vertex error.
constexpr double kErrorSaturationMm = 8.5;

// Reads a JSON object of option values for the chosen subcommand. Keys are
// long option names; a nested object keyed by subcommand name applies only
// to that subcommand:
//   {"seed": 7, "evaluate": {"landmarks": 3, "methods": ["kernel"]}}
class JsonConfig : public CLI::Config {
 public:
  explicit JsonConfig(const CLI::App* app) : app_(app) {}

  std::string to_config(const CLI::App*, bool, bool, std::string) const override { return "{}"; }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    json j;
    try {
      input >> j;
    } catch (const json::exception& e) {
      throw CLI::ConversionError(std::string("config file is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw CLI::ConversionError("config file must hold a JSON object");
    const auto subs = app_->get_subcommands();
    if (subs.empty()) return {};
    const std::string active = subs.front()->get_name();
    // Options keep their first value, so section keys go first and win.
    std::vector<CLI::ConfigItem> items;
    std::vector<CLI::ConfigItem> top;
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (!it->is_object()) {
        top.push_back(item(active, it.key(), *it));
      } else if (it.key() == active) {
        for (auto jt = it->begin(); jt != it->end(); ++jt) items.push_back(item(active, jt.key(), *jt));
      } else if (!app_->get_subcommand_no_throw(it.key())) {
        throw CLI::ConversionError("config section '" + it.key() + "' is not a subcommand");
      }
    }
    items.insert(items.end(), top.begin(), top.end());
    return items;
  }

 private:
  static std::string scalar(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    return v.dump();
  }

  static CLI::ConfigItem item(const std::string& sub, const std::string& key, const json& value) {
    if (value.is_object()) throw CLI::ConversionError("config key '" + key + "' must not be an object");
    CLI::ConfigItem out;
    out.parents = {sub};
    out.name = key;
    if (value.is_array()) {
      for (const auto& v : value) out.inputs.push_back(scalar(v));
    } else {
      out.inputs.push_back(scalar(value));
    }
    return out;
  }

  const CLI::App* app_;
};

struct RunConfig {
  fs::path manifest;
  std::string lobe = "both";
  std::string ordering = "experiment2";
  int landmark_count = 6;
  std::vector<std::string> methods{"kernel", "affine", "tps"};
  std::vector<double> ka_grid{1.0};
  std::vector<double> kb_grid{kDefaultKb};
  std::vector<double> lambda_grid{kDefaultLambda};
  bool auto_grid = false;
  int cv_folds = 4;
  bool augment = true;
  std::string scaling = "landmark_blocks";
  fs::path out = "out";
  std::uint64_t seed = 1;
  double dsc_spacing = 0.0;  // 0: default relative spacing
  bool dsc = true;
  double volume_ratio = kDefaultVolumeRatio;
  bool quiet = false;
};

void add_data_options(CLI::App* cmd, RunConfig& cfg) {
  cmd->add_option("--manifest", cfg.manifest, "Cohort manifest (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--lobe", cfg.lobe, "upper, lower or both")
      ->check(CLI::IsMember({"upper", "lower", "both"}))
      ->capture_default_str();
  cmd->add_option("--out", cfg.out, "Output directory")->capture_default_str();
  cmd->add_flag("--quiet", cfg.quiet, "No progress output");
}

void add_kernel_options(CLI::App* cmd, RunConfig& cfg) {
  cmd->add_option("--ka-grid", cfg.ka_grid, "Kernel amplitude values")->capture_default_str();
  cmd->add_option("--kb-grid", cfg.kb_grid, "Kernel width values (1/feature units^2)")->capture_default_str();
  cmd->add_option("--lambda-grid", cfg.lambda_grid, "Ridge values")->capture_default_str();
  cmd->add_flag("--auto-grid", cfg.auto_grid,
                "Search kb over the median-distance grid and lambda over 1e-4..1e-1");
  cmd->add_option("--cv-folds", cfg.cv_folds, "Case-level folds for the grid search")
      ->check(CLI::Range(2, 100))
      ->capture_default_str();
  cmd->add_flag("--augment,!--no-augment", cfg.augment, "Add pairwise midpoint cases to training")
      ->capture_default_str();
  cmd->add_option("--scaling", cfg.scaling, "Input scaling before the kernel")
      ->check(CLI::IsMember({"none", "standardize", "landmark_blocks"}))
      ->capture_default_str();
  cmd->add_option("--volume-ratio", cfg.volume_ratio, "Volume ratio assumed for the test case")
      ->check(CLI::Range(0.01, 1.0))
      ->capture_default_str();
}

void add_eval_options(CLI::App* cmd, RunConfig& cfg, bool with_count, bool with_methods) {
  cmd->add_option("--ordering", cfg.ordering, "Landmark activation order")
      ->check(CLI::IsMember({"experiment1", "experiment2"}))
      ->capture_default_str();
  if (with_count) {
    cmd->add_option("--landmarks", cfg.landmark_count, "Active landmark count")
        ->check(CLI::Range(1, kLandmarkCount))
        ->capture_default_str();
  }
  if (with_methods) {
    cmd->add_option("--methods", cfg.methods, "kernel, affine, tps")
        ->check(CLI::IsMember({"kernel", "affine", "tps"}))
        ->delimiter(',')
        ->capture_default_str();
    cmd->add_option("--dsc-spacing", cfg.dsc_spacing, "Voxel spacing for DSC in mm (default: diagonal/200)")
        ->check(CLI::NonNegativeNumber);
    cmd->add_flag("--dsc,!--no-dsc", cfg.dsc, "Compute DSC")->capture_default_str();
  }
  add_kernel_options(cmd, cfg);
}

EvaluationSettings evaluation_settings(const RunConfig& cfg) {
  EvaluationSettings s;
  s.methods.clear();
  for (const auto& m : cfg.methods) s.methods.push_back(method_from_string(m));
  if (s.methods.empty()) throw ArgumentError("at least one method is required");
  s.landmark_count = cfg.landmark_count;
  s.ordering = ordering_from_string(cfg.ordering);
  s.volume_ratio = cfg.volume_ratio;
  s.compute_dsc = cfg.dsc;
  if (cfg.dsc_spacing > 0.0) s.dsc_spacing = cfg.dsc_spacing;
  s.kernel.scaling = feature_scaling_from_string(cfg.scaling);
  s.kernel.augment = cfg.augment;
  s.kernel.cv_folds = cfg.cv_folds;
  s.kernel.grid.ka = cfg.ka_grid;
  s.kernel.grid.kb = cfg.kb_grid;
  s.kernel.grid.lambda = cfg.lambda_grid;
  if (cfg.auto_grid) {
    s.kernel.grid.kb.clear();
    s.kernel.grid.lambda = HyperGrid{}.lambda;
  }
  for (double v : s.kernel.grid.ka) KernelHyperparams{v, 1.0, 0.0}.validate();
  for (double v : s.kernel.grid.kb) KernelHyperparams{1.0, v, 0.0}.validate();
  for (double v : s.kernel.grid.lambda) KernelHyperparams{1.0, 1.0, v}.validate();
  return s;
}

std::vector<Lobe> lobes_of(const std::string& filter) {
  if (filter == "both") return {Lobe::upper, Lobe::lower};
  return {lobe_from_string(filter)};
}

void log(const RunConfig& cfg, const std::string& msg) {
  if (!cfg.quiet) std::cerr << msg << std::endl;
}

// Cohorts of every requested lobe present in the manifest.
std::vector<Cohort> load_cohorts(const RunConfig& cfg) {
  const Manifest manifest = read_manifest(cfg.manifest);
  std::vector<Cohort> out;
  for (Lobe lobe : lobes_of(cfg.lobe)) {
    auto loaded = load_cases(manifest, lobe);
    if (loaded.empty()) {
      if (cfg.lobe != "both") throw FormatError("manifest has no " + std::string(to_string(lobe)) + " cases", 0);
      continue;
    }
    std::vector<CaseRecord> records;
    for (auto& c : loaded) {
      if (c.record.is_augmented) continue;
      if (c.landmark_indices != loaded.front().landmark_indices) {
        throw FormatError("case '" + c.record.case_id + "' numbers its landmarks differently", 0);
      }
      records.push_back(std::move(c.record));
    }
    std::sort(records.begin(), records.end(),
              [](const CaseRecord& a, const CaseRecord& b) { return a.case_id < b.case_id; });
    out.push_back(make_cohort(std::move(records), loaded.front().landmark_indices));
  }
  if (out.empty()) throw FormatError("manifest has no cases for the requested lobes", 0);
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

std::string iso_time(std::chrono::system_clock::time_point t) {
  const std::time_t tt = std::chrono::system_clock::to_time_t(t);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json hyper_json(const KernelHyperparams& h) { return {{"ka", h.ka}, {"kb", h.kb}, {"lambda", h.lambda}}; }

json settings_json(const RunConfig& cfg) {
  return {{"manifest", cfg.manifest.string()},
          {"lobe", cfg.lobe},
          {"ordering", cfg.ordering},
          {"landmarks", cfg.landmark_count},
          {"methods", cfg.methods},
          {"ka_grid", cfg.ka_grid},
          {"kb_grid", cfg.auto_grid ? json("auto") : json(cfg.kb_grid)},
          {"lambda_grid", cfg.auto_grid ? json(HyperGrid{}.lambda) : json(cfg.lambda_grid)},
          {"cv_folds", cfg.cv_folds},
          {"augment", cfg.augment},
          {"scaling", cfg.scaling},
          {"volume_ratio", cfg.volume_ratio},
          {"dsc", cfg.dsc},
          {"dsc_spacing", cfg.dsc_spacing > 0.0 ? json(cfg.dsc_spacing) : json("diagonal/200")},
          {"seed", cfg.seed}};
}

// Timestamps live here only, so every other output is reproducible.
void write_metadata(const fs::path& dir, const std::string& command, const json& settings,
                    std::chrono::system_clock::time_point start, const json& extra = json::object()) {
  const auto end = std::chrono::system_clock::now();
  json j = {{"command", command},
            {"settings", settings},
            {"started", iso_time(start)},
            {"finished", iso_time(end)},
            {"elapsed_s", std::chrono::duration<double>(end - start).count()}};
  j.update(extra);
  write_text(dir / "run_metadata.json", j.dump(2) + "\n");
}

std::vector<double> error_scalars(const std::vector<double>& per_vertex) {
  std::vector<double> s;
  s.reserve(per_vertex.size());
  for (double e : per_vertex) s.push_back(std::min(e / kErrorSaturationMm, 1.0));
  return s;
}

std::vector<int> active(const Cohort& cohort, int count, Ordering ordering) {
  LandmarkConfig lc;
  lc.full_indices = cohort.landmark_indices;
  lc.active_count = count;
  lc.ordering = ordering;
  return select_landmarks(lc);
}

// ---- synth -----------------------------------------------------------------

struct SynthConfig {
  std::uint64_t seed = 1;
  int cases = 9;
  fs::path out = "cohort";
  std::string lobe = "both";
  int vertices = 400;
  double shape_perturbation = -1.0;  // < 0: lobe default
  double bend_strength = -1.0;
  double target_volume_ratio = kDefaultVolumeRatio;
  double case_variation = -1.0;
  bool quiet = false;
};

int cmd_synth(const SynthConfig& sc) {
  const auto start = std::chrono::system_clock::now();
  std::vector<SyntheticCase> all;
  json generator = json::object();
  for (Lobe lobe : lobes_of(sc.lobe)) {
    GeneratorParams p = default_params(lobe, sc.seed);
    p.vertex_count = sc.vertices;
    p.target_volume_ratio = sc.target_volume_ratio;
    if (sc.shape_perturbation >= 0.0) p.shape_perturbation = sc.shape_perturbation;
    if (sc.bend_strength >= 0.0) p.bend_strength = sc.bend_strength;
    if (sc.case_variation >= 0.0) p.case_variation = sc.case_variation;
    for (auto& c : generate_cohort(p, sc.cases)) all.push_back(std::move(c));
    generator[std::string(to_string(lobe))] = {
        {"seed", p.seed},
        {"vertex_count", p.vertex_count},
        {"base_radii", {p.base_radii.x(), p.base_radii.y(), p.base_radii.z()}},
        {"shape_perturbation", p.shape_perturbation},
        {"target_volume_ratio", p.target_volume_ratio},
        {"bend_strength", p.bend_strength},
        {"fissure_axis", {p.fissure_axis.x(), p.fissure_axis.y(), p.fissure_axis.z()}},
        {"case_variation", p.case_variation},
        {"cases", sc.cases}};
  }
  const fs::path manifest = write_cohort(all, sc.out, generator.dump());
  if (!sc.quiet) std::cerr << "wrote " << all.size() << " case pairs\n";
  std::cout << manifest.string() << "\n";
  write_metadata(sc.out, "synth",
                 {{"seed", sc.seed}, {"cases", sc.cases}, {"lobe", sc.lobe}, {"vertices", sc.vertices}}, start);
  return 0;
}

// ---- evaluate --------------------------------------------------------------

json report_json(const EvaluationReport& r) {
  return {{"method", to_string(r.method)}, {"status", r.status},        {"rmse_mm", r.rmse_mm},
          {"dsc", r.dsc},                   {"hd_mm", r.hausdorff_mm}, {"spacing_mm", r.spacing_mm}};
}

int cmd_evaluate(const RunConfig& cfg, bool save_models) {
  const auto start = std::chrono::system_clock::now();
  const EvaluationSettings settings = evaluation_settings(cfg);
  const auto cohorts = load_cohorts(cfg);
  fs::create_directories(cfg.out / "cases");
  fs::create_directories(cfg.out / "error_maps");
  if (save_models) fs::create_directories(cfg.out / "models");

  std::vector<EvaluationTable> tables;
  for (const Cohort& cohort : cohorts) {
    const std::string lobe(to_string(cohort.lobe));
    log(cfg, "evaluating " + lobe + " lobe, " + std::to_string(cohort.cases.size()) + " cases");
    const auto results = leave_one_out(cohort, settings, true);
    const auto lm = active(cohort, settings.landmark_count, settings.ordering);

    for (std::size_t i = 0; i < results.size(); ++i) {
      const CaseRecord& test = cohort.cases[i];
      const CaseResult& r = results[i];
      json cj = {{"case_id", test.case_id},
                 {"lobe", lobe},
                 {"landmark_count", settings.landmark_count},
                 {"ordering", to_string(settings.ordering)},
                 {"landmark_vertices", lm},
                 {"assumed_volume_ratio", settings.volume_ratio},
                 {"measured_volume_ratio", test.volume_ratio},
                 {"reports", json::array()}};
      for (const auto& rep : r.reports) {
        cj["reports"].push_back(report_json(rep));
        if (!rep.ok()) continue;
        const std::string stem = test.case_id + "_" + lobe + "_" + std::string(to_string(rep.method));
        Mesh predicted;
        if (rep.method == Method::kernel) {
          predicted = *r.kernel_prediction;
        } else {
          const auto src = gather(test.inflated.vertices(), lm);
          const auto dst = gather(test.deflated.vertices(), lm);
          predicted = rep.method == Method::affine ? apply_affine(fit_affine(src, dst), test.inflated)
                                                   : apply_tps(fit_tps(src, dst), test.inflated);
        }
        save_ply(predicted, cfg.out / "error_maps" / (stem + "_error.ply"),
                 std::span<const double>(error_scalars(rep.per_vertex_error_mm)));
      }
      if (r.model) {
        cj["kernel"] = {{"hyper", hyper_json(r.model->hyper)},
                        {"training_samples", r.model->train_x.rows()},
                        {"scaling", cfg.scaling}};
        if (save_models) save_model(*r.model, cfg.out / "models" / (test.case_id + "_" + lobe + ".json"));
      }
      write_text(cfg.out / "cases" / (test.case_id + "_" + lobe + ".json"), cj.dump(2) + "\n");
    }
    tables.push_back(make_evaluation_table(results));
    for (const auto& s : tables.back().summary) {
      log(cfg, "  " + std::string(to_string(s.method)) + ": rmse " + format_number(s.rmse_mean) + " mm, dsc " +
                   format_number(s.dsc_mean) + ", hd " + format_number(s.hd_mean) + " mm, degenerate " +
                   std::to_string(s.n_degenerate));
    }
  }
  write_text(cfg.out / "results.csv", evaluation_csv(tables));
  write_metadata(cfg.out, "evaluate", settings_json(cfg), start,
                 {{"error_map_saturation_mm", kErrorSaturationMm}});
  return 0;
}

// ---- sweeps ----------------------------------------------------------------

int cmd_sweep_landmarks(const RunConfig& cfg, const std::vector<std::string>& orderings,
                        const std::vector<int>& counts) {
  const auto start = std::chrono::system_clock::now();
  EvaluationSettings settings = evaluation_settings(cfg);
  SweepLandmarkSettings sweep;
  sweep.orderings.clear();
  for (const auto& o : orderings) sweep.orderings.push_back(ordering_from_string(o));
  sweep.counts = counts;
  fs::create_directories(cfg.out);
  std::vector<SummaryRow> rows;
  for (const Cohort& cohort : load_cohorts(cfg)) {
    log(cfg, "landmark sweep, " + std::string(to_string(cohort.lobe)) + " lobe");
    for (auto& r : sweep_landmarks(cohort, settings, sweep)) rows.push_back(r);
  }
  write_text(cfg.out / "sweep_landmarks.csv", landmark_sweep_csv(rows));
  json s = settings_json(cfg);
  s["orderings"] = orderings;
  s["counts"] = counts;
  write_metadata(cfg.out, "sweep-landmarks", s, start);
  return 0;
}

int cmd_sweep_cases(const RunConfig& cfg, const std::vector<int>& training_counts,
                    const std::vector<int>& landmark_counts, int max_combinations) {
  const auto start = std::chrono::system_clock::now();
  EvaluationSettings settings = evaluation_settings(cfg);
  settings.methods = {Method::kernel};
  settings.compute_dsc = false;
  SweepCaseSettings sweep;
  sweep.training_counts = training_counts;
  sweep.landmark_counts = landmark_counts;
  sweep.max_combinations = max_combinations;
  sweep.seed = cfg.seed;
  fs::create_directories(cfg.out);
  std::vector<SummaryRow> rows;
  json subsampling = json::array();
  for (const Cohort& cohort : load_cohorts(cfg)) {
    log(cfg, "case sweep, " + std::string(to_string(cohort.lobe)) + " lobe");
    for (auto& r : sweep_cases(cohort, settings, sweep)) {
      if (r.subsampled) {
        const int pool = static_cast<int>(cohort.cases.size()) - 1;
        subsampling.push_back({{"lobe", to_string(r.lobe)},
                               {"landmark_count", r.landmark_count},
                               {"training_cases", r.training_cases},
                               {"possible_combinations", binomial(pool, r.training_cases)},
                               {"evaluated_combinations", r.combinations}});
      }
      rows.push_back(r);
    }
  }
  write_text(cfg.out / "sweep_cases.csv", case_sweep_csv(rows));
  json s = settings_json(cfg);
  s["training_counts"] = training_counts;
  s["landmark_counts"] = landmark_counts;
  s["max_combinations"] = max_combinations;
  write_metadata(cfg.out, "sweep-cases", s, start,
                 {{"subsampling",
                   {{"policy", "exhaustive when C(n-1, c) <= max_combinations, otherwise a seeded "
                               "uniform sample of distinct training sets per test case"},
                    {"seed", cfg.seed},
                    {"subsampled", subsampling}}}});
  return 0;
}

// ---- sensitivity -----------------------------------------------------------

int cmd_sensitivity(const RunConfig& cfg, const std::string& scope_name, bool write_ply) {
  const auto start = std::chrono::system_clock::now();
  EvaluationSettings settings = evaluation_settings(cfg);
  settings.methods = {Method::kernel};
  settings.compute_dsc = false;
  std::vector<PerturbationScope> scopes;
  if (scope_name == "full" || scope_name == "both") scopes.push_back(PerturbationScope::full);
  if (scope_name == "deflated-landmarks" || scope_name == "both") {
    scopes.push_back(PerturbationScope::deflated_landmarks);
  }
  fs::create_directories(cfg.out);
  if (write_ply) fs::create_directories(cfg.out / "sensitivity_maps");

  json reports = json::array();
  for (const Cohort& cohort : load_cohorts(cfg)) {
    const std::string lobe(to_string(cohort.lobe));
    log(cfg, "sensitivity, " + lobe + " lobe");
    const auto results = leave_one_out(cohort, settings, true);
    const auto lm = active(cohort, settings.landmark_count, settings.ordering);
    for (PerturbationScope scope : scopes) {
      std::vector<double> values;
      std::vector<std::vector<double>> per_case;
      std::vector<std::vector<int>> per_case_vertices;
      for (std::size_t i = 0; i < results.size(); ++i) {
        const CaseObservation obs = observe(cohort.cases[i], lm, settings.volume_ratio);
        std::vector<int> targets;
        const FeatureMatrix xs = observation_matrix(obs, lm, &targets);
        const SensitivityReport r = lambda_statistics(*results[i].model, xs, scope);
        values.insert(values.end(), r.per_sample_max_singular_sq.begin(), r.per_sample_max_singular_sq.end());
        per_case.push_back(r.per_sample_max_singular_sq);
        per_case_vertices.push_back(std::move(targets));
      }
      const SensitivityReport summary = summarize_lambda(values, cohort.lobe, scope);
      const std::string scope_str = scope == PerturbationScope::full ? "full" : "deflated-landmarks";
      json cases = json::array();
      for (std::size_t i = 0; i < results.size(); ++i) {
        const SensitivityReport cr = summarize_lambda(per_case[i], cohort.lobe, scope);
        cases.push_back({{"case_id", cohort.cases[i].case_id},
                         {"hyper", hyper_json(results[i].model->hyper)},
                         {"lambda_mean", cr.lambda_mean},
                         {"lambda_std", cr.lambda_std},
                         {"lambda_max", *std::max_element(per_case[i].begin(), per_case[i].end())}});
      }
      reports.push_back({{"lobe", lobe},
                         {"scope", scope_str},
                         {"landmark_count", settings.landmark_count},
                         {"samples", values.size()},
                         {"pooling", "per vertex over all leave-one-out test cases"},
                         {"lambda_mean", summary.lambda_mean},
                         {"lambda_std", summary.lambda_std},
                         {"lambda_max", *std::max_element(values.begin(), values.end())},
                         {"cases", cases}});
      log(cfg, "  " + scope_str + ": lambda " + format_number(summary.lambda_mean) + " +- " +
                   format_number(summary.lambda_std));

      if (write_ply) {
        double top = 0.0;
        for (double v : values) top = std::max(top, std::sqrt(v));
        for (std::size_t i = 0; i < results.size(); ++i) {
          std::vector<double> s(cohort.cases[i].inflated.vertex_count(), 0.0);
          for (std::size_t k = 0; k < per_case_vertices[i].size(); ++k) {
            s[static_cast<std::size_t>(per_case_vertices[i][k])] = top > 0.0 ? std::sqrt(per_case[i][k]) / top : 0.0;
          }
          save_ply(*results[i].kernel_prediction,
                   cfg.out / "sensitivity_maps" / (cohort.cases[i].case_id + "_" + lobe + "_" + scope_str + ".ply"),
                   std::span<const double>(s));
        }
      }
    }
  }
  write_text(cfg.out / "sensitivity.json", json({{"reports", reports}}).dump(2) + "\n");
  json s = settings_json(cfg);
  s["scope"] = scope_name;
  write_metadata(cfg.out, "sensitivity", s, start);
  return 0;
}

int run(int argc, char** argv) {
  CLI::App app{"Landmark-driven estimation of deflated lung lobe shape"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "pneumodef 1.0.0");
  app.config_formatter(std::make_shared<JsonConfig>(&app));
  app.set_config("--config", "", "JSON file with option values (command-line flags take precedence)");
  app.allow_config_extras(CLI::config_extras_mode::error);

  SynthConfig sc;
  auto* synth = app.add_subcommand("synth", "Write a seeded synthetic cohort");
  synth->fallthrough();
  synth->add_option("--seed", sc.seed, "Generator seed")->capture_default_str();
  synth->add_option("--cases", sc.cases, "Cases per lobe")->check(CLI::Range(1, 1000))->capture_default_str();
  synth->add_option("--out", sc.out, "Output directory")->capture_default_str();
  synth->add_option("--lobe", sc.lobe, "upper, lower or both")
      ->check(CLI::IsMember({"upper", "lower", "both"}))
      ->capture_default_str();
  synth->add_option("--vertices", sc.vertices, "Vertices per mesh")->check(CLI::Range(50, 100000))->capture_default_str();
  synth->add_option("--shape-perturbation", sc.shape_perturbation, "Radial noise amplitude")->check(CLI::Range(0.0, 0.3));
  synth->add_option("--bend-strength", sc.bend_strength, "Bend of the deflation field")->check(CLI::Range(0.0, 0.5));
  synth->add_option("--volume-ratio", sc.target_volume_ratio, "Deflated / inflated volume")
      ->check(CLI::Range(0.01, 1.0))
      ->capture_default_str();
  synth->add_option("--case-variation", sc.case_variation, "Per-case jitter of shape parameters")
      ->check(CLI::Range(0.0, 0.3));
  synth->add_flag("--quiet", sc.quiet, "No progress output");

  RunConfig ec;
  bool save_models = false;
  auto* evaluate = app.add_subcommand("evaluate", "Leave-one-out evaluation of kernel, affine and TPS");
  evaluate->fallthrough();
  add_data_options(evaluate, ec);
  add_eval_options(evaluate, ec, true, true);
  evaluate->add_flag("--save-models", save_models, "Write each fold's kernel model as JSON");

  RunConfig lc;
  std::vector<std::string> orderings{"experiment1", "experiment2"};
  std::vector<int> counts{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12};
  auto* sweep_l = app.add_subcommand("sweep-landmarks", "Evaluate every landmark count for both orderings");
  sweep_l->fallthrough();
  add_data_options(sweep_l, lc);
  add_eval_options(sweep_l, lc, false, true);
  sweep_l->add_option("--orderings", orderings, "Orderings to sweep")
      ->check(CLI::IsMember({"experiment1", "experiment2"}))
      ->delimiter(',')
      ->capture_default_str();
  sweep_l->add_option("--counts", counts, "Landmark counts")
      ->check(CLI::Range(1, kLandmarkCount))
      ->delimiter(',')
      ->capture_default_str();

  RunConfig cc;
  std::vector<int> training_counts;
  std::vector<int> landmark_counts{3, 6};
  int max_combinations = 200;
  auto* sweep_c = app.add_subcommand("sweep-cases", "Kernel error against the number of training cases");
  sweep_c->fallthrough();
  add_data_options(sweep_c, cc);
  add_eval_options(sweep_c, cc, false, false);
  sweep_c->add_option("--training-counts", training_counts, "Training-set sizes (default 1..n-1)")
      ->check(CLI::PositiveNumber)
      ->delimiter(',');
  sweep_c->add_option("--landmark-counts", landmark_counts, "Landmark counts")
      ->check(CLI::Range(1, kLandmarkCount))
      ->delimiter(',')
      ->capture_default_str();
  sweep_c->add_option("--max-combinations", max_combinations, "Subsample above this many training sets")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sweep_c->add_option("--seed", cc.seed, "Subsampling seed")->capture_default_str();

  RunConfig sv;
  std::string scope = "both";
  bool sens_ply = false;
  auto* sens = app.add_subcommand("sensitivity", "First-order sensitivity of predictions to input error");
  sens->fallthrough();
  add_data_options(sens, sv);
  add_eval_options(sens, sv, true, false);
  sens->add_option("--scope", scope, "Perturbed inputs: full, deflated-landmarks or both")
      ->check(CLI::IsMember({"full", "deflated-landmarks", "both"}))
      ->capture_default_str();
  sens->add_flag("--ply", sens_ply, "Write per-vertex sqrt(Lambda) color maps");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  if (synth->parsed()) return cmd_synth(sc);
  if (evaluate->parsed()) return cmd_evaluate(ec, save_models);
  if (sweep_l->parsed()) return cmd_sweep_landmarks(lc, orderings, counts);
  if (sweep_c->parsed()) return cmd_sweep_cases(cc, training_counts, landmark_counts, max_combinations);
  if (sens->parsed()) return cmd_sensitivity(sv, scope, sens_ply);
  return kExitUsage;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const ConditioningError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConditioning;
  } catch (const ArgumentError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
