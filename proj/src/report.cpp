#include "pneumodef/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace pneumodef {

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::optional<std::string_view> named_model(Ordering ordering, int landmark_count) {
  if (ordering != Ordering::experiment2) return std::nullopt;
  if (landmark_count == 3) return "3-landmark";
  if (landmark_count == 6) return "6-landmark";
  return std::nullopt;
}

EvaluationTable make_evaluation_table(const std::vector<CaseResult>& results) {
  EvaluationTable t;
  std::vector<Method> methods;
  for (const auto& r : results) {
    for (const auto& rep : r.reports) {
      t.rows.push_back(rep);
      if (std::find(methods.begin(), methods.end(), rep.method) == methods.end()) methods.push_back(rep.method);
    }
  }
  std::sort(methods.begin(), methods.end());
  for (Method m : methods) t.summary.push_back(summarize(t.rows, m));
  return t;
}

std::string evaluation_csv(std::span<const EvaluationTable> tables) {
  std::string out =
      "kind,case_id,method,lobe,landmark_count,ordering,status,rmse_mm,dsc,hd_mm,spacing_mm,"
      "rmse_std,dsc_std,hd_std,n_ok,n_degenerate\n";
  for (const auto& t : tables) {
    for (const auto& r : t.rows) {
      out += "case," + r.case_id + "," + std::string(to_string(r.method)) + "," +
             std::string(to_string(r.lobe)) + "," + std::to_string(r.landmark_count) + "," +
             std::string(to_string(r.ordering)) + "," + r.status + "," + format_number(r.rmse_mm) + "," +
             format_number(r.dsc) + "," + format_number(r.hausdorff_mm) + "," +
             format_number(r.spacing_mm) + ",,,,,\n";
    }
    for (const auto& s : t.summary) {
      out += "summary,mean," + std::string(to_string(s.method)) + "," + std::string(to_string(s.lobe)) +
             "," + std::to_string(s.landmark_count) + "," + std::string(to_string(s.ordering)) + "," +
             (s.n_ok > 0 ? "ok" : "degenerate") + "," + format_number(s.rmse_mean) + "," +
             format_number(s.dsc_mean) + "," + format_number(s.hd_mean) + ",," +
             format_number(s.rmse_std) + "," + format_number(s.dsc_std) + "," + format_number(s.hd_std) +
             "," + std::to_string(s.n_ok) + "," + std::to_string(s.n_degenerate) + "\n";
    }
  }
  return out;
}

std::string landmark_sweep_csv(std::span<const SummaryRow> rows) {
  std::string out =
      "lobe,ordering,landmark_count,named_model,method,n_ok,n_degenerate,rmse_mean,rmse_std,dsc_mean,"
      "dsc_std,hd_mean,hd_std\n";
  for (const auto& s : rows) {
    out += std::string(to_string(s.lobe)) + "," + std::string(to_string(s.ordering)) + "," +
           std::to_string(s.landmark_count) + "," +
           std::string(named_model(s.ordering, s.landmark_count).value_or("")) + "," +
           std::string(to_string(s.method)) + "," + std::to_string(s.n_ok) + "," +
           std::to_string(s.n_degenerate) + "," + format_number(s.rmse_mean) + "," +
           format_number(s.rmse_std) + "," + format_number(s.dsc_mean) + "," + format_number(s.dsc_std) +
           "," + format_number(s.hd_mean) + "," + format_number(s.hd_std) + "\n";
  }
  return out;
}

std::string case_sweep_csv(std::span<const SummaryRow> rows) {
  std::string out =
      "lobe,ordering,landmark_count,training_cases,combinations,subsampled,n_ok,rmse_mean,rmse_std\n";
  for (const auto& s : rows) {
    out += std::string(to_string(s.lobe)) + "," + std::string(to_string(s.ordering)) + "," +
           std::to_string(s.landmark_count) + "," + std::to_string(s.training_cases) + "," +
           std::to_string(s.combinations) + "," + (s.subsampled ? "true" : "false") + "," +
           std::to_string(s.n_ok) + "," + format_number(s.rmse_mean) + "," + format_number(s.rmse_std) +
           "\n";
  }
  return out;
}

}  // namespace pneumodef
