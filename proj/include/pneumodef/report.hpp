#pragma once

// CSV tables written by the command-line tool. Numbers use a fixed format
// so that reruns can be compared byte for byte.

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pneumodef/experiment.hpp"

namespace pneumodef {

// "%.6f"; NaN becomes "nan".
std::string format_number(double v);

// "3-landmark" / "6-landmark" for the named experiment2 prefixes.
std::optional<std::string_view> named_model(Ordering ordering, int landmark_count);

// Per-case rows of one lobe followed by one summary row per method.
struct EvaluationTable {
  std::vector<EvaluationReport> rows;
  std::vector<SummaryRow> summary;
};

EvaluationTable make_evaluation_table(const std::vector<CaseResult>& results);

// Header: kind,case_id,method,lobe,landmark_count,ordering,status,rmse_mm,
// dsc,hd_mm,spacing_mm,rmse_std,dsc_std,hd_std,n_ok,n_degenerate
std::string evaluation_csv(std::span<const EvaluationTable> tables);

// Header: lobe,ordering,landmark_count,named_model,method,n_ok,n_degenerate,
// rmse_mean,rmse_std,dsc_mean,dsc_std,hd_mean,hd_std
std::string landmark_sweep_csv(std::span<const SummaryRow> rows);

// Header: lobe,ordering,landmark_count,training_cases,combinations,
// subsampled,n_ok,rmse_mean,rmse_std
std::string case_sweep_csv(std::span<const SummaryRow> rows);

}  // namespace pneumodef
