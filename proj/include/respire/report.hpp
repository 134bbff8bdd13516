#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "respire/footprint.hpp"
#include "respire/nested_cv.hpp"

namespace respire::eval {

inline constexpr const char* kReportSchema = "report/1";

struct RunSummary {
  std::string dataset;
  std::string modality;  // C, B or CB
  std::string features;  // handcrafted or emb:<NAME>
  std::string approach;  // fe or ft
  std::uint64_t seed = 0;
  std::size_t rows = 0;
  std::size_t users = 0;
  std::size_t positives = 0;
  std::size_t dropped_rows = 0;
  std::size_t feature_dim = 0;
  int hyperband_r = 0;
  int hyperband_eta = 0;
  int trials = 0;
};

struct ExperimentReport {
  RunSummary run;
  std::vector<CellResult> cells;
  std::vector<footprint::FootprintEntry> footprint;
};

/// Canonical JSON text; identical reports serialize to identical bytes.
std::string report_json(const ExperimentReport& report);
ExperimentReport parse_report(const std::string& json_text);

/// Table shaped as rows of feature kind with Clf / PCA / PR-AUC columns.
std::string summary_table(const ExperimentReport& report);

/// One line per outer fold with the chosen configuration.
std::string hyperparameter_log(const ExperimentReport& report);

/// Footprint rows gathered from one or more reports plus the backbone table.
std::string footprint_table(const std::vector<footprint::FootprintEntry>& entries);

/// Writes report.json, summary.txt and hyperparams.log atomically into `dir`.
void write_report_files(const ExperimentReport& report, const std::filesystem::path& dir);

}  // namespace respire::eval
