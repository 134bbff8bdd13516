#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "respire/feature_table.hpp"
#include "respire/report.hpp"

namespace respire::pipeline {

inline constexpr double kFailureBudget = 0.05;

struct RowFailure {
  int line = 0;
  std::string sample_id;
  std::string message;
};

struct ExtractionResult {
  eval::FeatureTable table;
  std::vector<RowFailure> failures;
};

/// Hand-crafted features for every manifest row, in manifest order. Rows that fail to decode
/// are skipped and reported; more than 5% failures throws kCorruptFile naming the first ones.
ExtractionResult extract_features(const eval::Manifest& manifest, unsigned workers);

/// Pools every *.emb file of `dir` (sorted by file name). Throws kNoInput for an empty
/// directory and kDimensionMismatch when files disagree on backbone or dimension.
eval::FeatureTable pool_directory(const std::filesystem::path& dir);

struct RunConfig {
  std::filesystem::path manifest;
  std::string modality = "C";
  std::string features = "handcrafted";  // or emb:<NAME>
  std::string approach = "fe";
  std::uint64_t seed = 0;
  std::filesystem::path out;
  unsigned workers = 1;
  int hyperband_r = 27;
  int hyperband_eta = 3;
  int trials = 60;
  std::string dataset;
  std::optional<std::filesystem::path> table;       // precomputed FeatureTable
  std::optional<std::filesystem::path> embeddings;  // EMB1 directory for emb:<NAME>
  std::vector<std::string> algorithms = {"LR", "SVM", "RF", "AB"};
  bool balance = true;
  bool union_modalities = false;
  std::vector<int> head_units;  // overrides the hidden-unit set when non-empty
};

/// Checks flag combinations without touching the file system. Throws kInvalidArgument or
/// kUnknownConfig.
void validate_run_config(const RunConfig& config);

using ProgressFn = std::function<void(const std::string&)>;

/// Full nested cross-validation run. Returns the report; writing files is left to the caller.
eval::ExperimentReport run_evaluation(const RunConfig& config, const ProgressFn& progress = {});

}  // namespace respire::pipeline
