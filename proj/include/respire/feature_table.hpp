#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "respire/feature_vector.hpp"
#include "respire/linalg.hpp"
#include "respire/manifest.hpp"

namespace respire::eval {

/// One feature row per sample.
///
/// File layout (little-endian):
///   u32 n_rows | u32 dim | u32 kind tag
///   n_rows * dim binary32 values, row-major
///   n_rows sample ids, each u32 byte length + UTF-8 bytes
struct FeatureTable {
  FeatureKind kind = FeatureKind::kHandcrafted;
  Matrix values;
  std::vector<std::string> sample_ids;

  Eigen::Index dim() const { return values.cols(); }
};

std::vector<std::uint8_t> encode_feature_table(const FeatureTable& table);
/// Throws kTruncatedPayload, kDimensionMismatch (trailing bytes) or kInvalidArgument (kind tag).
FeatureTable decode_feature_table(std::span<const std::uint8_t> bytes);
void write_feature_table(const FeatureTable& table, const std::filesystem::path& path);
FeatureTable read_feature_table(const std::filesystem::path& path);

enum class ModalityChoice { kCough, kBreath, kCombined };
enum class CombineMode { kConcatenate, kUnion };

ModalityChoice parse_modality_choice(std::string_view s);  // "C", "B" or "CB"
std::string_view modality_choice_name(ModalityChoice m);

/// Rows ready for cross-validation.
struct EvalData {
  Matrix x;
  Labels y;
  std::vector<std::string> users;
  std::vector<std::string> ids;  // sample id, or "cough+breath" ids for concatenated pairs
  FeatureKind kind = FeatureKind::kHandcrafted;
  std::size_t dropped = 0;  // manifest rows without features, or unpaired rows for CB
};

/// Per pair, [cough features ++ breath features]. Unpaired rows are dropped and counted.
/// Throws kNoPairs when no complete pair exists.
EvalData combine_modalities(const Manifest& manifest, const FeatureTable& table);

/// Selects the manifest rows of one modality (or both, for CB) that have features.
EvalData assemble(const Manifest& manifest, const FeatureTable& table, ModalityChoice choice,
                  CombineMode mode = CombineMode::kConcatenate);

}  // namespace respire::eval
