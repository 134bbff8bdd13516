#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "respire/random.hpp"

namespace respire::eval {

enum class Modality { kCough, kBreath };

std::string_view modality_name(Modality m);

struct ManifestRow {
  std::string sample_id;
  std::string user_id;
  Modality modality = Modality::kCough;
  int label = 0;  // 1 = positive
  std::string path;
  std::string pair_id;  // empty when absent
  int line = 0;         // 1-based line in the source file
};

struct Manifest {
  std::vector<ManifestRow> rows;
  std::filesystem::path base_dir;  // relative paths resolve against this

  std::filesystem::path resolve(const ManifestRow& row) const;
};

inline constexpr std::string_view kManifestHeader = "sample_id,user_id,modality,label,path,pair_id";

/// Parses manifest CSV text. Throws kMalformedRow, kDuplicateSampleId or kDanglingPair, each
/// naming the offending line numbers.
Manifest parse_manifest(std::string_view text, const std::string& source = "manifest");
Manifest load_manifest(const std::filesystem::path& path);

/// Per modality, drops uniformly chosen majority-class rows until both labels have equal
/// counts. Row order is preserved. Throws kSingleClass.
Manifest undersample(const Manifest& manifest, std::uint64_t seed);

}  // namespace respire::eval
