#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace respire {

/// Self-describing model serialization shared by the shallow classifiers and the MLP head.
///
///   "RSM1" | u32 algorithm tag | u32 section count
///   per section: u32 section tag | u32 rows | u32 cols | rows*cols binary32 values (row-major)
///
/// All integers little-endian. A model with no sections is the 12-byte empty sentinel.
struct BlobSection {
  std::uint32_t tag = 0;
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
  std::vector<float> values;
};

struct ModelBlob {
  std::uint32_t algorithm_tag = 0;
  std::vector<BlobSection> sections;

  std::uint64_t scalar_count() const;
};

inline constexpr std::size_t kBlobHeaderBytes = 12;
inline constexpr std::size_t kSectionHeaderBytes = 12;

std::vector<std::uint8_t> encode_blob(const ModelBlob& blob);
ModelBlob decode_blob(std::span<const std::uint8_t> bytes);

}  // namespace respire
