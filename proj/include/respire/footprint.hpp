#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "respire/head.hpp"
#include "respire/model_blob.hpp"

namespace respire::footprint {

inline constexpr std::uint64_t kBytesPerParameter = 4;
inline constexpr double kBytesPerMegabyte = 1e6;

struct FootprintEntry {
  std::string component;
  std::uint64_t parameter_count = 0;
  std::uint64_t estimated_bytes = 0;  // 4 bytes per parameter
  std::optional<std::uint64_t> measured_bytes;  // serialized blob length
  std::optional<std::uint64_t> reported_bytes;  // published size, backbones only
};

/// input*u + u + (L-1)(u*u + u) + 2u + 2.
std::uint64_t head_param_count(const head::HeadConfig& config);

/// YAMNET, VGGISH, OpenL3, or any L3-Net configuration name (mapped to OpenL3).
/// Throws kUnknownConfig.
FootprintEntry backbone_footprint(const std::string& name);
std::vector<FootprintEntry> backbone_table();

FootprintEntry head_footprint(const head::HeadConfig& config);
FootprintEntry measure_serialized(const std::string& component, const ModelBlob& blob);

double megabytes(std::uint64_t bytes);

}  // namespace respire::footprint
