#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace respire {

/// Provenance of a feature vector. The numeric values are the FeatureTable kind tags.
enum class FeatureKind : std::uint32_t {
  kHandcrafted = 0,
  kPooledEmbedding = 1,
  kConcatenated = 2,
};

std::string_view feature_kind_name(FeatureKind kind);

struct FeatureVector {
  std::vector<double> values;
  FeatureKind kind = FeatureKind::kHandcrafted;
};

}  // namespace respire
