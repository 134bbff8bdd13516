#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "respire/feature_vector.hpp"
#include "respire/linalg.hpp"

namespace respire::embedding {

enum class InputRepr { kLinear, kMel128, kMel256, kMel64 };
enum class TrainingCorpus { kEnvironmental, kMusic, kYoutube8m, kAudioset };

struct BackboneConfig {
  std::string name;
  int embedding_dim = 0;
  InputRepr input_repr = InputRepr::kMel64;
  TrainingCorpus training_corpus = TrainingCorpus::kAudioset;

  bool is_openl3() const { return name.rfind("L3 ", 0) == 0; }
};

/// Parses "VGGISH", "YAMNET" or an L3-Net name such as "L3 E 6144 M128". Throws kUnknownConfig.
BackboneConfig validate_config(std::string_view name);

/// The 14 accepted names: VGGISH, YAMNET and the 12 L3-Net configurations.
const std::vector<std::string>& all_backbone_names();

std::string_view input_repr_name(InputRepr r);
std::string_view training_corpus_name(TrainingCorpus c);

/// Window embeddings of one sample, n_windows x embedding_dim, stored as binary32.
struct EmbeddingSet {
  std::string sample_id;
  BackboneConfig config;
  MatrixF windows;
};

/// Per-dimension mean followed by per-dimension population std across windows.
/// Windows are summed in lexicographic row order, so the result does not depend on their order.
FeatureVector pool(const EmbeddingSet& set);

inline constexpr char kEmbMagic[4] = {'E', 'M', 'B', '1'};
inline constexpr std::uint32_t kEmbVersion = 1;

std::vector<std::uint8_t> encode_embedding(const EmbeddingSet& set);
EmbeddingSet decode_embedding(std::span<const std::uint8_t> bytes);

void write_embedding_file(const EmbeddingSet& set, const std::filesystem::path& path);
EmbeddingSet read_embedding_file(const std::filesystem::path& path);

/// File stem used for a sample's EMB1 file: the sample id with path separators replaced.
std::string embedding_file_name(std::string_view sample_id);

}  // namespace respire::embedding
