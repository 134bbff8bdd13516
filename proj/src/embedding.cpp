#include "respire/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

#include "respire/binary_io.hpp"
#include "respire/errors.hpp"

namespace respire {

std::string_view feature_kind_name(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::kHandcrafted: return "handcrafted-477";
    case FeatureKind::kPooledEmbedding: return "pooled-embedding";
    case FeatureKind::kConcatenated: return "concatenated";
  }
  return "unknown";
}

}  // namespace respire

namespace respire::embedding {

namespace {

std::vector<std::string> split_spaces(std::string_view s) {
  std::vector<std::string> parts;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && s[i] == ' ') ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ') ++j;
    if (j > i) parts.emplace_back(s.substr(i, j - i));
    i = j;
  }
  return parts;
}

}  // namespace

BackboneConfig validate_config(std::string_view name) {
  if (name == "VGGISH") return {"VGGISH", 128, InputRepr::kMel64, TrainingCorpus::kYoutube8m};
  if (name == "YAMNET") return {"YAMNET", 1024, InputRepr::kMel64, TrainingCorpus::kAudioset};

  const auto unknown = [&] { return Error(ErrorCode::kUnknownConfig, "unknown backbone '" + std::string(name) + "'"); };
  const auto parts = split_spaces(name);
  if (parts.size() != 4 || parts[0] != "L3") throw unknown();

  BackboneConfig cfg;
  if (parts[1] == "E") {
    cfg.training_corpus = TrainingCorpus::kEnvironmental;
  } else if (parts[1] == "M") {
    cfg.training_corpus = TrainingCorpus::kMusic;
  } else {
    throw unknown();
  }
  if (parts[2] == "512") {
    cfg.embedding_dim = 512;
  } else if (parts[2] == "6144") {
    cfg.embedding_dim = 6144;
  } else {
    throw unknown();
  }
  if (parts[3] == "L") {
    cfg.input_repr = InputRepr::kLinear;
  } else if (parts[3] == "M128") {
    cfg.input_repr = InputRepr::kMel128;
  } else if (parts[3] == "M256") {
    cfg.input_repr = InputRepr::kMel256;
  } else {
    throw unknown();
  }
  cfg.name = "L3 " + parts[1] + " " + parts[2] + " " + parts[3];
  return cfg;
}

const std::vector<std::string>& all_backbone_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out{"VGGISH", "YAMNET"};
    for (const char* corpus : {"E", "M"}) {
      for (const char* dim : {"512", "6144"}) {
        for (const char* input : {"L", "M128", "M256"}) {
          out.push_back(std::string("L3 ") + corpus + " " + dim + " " + input);
        }
      }
    }
    return out;
  }();
  return names;
}

std::string_view input_repr_name(InputRepr r) {
  switch (r) {
    case InputRepr::kLinear: return "linear";
    case InputRepr::kMel128: return "mel128";
    case InputRepr::kMel256: return "mel256";
    case InputRepr::kMel64: return "mel64";
  }
  return "unknown";
}

std::string_view training_corpus_name(TrainingCorpus c) {
  switch (c) {
    case TrainingCorpus::kEnvironmental: return "environmental";
    case TrainingCorpus::kMusic: return "music";
    case TrainingCorpus::kYoutube8m: return "youtube8m";
    case TrainingCorpus::kAudioset: return "audioset";
  }
  return "unknown";
}

FeatureVector pool(const EmbeddingSet& set) {
  const Eigen::Index n = set.windows.rows();
  const Eigen::Index d = set.windows.cols();
  if (n == 0) throw Error(ErrorCode::kEmptySet, "sample '" + set.sample_id + "' has no windows");

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    const float* ra = set.windows.row(a).data();
    const float* rb = set.windows.row(b).data();
    return std::lexicographical_compare(ra, ra + d, rb, rb + d);
  });

  FeatureVector out;
  out.kind = FeatureKind::kPooledEmbedding;
  out.values.assign(static_cast<std::size_t>(2 * d), 0.0);
  for (Eigen::Index j = 0; j < d; ++j) {
    double sum = 0.0;
    for (Eigen::Index r : order) sum += set.windows(r, j);
    const double mean = sum / static_cast<double>(n);
    double sq = 0.0;
    for (Eigen::Index r : order) {
      const double diff = set.windows(r, j) - mean;
      sq += diff * diff;
    }
    out.values[static_cast<std::size_t>(j)] = mean;
    out.values[static_cast<std::size_t>(d + j)] = std::sqrt(sq / static_cast<double>(n));
  }
  return out;
}

std::vector<std::uint8_t> encode_embedding(const EmbeddingSet& set) {
  if (set.windows.cols() != set.config.embedding_dim) {
    throw Error(ErrorCode::kDimensionMismatch, "matrix has " + std::to_string(set.windows.cols()) +
                                                   " columns but " + set.config.name + " embeds to " +
                                                   std::to_string(set.config.embedding_dim));
  }
  if (set.windows.rows() == 0) throw Error(ErrorCode::kEmptySet, "sample '" + set.sample_id + "' has no windows");
  io::ByteWriter w;
  w.bytes(std::string_view(kEmbMagic, 4));
  w.u32(kEmbVersion);
  w.text(set.config.name);
  w.text(set.sample_id);
  w.u32(static_cast<std::uint32_t>(set.windows.rows()));
  w.u32(static_cast<std::uint32_t>(set.windows.cols()));
  w.f32s({set.windows.data(), static_cast<std::size_t>(set.windows.size())});
  return std::move(w).buffer();
}

EmbeddingSet decode_embedding(std::span<const std::uint8_t> bytes) {
  io::ByteReader r(bytes);
  if (r.remaining() < 4 || r.bytes(4) != std::string_view(kEmbMagic, 4)) {
    throw Error(ErrorCode::kBadMagic, "not an EMB1 file");
  }
  const std::uint32_t version = r.u32();
  if (version != kEmbVersion) {
    throw Error(ErrorCode::kVersionUnsupported, "EMB1 version " + std::to_string(version));
  }
  EmbeddingSet set;
  set.config = validate_config(r.text());
  set.sample_id = r.text();
  const std::uint32_t n_windows = r.u32();
  const std::uint32_t dim = r.u32();
  if (static_cast<int>(dim) != set.config.embedding_dim) {
    throw Error(ErrorCode::kDimensionMismatch, "header dim " + std::to_string(dim) + " but " + set.config.name +
                                                   " embeds to " + std::to_string(set.config.embedding_dim));
  }
  if (n_windows == 0) throw Error(ErrorCode::kEmptySet, "sample '" + set.sample_id + "' has no windows");
  const std::uint64_t payload = static_cast<std::uint64_t>(n_windows) * dim * sizeof(float);
  if (payload > r.remaining()) {
    throw Error(ErrorCode::kTruncatedPayload, "header declares " + std::to_string(n_windows) + " windows, payload holds " +
                                                  std::to_string(r.remaining() / (dim * sizeof(float))));
  }
  if (payload < r.remaining()) {
    throw Error(ErrorCode::kDimensionMismatch, std::to_string(r.remaining() - payload) + " trailing bytes after payload");
  }
  set.windows.resize(n_windows, dim);
  r.f32s({set.windows.data(), static_cast<std::size_t>(set.windows.size())});
  for (Eigen::Index i = 0; i < set.windows.size(); ++i) {
    if (!std::isfinite(set.windows.data()[i])) {
      throw Error(ErrorCode::kNonFiniteFeature, "sample '" + set.sample_id + "' has non-finite embedding values");
    }
  }
  return set;
}

void write_embedding_file(const EmbeddingSet& set, const std::filesystem::path& path) {
  io::write_file_atomic(path, encode_embedding(set));
}

EmbeddingSet read_embedding_file(const std::filesystem::path& path) {
  return decode_embedding(io::read_file(path));
}

std::string embedding_file_name(std::string_view sample_id) {
  std::string out(sample_id);
  for (char& c : out) {
    if (c == '/' || c == '\\') c = '_';
  }
  return out + ".emb";
}

}  // namespace respire::embedding
