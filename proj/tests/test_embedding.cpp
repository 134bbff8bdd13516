#include <algorithm>
#include <cstring>
#include <functional>
#include <numeric>
#include <random>

#include "doctest.h"
#include "fixtures.hpp"
#include "respire/binary_io.hpp"
#include "respire/embedding.hpp"
#include "respire/errors.hpp"

using namespace respire;
using namespace respire::embedding;

namespace {

EmbeddingSet random_set(const std::string& name, int windows, std::uint64_t seed) {
  EmbeddingSet s;
  s.config = validate_config(name);
  s.sample_id = "sample-" + std::to_string(seed);
  s.windows.resize(windows, s.config.embedding_dim);
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> g(0.0f, 2.0f);
  for (Eigen::Index i = 0; i < s.windows.size(); ++i) s.windows.data()[i] = g(rng);
  return s;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::kIoError;
}

}  // namespace

TEST_CASE("validate_config parses L3 names and rejects others") {
  const auto e = validate_config("L3 E 512 L");
  CHECK(e.training_corpus == TrainingCorpus::kEnvironmental);
  CHECK(e.embedding_dim == 512);
  CHECK(e.input_repr == InputRepr::kLinear);
  const auto m = validate_config("L3 M 6144 M128");
  CHECK(m.training_corpus == TrainingCorpus::kMusic);
  CHECK(m.embedding_dim == 6144);
  CHECK(m.input_repr == InputRepr::kMel128);
  CHECK(validate_config("YAMNET").embedding_dim == 1024);
  CHECK(validate_config("VGGISH").embedding_dim == 128);

  for (const char* bad : {"L3 X 512 L", "L3 E 256 L", "L3 E 512 M64", "vggish", "", "L3 E 512"}) {
    CHECK(code_of([&] { validate_config(bad); }) == ErrorCode::kUnknownConfig);
  }
  CHECK(all_backbone_names().size() == 14);
}

TEST_CASE("pool worked examples") {
  EmbeddingSet s;
  s.config = {"TEST", 2, InputRepr::kMel64, TrainingCorpus::kAudioset};
  s.windows.resize(2, 2);
  s.windows << 0, 2, 2, 0;
  CHECK(pool(s).values == std::vector<double>{1, 1, 1, 1});

  s.windows.resize(1, 2);
  s.windows << 3, -1;
  CHECK(pool(s).values == std::vector<double>{3, -1, 0, 0});
  CHECK(pool(s).kind == FeatureKind::kPooledEmbedding);

  s.windows.resize(0, 2);
  CHECK(code_of([&] { pool(s); }) == ErrorCode::kEmptySet);

  const auto vgg = random_set("VGGISH", 7, 1);
  CHECK(pool(vgg).values.size() == 256);
}

TEST_CASE("pool is permutation invariant and collapses copies") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    auto s = random_set("L3 E 512 M256", 1 + static_cast<int>(rng() % 12), rng());
    const auto base = pool(s).values;
    std::vector<Eigen::Index> perm(static_cast<std::size_t>(s.windows.rows()));
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    EmbeddingSet shuffled = s;
    for (std::size_t i = 0; i < perm.size(); ++i) shuffled.windows.row(static_cast<Eigen::Index>(i)) = s.windows.row(perm[i]);
    CHECK(pool(shuffled).values == base);
  }

  auto one = random_set("VGGISH", 1, 9);
  EmbeddingSet copies = one;
  copies.windows = one.windows.replicate(5, 1);
  const auto pooled = pool(copies).values;
  for (int j = 0; j < 128; ++j) {
    CHECK(pooled[static_cast<std::size_t>(j)] == static_cast<double>(one.windows(0, j)));
    CHECK(pooled[static_cast<std::size_t>(128 + j)] == 0.0);
  }
}

TEST_CASE("pooled length is twice the embedding size for every backbone") {
  for (const auto& name : all_backbone_names()) {
    const auto s = random_set(name, 3, 2);
    const auto len = pool(s).values.size();
    CHECK(len == static_cast<std::size_t>(2 * validate_config(name).embedding_dim));
    CHECK((len == 256 || len == 1024 || len == 2048 || len == 12288));
  }
}

TEST_CASE("EMB1 round trip is bit exact") {
  testing::TempDir dir;
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 10; ++trial) {
    const auto& names = all_backbone_names();
    const auto s = random_set(names[rng() % names.size()], 1 + static_cast<int>(rng() % 6), rng());
    const auto path = dir.path() / embedding_file_name(s.sample_id);
    write_embedding_file(s, path);
    const auto back = read_embedding_file(path);
    CHECK(back.sample_id == s.sample_id);
    CHECK(back.config.name == s.config.name);
    REQUIRE(back.windows.rows() == s.windows.rows());
    CHECK(std::memcmp(back.windows.data(), s.windows.data(), sizeof(float) * static_cast<std::size_t>(s.windows.size())) == 0);
  }
}

TEST_CASE("EMB1 byte layout") {
  EmbeddingSet s;
  s.config = validate_config("VGGISH");
  s.sample_id = "ab";
  s.windows = MatrixF::Zero(1, 128);
  s.windows(0, 0) = 1.0f;
  const auto b = encode_embedding(s);
  CHECK(b.size() == 4 + 4 + 4 + 6 + 4 + 2 + 4 + 4 + 128 * 4);
  CHECK(std::memcmp(b.data(), "\x45\x4D\x42\x31", 4) == 0);
  CHECK(b[4] == 1);
  CHECK(b[8] == 6);
  CHECK(std::memcmp(b.data() + 12, "VGGISH", 6) == 0);
  CHECK(b[18] == 2);
  CHECK(std::memcmp(b.data() + 22, "ab", 2) == 0);
  CHECK(b[24] == 1);   // n_windows
  CHECK(b[28] == 128); // dim
  CHECK(std::memcmp(b.data() + 32, "\x00\x00\x80\x3f", 4) == 0);  // 1.0f little-endian
}

TEST_CASE("EMB1 negative cases") {
  const auto s = random_set("VGGISH", 3, 4);
  const auto good = encode_embedding(s);

  auto bad_magic = good;
  std::memcpy(bad_magic.data(), "XXXX", 4);
  CHECK(code_of([&] { decode_embedding(bad_magic); }) == ErrorCode::kBadMagic);

  auto bad_version = good;
  bad_version[4] = 2;
  CHECK(code_of([&] { decode_embedding(bad_version); }) == ErrorCode::kVersionUnsupported);

  auto truncated = good;
  truncated.resize(truncated.size() - 128 * 4);  // header says 3 windows, payload holds 2
  CHECK(code_of([&] { decode_embedding(truncated); }) == ErrorCode::kTruncatedPayload);

  auto trailing = good;
  trailing.push_back(0);
  CHECK(code_of([&] { decode_embedding(trailing); }) == ErrorCode::kDimensionMismatch);

  auto wrong_dim = good;
  wrong_dim[34] = 64;  // dim field follows "VGGISH" and "sample-4"
  CHECK(code_of([&] { decode_embedding(wrong_dim); }) == ErrorCode::kDimensionMismatch);

  EmbeddingSet mismatched = s;
  mismatched.windows.resize(2, 100);
  CHECK(code_of([&] { encode_embedding(mismatched); }) == ErrorCode::kDimensionMismatch);

  auto nan = good;
  const float q = std::numeric_limits<float>::quiet_NaN();
  std::memcpy(nan.data() + 42, &q, 4);
  CHECK(code_of([&] { decode_embedding(nan); }) == ErrorCode::kNonFiniteFeature);
}

TEST_CASE("EMB1 decoder survives random corruption") {
  const auto good = encode_embedding(random_set("L3 M 512 L", 2, 8));
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 2000; ++trial) {
    auto bytes = good;
    const int flips = 1 + static_cast<int>(rng() % 4);
    for (int f = 0; f < flips; ++f) bytes[rng() % bytes.size()] = static_cast<std::uint8_t>(rng());
    if (rng() % 3 == 0) bytes.resize(rng() % bytes.size());
    try {
      const auto back = decode_embedding(bytes);
      CHECK(back.windows.cols() == back.config.embedding_dim);
    } catch (const Error&) {
    }
  }
}
