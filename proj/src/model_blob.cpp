#include "respire/model_blob.hpp"

#include "respire/binary_io.hpp"
#include "respire/errors.hpp"

namespace respire {

namespace {
constexpr char kBlobMagic[4] = {'R', 'S', 'M', '1'};
}

std::uint64_t ModelBlob::scalar_count() const {
  std::uint64_t n = 0;
  for (const auto& s : sections) n += s.values.size();
  return n;
}

std::vector<std::uint8_t> encode_blob(const ModelBlob& blob) {
  io::ByteWriter w;
  w.bytes(std::string_view(kBlobMagic, 4));
  w.u32(blob.algorithm_tag);
  w.u32(static_cast<std::uint32_t>(blob.sections.size()));
  for (const auto& s : blob.sections) {
    if (static_cast<std::uint64_t>(s.rows) * s.cols != s.values.size()) {
      throw Error(ErrorCode::kDimensionMismatch, "blob section shape does not match its values");
    }
    w.u32(s.tag);
    w.u32(s.rows);
    w.u32(s.cols);
    w.f32s(s.values);
  }
  return std::move(w).buffer();
}

ModelBlob decode_blob(std::span<const std::uint8_t> bytes) {
  io::ByteReader r(bytes);
  if (r.remaining() < 4 || r.bytes(4) != std::string_view(kBlobMagic, 4)) {
    throw Error(ErrorCode::kBadMagic, "not a model blob");
  }
  ModelBlob blob;
  blob.algorithm_tag = r.u32();
  const std::uint32_t count = r.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    BlobSection s;
    s.tag = r.u32();
    s.rows = r.u32();
    s.cols = r.u32();
    const std::uint64_t n = static_cast<std::uint64_t>(s.rows) * s.cols;
    if (n * sizeof(float) > r.remaining()) throw Error(ErrorCode::kTruncatedPayload, "blob section overruns the buffer");
    s.values.resize(n);
    r.f32s(s.values);
    blob.sections.push_back(std::move(s));
  }
  if (r.remaining() != 0) throw Error(ErrorCode::kDimensionMismatch, "trailing bytes after blob sections");
  return blob;
}

}  // namespace respire
