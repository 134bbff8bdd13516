#include "respire/feature_table.hpp"

#include <map>

#include "respire/binary_io.hpp"
#include "respire/errors.hpp"

namespace respire::eval {

std::vector<std::uint8_t> encode_feature_table(const FeatureTable& t) {
  if (static_cast<std::size_t>(t.values.rows()) != t.sample_ids.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "feature table rows and ids differ");
  }
  io::ByteWriter w;
  w.u32(static_cast<std::uint32_t>(t.values.rows()));
  w.u32(static_cast<std::uint32_t>(t.values.cols()));
  w.u32(static_cast<std::uint32_t>(t.kind));
  for (Eigen::Index i = 0; i < t.values.rows(); ++i) {
    for (Eigen::Index j = 0; j < t.values.cols(); ++j) w.f32(static_cast<float>(t.values(i, j)));
  }
  for (const auto& id : t.sample_ids) w.text(id);
  return std::move(w).buffer();
}

FeatureTable decode_feature_table(std::span<const std::uint8_t> bytes) {
  io::ByteReader r(bytes);
  const std::uint32_t rows = r.u32();
  const std::uint32_t dim = r.u32();
  const std::uint32_t kind = r.u32();
  if (kind > static_cast<std::uint32_t>(FeatureKind::kConcatenated)) {
    throw Error(ErrorCode::kInvalidArgument, "unknown feature kind tag " + std::to_string(kind));
  }
  const std::uint64_t count = static_cast<std::uint64_t>(rows) * dim;
  if (count * 4 > r.remaining()) {
    throw Error(ErrorCode::kTruncatedPayload, "table declares " + std::to_string(count) + " values but holds " +
                                                  std::to_string(r.remaining()) + " bytes");
  }
  FeatureTable t;
  t.kind = static_cast<FeatureKind>(kind);
  std::vector<float> buf(static_cast<std::size_t>(count));
  r.f32s(buf);
  t.values.resize(rows, dim);
  for (std::uint32_t i = 0; i < rows; ++i) {
    for (std::uint32_t j = 0; j < dim; ++j) t.values(i, j) = buf[static_cast<std::size_t>(i) * dim + j];
  }
  for (std::uint32_t i = 0; i < rows; ++i) t.sample_ids.push_back(r.text());
  if (r.remaining() != 0) {
    throw Error(ErrorCode::kDimensionMismatch, std::to_string(r.remaining()) + " trailing bytes after feature table");
  }
  return t;
}

void write_feature_table(const FeatureTable& table, const std::filesystem::path& path) {
  io::write_file_atomic(path, encode_feature_table(table));
}

FeatureTable read_feature_table(const std::filesystem::path& path) { return decode_feature_table(io::read_file(path)); }

ModalityChoice parse_modality_choice(std::string_view s) {
  if (s == "C") return ModalityChoice::kCough;
  if (s == "B") return ModalityChoice::kBreath;
  if (s == "CB") return ModalityChoice::kCombined;
  throw Error(ErrorCode::kInvalidArgument, "modality must be C, B or CB, got '" + std::string(s) + "'");
}

std::string_view modality_choice_name(ModalityChoice m) {
  switch (m) {
    case ModalityChoice::kCough: return "C";
    case ModalityChoice::kBreath: return "B";
    case ModalityChoice::kCombined: return "CB";
  }
  return "?";
}

namespace {

std::map<std::string, Eigen::Index> index_ids(const FeatureTable& t) {
  std::map<std::string, Eigen::Index> idx;
  for (std::size_t i = 0; i < t.sample_ids.size(); ++i) idx.emplace(t.sample_ids[i], static_cast<Eigen::Index>(i));
  return idx;
}

}  // namespace

EvalData combine_modalities(const Manifest& manifest, const FeatureTable& table) {
  const auto idx = index_ids(table);
  struct Halves {
    const ManifestRow* cough = nullptr;
    const ManifestRow* breath = nullptr;
  };
  std::vector<std::string> order;
  std::map<std::string, Halves> pairs;
  EvalData out;
  out.kind = FeatureKind::kConcatenated;
  for (const auto& r : manifest.rows) {
    if (r.pair_id.empty() || !idx.count(r.sample_id)) {
      ++out.dropped;
      continue;
    }
    auto [it, fresh] = pairs.try_emplace(r.pair_id);
    if (fresh) order.push_back(r.pair_id);
    (r.modality == Modality::kCough ? it->second.cough : it->second.breath) = &r;
  }
  std::vector<const Halves*> complete;
  for (const auto& id : order) {
    const Halves& h = pairs.at(id);
    if (h.cough && h.breath) {
      complete.push_back(&h);
    } else {
      ++out.dropped;
    }
  }
  if (complete.empty()) throw Error(ErrorCode::kNoPairs, "no cough/breath pair has features for both halves");
  const Eigen::Index d = table.dim();
  out.x.resize(static_cast<Eigen::Index>(complete.size()), 2 * d);
  for (std::size_t i = 0; i < complete.size(); ++i) {
    const auto& c = *complete[i]->cough;
    const auto& b = *complete[i]->breath;
    if (c.label != b.label) {
      throw Error(ErrorCode::kMalformedRow, "pair '" + c.pair_id + "' has different labels on lines " +
                                                std::to_string(c.line) + " and " + std::to_string(b.line));
    }
    const auto row = static_cast<Eigen::Index>(i);
    out.x.row(row).head(d) = table.values.row(idx.at(c.sample_id));
    out.x.row(row).tail(d) = table.values.row(idx.at(b.sample_id));
    out.y.push_back(c.label);
    out.users.push_back(c.user_id);
    out.ids.push_back(c.sample_id + "+" + b.sample_id);
  }
  return out;
}

EvalData assemble(const Manifest& manifest, const FeatureTable& table, ModalityChoice choice, CombineMode mode) {
  if (choice == ModalityChoice::kCombined && mode == CombineMode::kConcatenate) return combine_modalities(manifest, table);
  const auto idx = index_ids(table);
  EvalData out;
  out.kind = table.kind;
  std::vector<Eigen::Index> rows;
  for (const auto& r : manifest.rows) {
    const bool wanted = choice == ModalityChoice::kCombined ||
                        (choice == ModalityChoice::kCough) == (r.modality == Modality::kCough);
    if (!wanted) continue;
    const auto it = idx.find(r.sample_id);
    if (it == idx.end()) {
      ++out.dropped;
      continue;
    }
    rows.push_back(it->second);
    out.y.push_back(r.label);
    out.users.push_back(r.user_id);
    out.ids.push_back(r.sample_id);
  }
  if (rows.empty()) throw Error(ErrorCode::kNoInput, "no manifest rows of the requested modality have features");
  out.x.resize(static_cast<Eigen::Index>(rows.size()), table.dim());
  for (std::size_t i = 0; i < rows.size(); ++i) out.x.row(static_cast<Eigen::Index>(i)) = table.values.row(rows[i]);
  return out;
}

}  // namespace respire::eval
