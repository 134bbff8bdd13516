#include "respire/manifest.hpp"

#include <algorithm>
#include <map>
#include <numeric>

#include "respire/binary_io.hpp"
#include "respire/errors.hpp"

namespace respire::eval {

namespace {

std::string where(const std::string& source, int line) { return source + ":" + std::to_string(line); }

// One CSV record; fields may be double-quoted with "" escapes.
std::vector<std::string> split_csv(std::string_view line, const std::string& at) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back() += c;
      }
    } else if (c == '"' && fields.back().empty()) {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else {
      fields.back() += c;
    }
  }
  if (quoted) throw Error(ErrorCode::kMalformedRow, at + ": unterminated quote");
  return fields;
}

std::string trim(std::string s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace

std::string_view modality_name(Modality m) { return m == Modality::kCough ? "cough" : "breath"; }

std::filesystem::path Manifest::resolve(const ManifestRow& row) const {
  const std::filesystem::path p(row.path);
  return p.is_absolute() ? p : base_dir / p;
}

Manifest parse_manifest(std::string_view text, const std::string& source) {
  Manifest m;
  std::map<std::string, int> ids, paths;
  int line_no = 0;
  bool header_seen = false;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string line = trim(std::string(text.substr(pos, end - pos)));
    pos = end + 1;
    ++line_no;
    if (line.empty()) continue;
    const std::string at = where(source, line_no);
    auto fields = split_csv(line, at);
    for (auto& f : fields) f = trim(f);
    if (!header_seen) {
      std::string joined;
      for (std::size_t i = 0; i < fields.size(); ++i) joined += (i ? "," : "") + fields[i];
      if (joined != kManifestHeader) {
        throw Error(ErrorCode::kMalformedRow, at + ": header must be '" + std::string(kManifestHeader) + "'");
      }
      header_seen = true;
      continue;
    }
    if (fields.size() == 5) fields.emplace_back();
    if (fields.size() != 6) {
      throw Error(ErrorCode::kMalformedRow, at + ": expected 6 fields, found " + std::to_string(fields.size()));
    }
    ManifestRow row;
    row.sample_id = fields[0];
    row.user_id = fields[1];
    row.path = fields[4];
    row.pair_id = fields[5];
    row.line = line_no;
    if (row.sample_id.empty() || row.user_id.empty() || row.path.empty()) {
      throw Error(ErrorCode::kMalformedRow, at + ": sample_id, user_id and path are required");
    }
    if (fields[2] == "cough") {
      row.modality = Modality::kCough;
    } else if (fields[2] == "breath") {
      row.modality = Modality::kBreath;
    } else {
      throw Error(ErrorCode::kMalformedRow, at + ": unknown modality '" + fields[2] + "'");
    }
    if (fields[3] == "positive") {
      row.label = 1;
    } else if (fields[3] == "negative") {
      row.label = 0;
    } else {
      throw Error(ErrorCode::kMalformedRow, at + ": unknown label '" + fields[3] + "'");
    }
    if (auto [it, fresh] = ids.emplace(row.sample_id, line_no); !fresh) {
      throw Error(ErrorCode::kDuplicateSampleId, "sample_id '" + row.sample_id + "' on lines " +
                                                     std::to_string(it->second) + " and " + std::to_string(line_no));
    }
    if (auto [it, fresh] = paths.emplace(row.path, line_no); !fresh) {
      throw Error(ErrorCode::kMalformedRow, at + ": path '" + row.path + "' already used on line " +
                                                std::to_string(it->second));
    }
    m.rows.push_back(std::move(row));
  }
  if (!header_seen) throw Error(ErrorCode::kMalformedRow, source + ": missing header");

  std::map<std::string, std::vector<const ManifestRow*>> pairs;
  for (const auto& r : m.rows) {
    if (!r.pair_id.empty()) pairs[r.pair_id].push_back(&r);
  }
  for (const auto& [id, members] : pairs) {
    std::string lines;
    for (const auto* r : members) lines += (lines.empty() ? "" : ", ") + std::to_string(r->line);
    const bool ok = members.size() == 2 && members[0]->modality != members[1]->modality &&
                    members[0]->user_id == members[1]->user_id;
    if (!ok) {
      throw Error(ErrorCode::kDanglingPair, "pair_id '" + id + "' (lines " + lines +
                                                ") must link one cough and one breath row of the same user");
    }
  }
  return m;
}

Manifest load_manifest(const std::filesystem::path& path) {
  const auto bytes = io::read_file(path);
  Manifest m = parse_manifest(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()), path.string());
  m.base_dir = path.parent_path();
  return m;
}

Manifest undersample(const Manifest& manifest, std::uint64_t seed) {
  std::vector<char> keep(manifest.rows.size(), 1);
  for (Modality mod : {Modality::kCough, Modality::kBreath}) {
    std::vector<std::size_t> by_label[2];
    for (std::size_t i = 0; i < manifest.rows.size(); ++i) {
      if (manifest.rows[i].modality == mod) by_label[manifest.rows[i].label].push_back(i);
    }
    if (by_label[0].empty() && by_label[1].empty()) continue;
    if (by_label[0].empty() || by_label[1].empty()) {
      throw Error(ErrorCode::kSingleClass, std::string(modality_name(mod)) + " rows hold a single label");
    }
    auto& major = by_label[0].size() > by_label[1].size() ? by_label[0] : by_label[1];
    const std::size_t target = std::min(by_label[0].size(), by_label[1].size());
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(mod)}));
    shuffle_range(major.begin(), major.end(), rng);
    for (std::size_t k = target; k < major.size(); ++k) keep[major[k]] = 0;
  }
  Manifest out;
  out.base_dir = manifest.base_dir;
  for (std::size_t i = 0; i < manifest.rows.size(); ++i) {
    if (keep[i]) out.rows.push_back(manifest.rows[i]);
  }
  return out;
}

}  // namespace respire::eval
