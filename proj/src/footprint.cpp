#include "respire/footprint.hpp"

#include "respire/embedding.hpp"
#include "respire/errors.hpp"

namespace respire::footprint {

namespace {

struct Published {
  const char* name;
  std::uint64_t parameters;
  std::uint64_t reported_bytes;
};

constexpr Published kBackbones[] = {
    {"YAMNET", 3'700'000, 16'000'000},
    {"OpenL3", 4'700'000, 18'000'000},
    {"VGGISH", 62'000'000, 288'000'000},
};

}  // namespace

std::uint64_t head_param_count(const head::HeadConfig& c) {
  const auto in = static_cast<std::uint64_t>(c.input_dim);
  const auto u = static_cast<std::uint64_t>(c.hidden_units);
  const auto layers = static_cast<std::uint64_t>(c.hidden_layers);
  return in * u + u + (layers - 1) * (u * u + u) + 2 * u + 2;
}

FootprintEntry backbone_footprint(const std::string& name) {
  std::string key = name;
  if (name != "OpenL3" && embedding::validate_config(name).is_openl3()) key = "OpenL3";
  for (const auto& b : kBackbones) {
    if (key == b.name) return {b.name, b.parameters, kBytesPerParameter * b.parameters, std::nullopt, b.reported_bytes};
  }
  throw Error(ErrorCode::kUnknownConfig, "no footprint for backbone '" + name + "'");
}

std::vector<FootprintEntry> backbone_table() {
  std::vector<FootprintEntry> out;
  for (const auto& b : kBackbones) out.push_back(backbone_footprint(b.name));
  return out;
}

FootprintEntry head_footprint(const head::HeadConfig& config) {
  const std::uint64_t n = head_param_count(config);
  return {"MLP head " + config.describe() + " input_dim=" + std::to_string(config.input_dim), n, kBytesPerParameter * n,
          std::nullopt, std::nullopt};
}

FootprintEntry measure_serialized(const std::string& component, const ModelBlob& blob) {
  const std::uint64_t n = blob.scalar_count();
  return {component, n, kBytesPerParameter * n, encode_blob(blob).size(), std::nullopt};
}

double megabytes(std::uint64_t bytes) { return static_cast<double>(bytes) / kBytesPerMegabyte; }

}  // namespace respire::footprint
