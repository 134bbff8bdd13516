#include "respire/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include <json.hpp>

#include "respire/binary_io.hpp"
#include "respire/errors.hpp"

namespace respire::eval {

namespace {

using Json = nlohmann::ordered_json;

Json entry_json(const footprint::FootprintEntry& e) {
  Json j;
  j["component"] = e.component;
  j["parameter_count"] = e.parameter_count;
  j["estimated_bytes"] = e.estimated_bytes;
  j["measured_bytes"] = e.measured_bytes ? Json(*e.measured_bytes) : Json(nullptr);
  j["reported_bytes"] = e.reported_bytes ? Json(*e.reported_bytes) : Json(nullptr);
  return j;
}

footprint::FootprintEntry entry_from(const Json& j) {
  footprint::FootprintEntry e;
  e.component = j.at("component").get<std::string>();
  e.parameter_count = j.at("parameter_count").get<std::uint64_t>();
  e.estimated_bytes = j.at("estimated_bytes").get<std::uint64_t>();
  if (!j.at("measured_bytes").is_null()) e.measured_bytes = j.at("measured_bytes").get<std::uint64_t>();
  if (!j.at("reported_bytes").is_null()) e.reported_bytes = j.at("reported_bytes").get<std::uint64_t>();
  return e;
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

double fold_std(const CellResult& c) {
  double s = 0;
  for (const auto& f : c.folds) s += (f.pr_auc - c.mean_pr_auc) * (f.pr_auc - c.mean_pr_auc);
  return c.folds.empty() ? 0.0 : std::sqrt(s / static_cast<double>(c.folds.size()));
}

// Most frequently chosen threshold; ties go to the smaller one.
std::string pca_column(const CellResult& c) {
  std::map<double, int> counts;
  for (const auto& f : c.folds) {
    if (f.pca_threshold > 0) ++counts[f.pca_threshold];
  }
  if (counts.empty()) return "-";
  auto best = counts.begin();
  for (auto it = counts.begin(); it != counts.end(); ++it) {
    if (it->second > best->second) best = it;
  }
  return fixed(best->first * 100, 0) + "%";
}

std::string pad(const std::string& s, std::size_t w) { return s.size() >= w ? s : s + std::string(w - s.size(), ' '); }

}  // namespace

std::string report_json(const ExperimentReport& r) {
  Json j;
  j["schema"] = kReportSchema;
  Json run;
  run["dataset"] = r.run.dataset;
  run["modality"] = r.run.modality;
  run["features"] = r.run.features;
  run["approach"] = r.run.approach;
  run["seed"] = r.run.seed;
  run["rows"] = r.run.rows;
  run["users"] = r.run.users;
  run["positives"] = r.run.positives;
  run["dropped_rows"] = r.run.dropped_rows;
  run["feature_dim"] = r.run.feature_dim;
  run["hyperband_r"] = r.run.hyperband_r;
  run["hyperband_eta"] = r.run.hyperband_eta;
  run["trials"] = r.run.trials;
  j["run"] = run;
  Json cells = Json::array();
  for (const auto& c : r.cells) {
    Json cell;
    cell["algorithm"] = c.algorithm;
    cell["mean_pr_auc"] = c.mean_pr_auc;
    Json folds = Json::array();
    for (const auto& f : c.folds) {
      Json fj;
      fj["fold"] = f.fold;
      fj["train_rows"] = f.train_rows;
      fj["test_rows"] = f.test_rows;
      fj["train_users"] = f.train_users;
      fj["test_users"] = f.test_users;
      fj["pca_threshold"] = f.pca_threshold;
      fj["pca_components"] = f.pca_components;
      fj["params"] = f.params;
      fj["candidates"] = f.candidates;
      fj["inner_pr_auc"] = f.inner_pr_auc;
      fj["pr_auc"] = f.pr_auc;
      fj["model_bytes"] = f.model_bytes;
      fj["parameter_count"] = f.parameter_count;
      folds.push_back(fj);
    }
    cell["folds"] = folds;
    cells.push_back(cell);
  }
  j["cells"] = cells;
  Json fp = Json::array();
  for (const auto& e : r.footprint) fp.push_back(entry_json(e));
  j["footprint"] = fp;
  return j.dump(2) + "\n";
}

ExperimentReport parse_report(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const std::exception& e) {
    throw Error(ErrorCode::kCorruptFile, std::string("report is not valid JSON: ") + e.what());
  }
  if (!j.contains("schema") || j["schema"] != kReportSchema) {
    throw Error(ErrorCode::kVersionUnsupported, "expected schema " + std::string(kReportSchema));
  }
  ExperimentReport r;
  try {
    const auto& run = j.at("run");
    r.run.dataset = run.at("dataset").get<std::string>();
    r.run.modality = run.at("modality").get<std::string>();
    r.run.features = run.at("features").get<std::string>();
    r.run.approach = run.at("approach").get<std::string>();
    r.run.seed = run.at("seed").get<std::uint64_t>();
    r.run.rows = run.at("rows").get<std::size_t>();
    r.run.users = run.at("users").get<std::size_t>();
    r.run.positives = run.at("positives").get<std::size_t>();
    r.run.dropped_rows = run.at("dropped_rows").get<std::size_t>();
    r.run.feature_dim = run.at("feature_dim").get<std::size_t>();
    r.run.hyperband_r = run.at("hyperband_r").get<int>();
    r.run.hyperband_eta = run.at("hyperband_eta").get<int>();
    r.run.trials = run.at("trials").get<int>();
    for (const auto& cj : j.at("cells")) {
      CellResult c;
      c.algorithm = cj.at("algorithm").get<std::string>();
      c.mean_pr_auc = cj.at("mean_pr_auc").get<double>();
      for (const auto& fj : cj.at("folds")) {
        FoldResult f;
        f.fold = fj.at("fold").get<int>();
        f.train_rows = fj.at("train_rows").get<std::size_t>();
        f.test_rows = fj.at("test_rows").get<std::size_t>();
        f.train_users = fj.at("train_users").get<std::size_t>();
        f.test_users = fj.at("test_users").get<std::size_t>();
        f.pca_threshold = fj.at("pca_threshold").get<double>();
        f.pca_components = fj.at("pca_components").get<int>();
        f.params = fj.at("params").get<std::string>();
        f.candidates = fj.at("candidates").get<int>();
        f.inner_pr_auc = fj.at("inner_pr_auc").get<double>();
        f.pr_auc = fj.at("pr_auc").get<double>();
        f.model_bytes = fj.at("model_bytes").get<std::uint64_t>();
        f.parameter_count = fj.at("parameter_count").get<std::uint64_t>();
        c.folds.push_back(std::move(f));
      }
      r.cells.push_back(std::move(c));
    }
    for (const auto& e : j.at("footprint")) r.footprint.push_back(entry_from(e));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kCorruptFile, std::string("report is missing fields: ") + e.what());
  }
  return r;
}

std::string summary_table(const ExperimentReport& r) {
  std::ostringstream os;
  os << "dataset " << r.run.dataset << ", modality " << r.run.modality << ", approach " << r.run.approach << ", seed "
     << r.run.seed << "\n";
  os << r.run.rows << " rows from " << r.run.users << " users (" << r.run.positives << " positive), "
     << r.run.dropped_rows << " dropped\n\n";
  os << pad("Features", 24) << pad("Clf", 6) << pad("PCA", 6) << "PR-AUC\n";
  for (const auto& c : r.cells) {
    os << pad(r.run.features, 24) << pad(c.algorithm, 6) << pad(pca_column(c), 6) << fixed(c.mean_pr_auc, 2)
       << " +- " << fixed(fold_std(c), 2) << "\n";
  }
  return os.str();
}

std::string hyperparameter_log(const ExperimentReport& r) {
  std::ostringstream os;
  for (const auto& c : r.cells) {
    for (const auto& f : c.folds) {
      os << c.algorithm << " fold=" << f.fold << " pca=" << (f.pca_threshold > 0 ? fixed(f.pca_threshold, 2) : "-")
         << " components=" << f.pca_components << " " << f.params << " inner_pr_auc=" << fixed(f.inner_pr_auc, 4)
         << " pr_auc=" << fixed(f.pr_auc, 4) << "\n";
    }
  }
  return os.str();
}

std::string footprint_table(const std::vector<footprint::FootprintEntry>& entries) {
  std::ostringstream os;
  os << pad("Component", 44) << pad("Params", 14) << pad("Est. MB", 10) << pad("Measured MB", 13) << "Reported MB\n";
  for (const auto& e : entries) {
    os << pad(e.component, 44) << pad(std::to_string(e.parameter_count), 14)
       << pad(fixed(footprint::megabytes(e.estimated_bytes), 3), 10)
       << pad(e.measured_bytes ? fixed(footprint::megabytes(*e.measured_bytes), 3) : "-", 13)
       << (e.reported_bytes ? fixed(footprint::megabytes(*e.reported_bytes), 0) : "-") << "\n";
  }
  return os.str();
}

void write_report_files(const ExperimentReport& report, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIoError, "cannot create " + dir.string() + ": " + ec.message());
  io::write_text_atomic(dir / "report.json", report_json(report));
  io::write_text_atomic(dir / "summary.txt", summary_table(report));
  io::write_text_atomic(dir / "hyperparams.log", hyperparameter_log(report));
}

}  // namespace respire::eval
