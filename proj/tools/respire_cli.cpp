// respire: feature extraction, pooling, nested-CV evaluation and footprint reporting.

#include <chrono>
#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "respire/binary_io.hpp"
#include "respire/parallel.hpp"
#include "respire/errors.hpp"
#include "respire/pipeline.hpp"
#include "respire/report.hpp"

namespace {

using respire::ErrorCode;

constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kUnknownConfig:
    case ErrorCode::kMalformedRow:
    case ErrorCode::kDuplicateSampleId:
    case ErrorCode::kDanglingPair:
    case ErrorCode::kTooFewUsers:
    case ErrorCode::kNoPairs:
    case ErrorCode::kInvalidBudget:
    case ErrorCode::kNoInput:
    case ErrorCode::kDimensionMismatch:
    case ErrorCode::kSingleClass:
    case ErrorCode::kEmptySet:
      return kExitValidation;
    default:
      return kExitRuntime;
  }
}

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("respire");
  logger->set_pattern("[%H:%M:%S.%e] [%^%l%$] %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::info);
  if (const char* env = std::getenv("RESPIRE_LOG")) {
    const auto level = spdlog::level::from_str(env);
    if (level == spdlog::level::off && std::string(env) != "off") {
      spdlog::warn("RESPIRE_LOG='{}' is not a log level; keeping info", env);
    } else {
      spdlog::set_level(level);
    }
  }
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Respiratory-sound classification pipeline"};
  app.require_subcommand(1);
  unsigned workers = respire::default_workers();

  std::filesystem::path manifest_path, out_path, emb_dir;
  auto* features = app.add_subcommand("features", "Extract 477 hand-crafted features per manifest row");
  features->add_option("--manifest", manifest_path, "Manifest CSV")->required();
  features->add_option("--out", out_path, "Output FeatureTable file")->required();
  features->add_option("--workers", workers, "Worker threads");

  auto* pool = app.add_subcommand("pool", "Pool a directory of EMB1 files into a FeatureTable");
  pool->add_option("--embeddings", emb_dir, "Directory of .emb files")->required();
  pool->add_option("--out", out_path, "Output FeatureTable file")->required();

  respire::pipeline::RunConfig run;
  std::optional<std::uint64_t> seed;
  std::string algorithms = "LR,SVM,RF,AB";
  std::string head_units;
  bool no_balance = false;
  std::filesystem::path table_path, embeddings_path;
  auto* evaluate = app.add_subcommand("evaluate", "User-grouped nested cross-validation");
  evaluate->add_option("--manifest", run.manifest, "Manifest CSV")->required();
  evaluate->add_option("--modality", run.modality, "C, B or CB")->required();
  evaluate->add_option("--features", run.features, "handcrafted or emb:<NAME>")->required();
  evaluate->add_option("--approach", run.approach, "fe (shallow classifiers) or ft (MLP head)")->required();
  evaluate->add_option("--seed", seed, "Root seed (required)");
  evaluate->add_option("--out", run.out, "Output directory")->required();
  evaluate->add_option("--workers", workers, "Worker threads");
  evaluate->add_option("--hyperband-R", run.hyperband_r, "Hyperband maximum epochs");
  evaluate->add_option("--hyperband-eta", run.hyperband_eta, "Hyperband reduction factor");
  evaluate->add_option("--trials", run.trials, "Random-search trials for grids above 500 points");
  evaluate->add_option("--dataset", run.dataset, "Dataset label for reports (default: manifest name)");
  evaluate->add_option("--table", table_path, "Precomputed FeatureTable");
  evaluate->add_option("--embeddings", embeddings_path, "EMB1 directory for emb:<NAME> features");
  evaluate->add_option("--algorithms", algorithms, "Comma-separated subset of LR,SVM,RF,AB");
  evaluate->add_option("--head-units", head_units, "Comma-separated hidden-unit subset for the head search");
  evaluate->add_flag("--no-balance", no_balance, "Skip random under-sampling");
  evaluate->add_flag("--union", run.union_modalities, "CB as independent cough and breath rows");

  std::vector<std::filesystem::path> reports;
  auto* footprint = app.add_subcommand("footprint", "Footprint table from backbones and report files");
  footprint->add_option("reports", reports, "report.json files");
  footprint->add_option("--out", out_path, "Write the table here as well");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitValidation;
  }

  try {
    const auto started = std::chrono::steady_clock::now();
    if (features->parsed()) {
      const auto manifest = respire::eval::load_manifest(manifest_path);
      auto result = respire::pipeline::extract_features(manifest, workers);
      for (const auto& f : result.failures) {
        spdlog::warn("line {} ({}): {}", f.line, f.sample_id, f.message);
      }
      respire::eval::write_feature_table(result.table, out_path);
      spdlog::info("wrote {} x {} table to {}", result.table.values.rows(), result.table.dim(), out_path.string());
    } else if (pool->parsed()) {
      const auto table = respire::pipeline::pool_directory(emb_dir);
      respire::eval::write_feature_table(table, out_path);
      spdlog::info("wrote {} x {} table to {}", table.values.rows(), table.dim(), out_path.string());
    } else if (evaluate->parsed()) {
      if (!seed) {
        spdlog::error("--seed is required: every run must name its seed");
        return kExitValidation;
      }
      run.seed = *seed;
      run.workers = workers;
      run.algorithms = split_list(algorithms);
      for (const auto& u : split_list(head_units)) run.head_units.push_back(std::stoi(u));
      run.balance = !no_balance;
      if (!table_path.empty()) run.table = table_path;
      if (!embeddings_path.empty()) run.embeddings = embeddings_path;
      const auto report = respire::pipeline::run_evaluation(run, [](const std::string& s) { spdlog::info("{}", s); });
      respire::eval::write_report_files(report, run.out);
      std::cout << respire::eval::summary_table(report);
    } else if (footprint->parsed()) {
      auto entries = respire::footprint::backbone_table();
      for (const auto& p : reports) {
        const auto bytes = respire::io::read_file(p);
        const auto r = respire::eval::parse_report(std::string(bytes.begin(), bytes.end()));
        for (auto e : r.footprint) {
          e.component = r.run.dataset + "/" + r.run.modality + "/" + r.run.features + " " + e.component;
          entries.push_back(std::move(e));
        }
      }
      const std::string table = respire::eval::footprint_table(entries);
      std::cout << table;
      if (!out_path.empty()) respire::io::write_text_atomic(out_path, table);
    }
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - started;
    spdlog::info("done in {:.1f} s", elapsed.count());
    return 0;
  } catch (const respire::Error& e) {
    spdlog::error("{}", e.what());
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitRuntime;
  }
}
