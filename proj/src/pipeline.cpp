#include "respire/pipeline.hpp"

#include <algorithm>
#include <set>

#include "respire/audio.hpp"
#include "respire/embedding.hpp"
#include "respire/errors.hpp"
#include "respire/handcrafted.hpp"
#include "respire/parallel.hpp"

namespace respire::pipeline {

namespace {

std::optional<std::string> backbone_of(const std::string& features) {
  if (features == "handcrafted") return std::nullopt;
  if (features.rfind("emb:", 0) == 0) return features.substr(4);
  throw Error(ErrorCode::kInvalidArgument, "features must be 'handcrafted' or 'emb:<NAME>', got '" + features + "'");
}

}  // namespace

ExtractionResult extract_features(const eval::Manifest& manifest, unsigned workers) {
  const std::size_t n = manifest.rows.size();
  if (n == 0) throw Error(ErrorCode::kNoInput, "manifest has no rows");
  std::vector<std::vector<double>> values(n);
  std::vector<std::string> errors(n);
  parallel_for(n, workers, [&](std::size_t i) {
    const auto& row = manifest.rows[i];
    try {
      audio::AudioClip clip = audio::decode_wav(manifest.resolve(row));
      clip.source_id = row.sample_id;
      values[i] = handcrafted::extract_handcrafted(clip).values;
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  });

  ExtractionResult out;
  out.table.kind = FeatureKind::kHandcrafted;
  std::vector<std::size_t> ok;
  for (std::size_t i = 0; i < n; ++i) {
    if (errors[i].empty()) {
      ok.push_back(i);
    } else {
      out.failures.push_back({manifest.rows[i].line, manifest.rows[i].sample_id, errors[i]});
    }
  }
  if (static_cast<double>(out.failures.size()) > kFailureBudget * static_cast<double>(n)) {
    std::string detail;
    for (std::size_t k = 0; k < std::min<std::size_t>(3, out.failures.size()); ++k) {
      const auto& f = out.failures[k];
      detail += "; line " + std::to_string(f.line) + " (" + f.sample_id + "): " + f.message;
    }
    throw Error(ErrorCode::kCorruptFile, std::to_string(out.failures.size()) + " of " + std::to_string(n) +
                                             " files failed, above the 5% budget" + detail);
  }
  out.table.values.resize(static_cast<Eigen::Index>(ok.size()), handcrafted::kVectorLength);
  for (std::size_t k = 0; k < ok.size(); ++k) {
    const auto& v = values[ok[k]];
    for (std::size_t j = 0; j < v.size(); ++j) out.table.values(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) = v[j];
    out.table.sample_ids.push_back(manifest.rows[ok[k]].sample_id);
  }
  return out;
}

eval::FeatureTable pool_directory(const std::filesystem::path& dir) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) throw Error(ErrorCode::kNoInput, dir.string() + " is not a directory");
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".emb") files.push_back(e.path());
  }
  if (files.empty()) throw Error(ErrorCode::kNoInput, "no .emb files in " + dir.string());
  std::sort(files.begin(), files.end());

  eval::FeatureTable t;
  t.kind = FeatureKind::kPooledEmbedding;
  std::string backbone;
  std::vector<std::vector<double>> rows;
  std::set<std::string> seen;
  for (const auto& f : files) {
    const auto set = embedding::read_embedding_file(f);
    if (rows.empty()) {
      backbone = set.config.name;
    } else if (set.config.name != backbone) {
      throw Error(ErrorCode::kDimensionMismatch, f.filename().string() + " holds " + set.config.name +
                                                     " embeddings, earlier files hold " + backbone);
    }
    if (!seen.insert(set.sample_id).second) {
      throw Error(ErrorCode::kDuplicateSampleId, "sample '" + set.sample_id + "' appears in several files");
    }
    rows.push_back(embedding::pool(set).values);
    t.sample_ids.push_back(set.sample_id);
  }
  t.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) t.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  }
  return t;
}

void validate_run_config(const RunConfig& c) {
  eval::parse_modality_choice(c.modality);
  eval::parse_approach(c.approach);
  if (const auto b = backbone_of(c.features)) {
    embedding::validate_config(*b);
    if (!c.table && !c.embeddings) {
      throw Error(ErrorCode::kInvalidArgument, "embedding features need --embeddings <dir> or --table <file>");
    }
  }
  if (c.approach == "fe") {
    if (c.algorithms.empty()) throw Error(ErrorCode::kInvalidArgument, "no algorithms selected");
    for (const auto& a : c.algorithms) learners::parse_algorithm(a);
  }
  head::hyperband_schedule(c.hyperband_r, c.hyperband_eta);
  if (c.trials < 1) throw Error(ErrorCode::kInvalidBudget, "trials must be >= 1");
  if (c.workers < 1) throw Error(ErrorCode::kInvalidArgument, "workers must be >= 1");
  const head::HeadSpace defaults;
  for (int u : c.head_units) {
    if (std::find(defaults.hidden_units.begin(), defaults.hidden_units.end(), u) == defaults.hidden_units.end()) {
      throw Error(ErrorCode::kInvalidArgument, "hidden units " + std::to_string(u) + " outside the search space");
    }
  }
}

eval::ExperimentReport run_evaluation(const RunConfig& c, const ProgressFn& progress) {
  validate_run_config(c);
  const auto say = [&](const std::string& s) {
    if (progress) progress(s);
  };
  eval::Manifest manifest = eval::load_manifest(c.manifest);
  say("loaded " + std::to_string(manifest.rows.size()) + " manifest rows");
  if (c.balance) {
    manifest = eval::undersample(manifest, derive_seed(c.seed, {10}));
    say("balanced to " + std::to_string(manifest.rows.size()) + " rows");
  }

  const auto backbone = backbone_of(c.features);
  eval::FeatureTable table;
  if (c.table) {
    table = eval::read_feature_table(*c.table);
  } else if (backbone) {
    table = pool_directory(*c.embeddings);
  } else {
    auto extracted = extract_features(manifest, c.workers);
    for (const auto& f : extracted.failures) say("skipped line " + std::to_string(f.line) + " (" + f.sample_id + "): " + f.message);
    table = std::move(extracted.table);
  }
  if (backbone) {
    const auto expected = 2 * embedding::validate_config(*backbone).embedding_dim;
    if (table.dim() != expected) {
      throw Error(ErrorCode::kDimensionMismatch, "features for " + *backbone + " must have " + std::to_string(expected) +
                                                     " columns, table has " + std::to_string(table.dim()));
    }
  } else if (table.dim() != handcrafted::kVectorLength) {
    throw Error(ErrorCode::kDimensionMismatch, "hand-crafted table must have 477 columns, has " + std::to_string(table.dim()));
  }

  const auto choice = eval::parse_modality_choice(c.modality);
  const eval::EvalData data = eval::assemble(manifest, table, choice,
                                             c.union_modalities ? eval::CombineMode::kUnion : eval::CombineMode::kConcatenate);
  const eval::FoldPlan plan = eval::make_fold_plan(data.users, derive_seed(c.seed, {11}));

  eval::ExperimentReport report;
  auto& run = report.run;
  run.dataset = c.dataset.empty() ? c.manifest.stem().string() : c.dataset;
  run.modality = c.modality;
  run.features = c.features;
  run.approach = c.approach;
  run.seed = c.seed;
  run.rows = data.y.size();
  run.users = plan.outer.size();
  run.positives = static_cast<std::size_t>(std::count(data.y.begin(), data.y.end(), 1));
  run.dropped_rows = data.dropped;
  run.feature_dim = static_cast<std::size_t>(data.x.cols());
  run.hyperband_r = c.hyperband_r;
  run.hyperband_eta = c.hyperband_eta;
  run.trials = c.trials;

  eval::CvOptions options;
  options.seed = derive_seed(c.seed, {12});
  options.workers = c.workers;
  options.trials = c.trials;
  options.hyperband.max_epochs = c.hyperband_r;
  options.hyperband.eta = c.hyperband_eta;
  if (!c.head_units.empty()) options.head_space.hidden_units = c.head_units;

  if (c.approach == "fe") {
    for (const auto& name : c.algorithms) {
      say("nested CV for " + name);
      report.cells.push_back(eval::nested_cv_shallow(data, learners::parse_algorithm(name), plan, options));
    }
  } else {
    say("nested CV for the MLP head");
    report.cells.push_back(eval::nested_cv_head(data, plan, options));
  }

  if (backbone) report.footprint.push_back(footprint::backbone_footprint(*backbone));
  for (const auto& cell : report.cells) {
    for (const auto& f : cell.folds) {
      report.footprint.push_back({cell.algorithm + " fold " + std::to_string(f.fold), f.parameter_count,
                                  footprint::kBytesPerParameter * f.parameter_count, f.model_bytes, std::nullopt});
    }
  }
  return report;
}

}  // namespace respire::pipeline
