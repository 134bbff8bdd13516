#include "doctest.h"

#include <algorithm>
#include <map>
#include <set>

#include "datasets.hpp"
#include "fixtures.hpp"
#include "respire/binary_io.hpp"
#include "respire/embedding.hpp"
#include "respire/errors.hpp"
#include "respire/feature_table.hpp"
#include "respire/folds.hpp"
#include "respire/footprint.hpp"
#include "respire/manifest.hpp"
#include "respire/nested_cv.hpp"
#include "respire/pipeline.hpp"
#include "respire/report.hpp"
#include "synthetic.hpp"

using namespace respire;
using namespace respire::eval;
using namespace respire::testing;

namespace {

const std::string kHeader = "sample_id,user_id,modality,label,path,pair_id\n";

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::kIoError;
}

Manifest synthetic_counts(int cough_pos, int cough_neg, int breath_pos, int breath_neg) {
  Manifest m;
  int id = 0;
  auto add = [&](Modality mod, int label, int n) {
    for (int i = 0; i < n; ++i, ++id) {
      m.rows.push_back({"s" + std::to_string(id), "u" + std::to_string(id % 97), mod, label, "p" + std::to_string(id), "", id + 2});
    }
  };
  add(Modality::kCough, 1, cough_pos);
  add(Modality::kCough, 0, cough_neg);
  add(Modality::kBreath, 1, breath_pos);
  add(Modality::kBreath, 0, breath_neg);
  return m;
}

std::map<std::pair<Modality, int>, int> counts(const Manifest& m) {
  std::map<std::pair<Modality, int>, int> c;
  for (const auto& r : m.rows) ++c[{r.modality, r.label}];
  return c;
}

}  // namespace

TEST_CASE("manifest parsing and validation") {
  const Manifest m = parse_manifest(kHeader +
                                    "a,u1,cough,positive,a.wav,p1\n"
                                    "b,u1,breath,positive,b.wav,p1\n"
                                    "c,u2,cough,negative,c.wav,\n"
                                    "\"d,x\",u3,breath,negative,d.wav\n");
  REQUIRE(m.rows.size() == 4);
  CHECK(m.rows[3].sample_id == "d,x");
  CHECK(m.rows[2].line == 4);
  CHECK(m.rows[0].label == 1);

  try {
    parse_manifest(kHeader + "a,u1,cough,positive,a.wav,\nb,u1,cough,positive,b.wav,\na,u2,cough,negative,c.wav,\n");
    FAIL("expected duplicate");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kDuplicateSampleId);
    CHECK(std::string(e.what()).find("lines 2 and 4") != std::string::npos);
  }
  CHECK(code_of([] { parse_manifest(kHeader + "a,u1,cough,positive,a.wav,p\nb,u1,cough,positive,b.wav,p\n"); }) ==
        ErrorCode::kDanglingPair);
  CHECK(code_of([] { parse_manifest(kHeader + "a,u1,cough,positive,a.wav,p\n"); }) == ErrorCode::kDanglingPair);
  CHECK(code_of([] { parse_manifest(kHeader + "a,u1,cough,positive,a.wav,p\nb,u2,breath,positive,b.wav,p\n"); }) ==
        ErrorCode::kDanglingPair);
  try {
    parse_manifest(kHeader + "a,u1,cough,positive,a.wav,\nb,u1,sneeze,positive,b.wav,\n");
    FAIL("expected malformed");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kMalformedRow);
    CHECK(std::string(e.what()).find(":3") != std::string::npos);
  }
  CHECK(code_of([] { parse_manifest(kHeader + "a,u1,cough,maybe,a.wav,\n"); }) == ErrorCode::kMalformedRow);
  CHECK(code_of([] { parse_manifest("id,user\n"); }) == ErrorCode::kMalformedRow);
  CHECK(code_of([] { parse_manifest(kHeader + "a,u1,cough,positive\n"); }) == ErrorCode::kMalformedRow);
  CHECK(code_of([] { parse_manifest(kHeader + "a,u1,cough,positive,x.wav,\nb,u2,cough,positive,x.wav,\n"); }) ==
        ErrorCode::kMalformedRow);
}

TEST_CASE("undersampling reproduces the balanced counts") {
  const Manifest coswara = synthetic_counts(1267, 435, 0, 0);
  const auto c = counts(undersample(coswara, 3));
  CHECK(c.at({Modality::kCough, 1}) == 435);
  CHECK(c.at({Modality::kCough, 0}) == 435);
  const auto v = counts(undersample(synthetic_counts(547, 5625, 0, 0), 3));
  CHECK(v.at({Modality::kCough, 1}) == 547);
  CHECK(v.at({Modality::kCough, 0}) == 547);

  const Manifest balanced = synthetic_counts(10, 10, 0, 0);
  const Manifest same = undersample(balanced, 1);
  REQUIRE(same.rows.size() == 20);
  for (std::size_t i = 0; i < 20; ++i) CHECK(same.rows[i].sample_id == balanced.rows[i].sample_id);

  const Manifest both = synthetic_counts(30, 7, 4, 19);
  const Manifest out = undersample(both, 9);
  const auto b = counts(out);
  CHECK(b.at({Modality::kCough, 1}) == 7);
  CHECK(b.at({Modality::kCough, 0}) == 7);
  CHECK(b.at({Modality::kBreath, 1}) == 4);
  CHECK(b.at({Modality::kBreath, 0}) == 4);
  std::set<std::string> ids;
  for (const auto& r : both.rows) ids.insert(r.sample_id);
  for (const auto& r : out.rows) CHECK(ids.count(r.sample_id) == 1);
  CHECK(code_of([] { undersample(synthetic_counts(5, 0, 0, 0), 1); }) == ErrorCode::kSingleClass);
}

TEST_CASE("user grouped folds") {
  auto sizes = [](const std::map<std::string, int>& a) {
    std::vector<int> s(5, 0);
    for (const auto& [u, f] : a) ++s[static_cast<std::size_t>(f)];
    std::sort(s.rbegin(), s.rend());
    return s;
  };
  std::vector<std::string> ten, seven;
  for (int i = 0; i < 10; ++i) ten.push_back("u" + std::to_string(i));
  for (int i = 0; i < 7; ++i) seven.push_back("u" + std::to_string(i));
  CHECK(sizes(user_grouped_folds(ten, 5, 1)) == std::vector<int>{2, 2, 2, 2, 2});
  CHECK(sizes(user_grouped_folds(seven, 5, 1)) == std::vector<int>{2, 2, 1, 1, 1});
  CHECK(code_of([] { user_grouped_folds({"a", "b", "c", "d"}, 5, 1); }) == ErrorCode::kTooFewUsers);
  CHECK(code_of([&] { make_fold_plan({"a", "b", "c", "d", "e", "f"}, 1); }) == ErrorCode::kTooFewUsers);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    std::vector<std::string> rows;
    for (int i = 0; i < 200; ++i) rows.push_back("user" + std::to_string((i * 7 + seed) % 43));
    const FoldPlan plan = make_fold_plan(rows, seed);
    CHECK(count_plan_violations(plan, rows) == 0);
  }
  // Sanity check of the checker itself.
  std::vector<std::string> rows(ten);
  FoldPlan plan = make_fold_plan(rows, 2);
  plan.inner[0].begin()->second = (plan.inner[0].begin()->second + 1) % 5;
  plan.inner[1][plan.outer.begin()->first] = 0;
  CHECK(count_plan_violations(plan, rows) > 0);
}

TEST_CASE("feature table round trip and corruption") {
  FeatureTable t;
  t.kind = FeatureKind::kPooledEmbedding;
  t.values = gaussian_matrix(3, 4, 1).cast<float>().cast<double>();
  t.sample_ids = {"a", "bb", "c/c"};
  const auto bytes = encode_feature_table(t);
  CHECK(bytes.size() == 12 + 3 * 4 * 4 + (4 + 1) + (4 + 2) + (4 + 3));
  const FeatureTable back = decode_feature_table(bytes);
  CHECK(back.values == t.values);
  CHECK(back.sample_ids == t.sample_ids);
  CHECK(back.kind == t.kind);
  for (std::size_t cut = 0; cut < bytes.size(); ++cut) {
    CHECK_THROWS_AS(decode_feature_table(std::span(bytes.data(), cut)), Error);
  }
  auto extra = bytes;
  extra.push_back(0);
  CHECK(code_of([&] { decode_feature_table(extra); }) == ErrorCode::kDimensionMismatch);
}

TEST_CASE("modality combination") {
  const Manifest m = parse_manifest(kHeader +
                                    "c1,u1,cough,positive,c1.wav,p1\n"
                                    "b1,u1,breath,positive,b1.wav,p1\n"
                                    "c2,u2,cough,negative,c2.wav,p2\n"
                                    "b2,u2,breath,negative,b2.wav,p2\n"
                                    "c3,u3,cough,negative,c3.wav,\n");
  FeatureTable t;
  t.values = gaussian_matrix(5, 477, 3);
  t.sample_ids = {"c1", "b1", "c2", "b2", "c3"};
  const EvalData cb = combine_modalities(m, t);
  REQUIRE(cb.x.rows() == 2);
  CHECK(cb.x.cols() == 954);
  CHECK(cb.dropped == 1);
  CHECK(cb.x.row(1).head(477) == t.values.row(2));
  CHECK(cb.x.row(1).tail(477) == t.values.row(3));
  CHECK(cb.y == Labels{1, 0});
  CHECK(cb.kind == FeatureKind::kConcatenated);

  FeatureTable pooled;
  pooled.kind = FeatureKind::kPooledEmbedding;
  pooled.values = gaussian_matrix(5, 256, 4);
  pooled.sample_ids = t.sample_ids;
  CHECK(combine_modalities(m, pooled).x.cols() == 512);

  const EvalData c = assemble(m, t, ModalityChoice::kCough);
  CHECK(c.x.rows() == 3);
  const EvalData u = assemble(m, t, ModalityChoice::kCombined, CombineMode::kUnion);
  CHECK(u.x.rows() == 5);
  CHECK(u.x.cols() == 477);
  const Manifest unpaired = parse_manifest(kHeader + "c1,u1,cough,positive,c1.wav,\nb1,u1,breath,positive,b1.wav,\n");
  CHECK(code_of([&] { combine_modalities(unpaired, t); }) == ErrorCode::kNoPairs);
}

TEST_CASE("nested cv keeps users apart and scores separable data") {
  EvalData d;
  const Dataset blobs = separable_blobs(120, 2.0, 5);
  d.x = Matrix(120, 6);
  d.x << blobs.x, gaussian_matrix(120, 4, 6);
  d.y = blobs.y;
  for (int i = 0; i < 120; ++i) d.users.push_back("u" + std::to_string(i / 4));
  const FoldPlan plan = make_fold_plan(d.users, 1);
  CvOptions opt;
  opt.seed = 3;
  int observed = 0;
  opt.observer = [&](int, const std::vector<std::string>& train, const std::vector<std::string>& test) {
    ++observed;
    std::vector<std::string> shared;
    std::set_intersection(train.begin(), train.end(), test.begin(), test.end(), std::back_inserter(shared));
    CHECK(shared.empty());
    CHECK(train.size() + test.size() == 30);
  };
  const CellResult lr = nested_cv_shallow(d, learners::Algorithm::kLR, plan, opt);
  CHECK(observed == 5);
  REQUIRE(lr.folds.size() == 5);
  CHECK(lr.mean_pr_auc >= 0.95);
  for (const auto& f : lr.folds) {
    CHECK(f.candidates == 126);
    CHECK(f.pca_components >= 1);
    CHECK(f.model_bytes == 24 + 4 * static_cast<std::uint64_t>(f.pca_components + 1));
  }
  const CellResult again = nested_cv_shallow(d, learners::Algorithm::kLR, plan, opt);
  CHECK(again.mean_pr_auc == lr.mean_pr_auc);
  opt.trials = 5;
  const CellResult rf = nested_cv_shallow(d, learners::Algorithm::kRF, plan, opt);
  CHECK(rf.folds.front().candidates == 5);

  opt.hyperband.max_epochs = 27;
  opt.head_space = {{1}, {128}, {0.0, 0.1}};
  const CellResult mlp = nested_cv_head(d, plan, opt);
  REQUIRE(mlp.folds.size() == 5);
  CHECK(mlp.mean_pr_auc >= 0.9);
  CHECK(mlp.folds[0].parameter_count == 6 * 128 + 128 + 2 * 128 + 2);
}

TEST_CASE("footprint figures") {
  head::HeadConfig c;
  c.input_dim = 1024;
  CHECK(footprint::head_param_count(c) == 131458);
  c.input_dim = 256;
  CHECK(footprint::head_param_count(c) == 256 * 128 + 128 + 2 * 128 + 2);
  c.hidden_layers = 2;
  c.hidden_units = 1;
  c.input_dim = 10;
  CHECK(footprint::head_param_count(c) == 10 + 1 + 2 + 4);
  const auto y = footprint::backbone_footprint("YAMNET");
  CHECK(y.parameter_count == 3700000);
  CHECK(y.estimated_bytes == 14800000);
  CHECK(*y.reported_bytes == 16000000);
  CHECK(footprint::backbone_footprint("L3 E 512 M128").component == "OpenL3");
  CHECK(footprint::backbone_footprint("OpenL3").estimated_bytes == 18800000);
  CHECK(footprint::backbone_footprint("VGGISH").estimated_bytes == 248000000);
  CHECK(code_of([] { footprint::backbone_footprint("RESNET"); }) == ErrorCode::kUnknownConfig);
  CHECK(footprint::measure_serialized("empty", ModelBlob{}).measured_bytes == 12u);
  for (int u : {128, 512, 1024}) {
    head::HeadConfig a;
    a.input_dim = 64;
    a.hidden_units = u;
    head::HeadConfig b = a;
    b.hidden_units = u * 2;
    CHECK(footprint::head_param_count(a) < footprint::head_param_count(b));
  }
}

TEST_CASE("report json round trip") {
  ExperimentReport r;
  r.run.dataset = "demo";
  r.run.seed = 7;
  CellResult c;
  c.algorithm = "LR";
  c.folds.push_back({0, 10, 3, 8, 2, 0.9, 4, "penalty=l2 C=1", 0.8, 0.75, 44, 5, 126});
  c.mean_pr_auc = 0.75;
  r.cells.push_back(c);
  r.footprint = footprint::backbone_table();
  const std::string text = report_json(r);
  CHECK(report_json(parse_report(text)) == text);
  CHECK(text.find("\"schema\": \"report/1\"") != std::string::npos);
  CHECK(code_of([] { parse_report("{\"schema\": \"report/0\"}"); }) == ErrorCode::kVersionUnsupported);
  CHECK(code_of([] { parse_report("not json"); }) == ErrorCode::kCorruptFile);
  CHECK(summary_table(r).find("LR") != std::string::npos);
}

TEST_CASE("feature extraction over a manifest tolerates a few bad files") {
  TempDir tmp;
  std::string csv = kHeader;
  for (int i = 0; i < 100; ++i) {
    const std::string id = "s" + std::to_string(i);
    auto clip = sine(300 + 10 * i, 0.2, 16000, 0.5);
    if (i == 37) {
      io::write_text_atomic(tmp.path() / (id + ".wav"), "RIFF garbage");
    } else {
      io::write_file_atomic(tmp.path() / (id + ".wav"), audio::encode_wav(clip));
    }
    csv += id + ",u" + std::to_string(i) + ",cough," + (i % 2 ? "positive" : "negative") + "," + id + ".wav,\n";
  }
  io::write_text_atomic(tmp.path() / "m.csv", csv);
  const auto result = pipeline::extract_features(load_manifest(tmp.path() / "m.csv"), 2);
  CHECK(result.table.values.rows() == 99);
  CHECK(result.table.dim() == 477);
  REQUIRE(result.failures.size() == 1);
  CHECK(result.failures[0].sample_id == "s37");
  CHECK(result.failures[0].line == 39);

  io::write_text_atomic(tmp.path() / "small.csv", kHeader + "a,u1,cough,positive,s1.wav,\nb,u2,cough,negative,s2.wav,\n"
                                                             "c,u3,cough,negative,missing.wav,\n");
  try {
    pipeline::extract_features(load_manifest(tmp.path() / "small.csv"), 1);
    FAIL("expected failure");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("line 4 (c)") != std::string::npos);
  }
}

TEST_CASE("pooling a directory of embedding files") {
  TempDir tmp;
  const auto dir = tmp.path() / "emb";
  std::filesystem::create_directories(dir);
  CHECK(code_of([&] { pipeline::pool_directory(dir); }) == ErrorCode::kNoInput);
  for (int i = 0; i < 12; ++i) {
    embedding::EmbeddingSet s;
    s.sample_id = "s" + std::to_string(i);
    s.config = embedding::validate_config("L3 E 512 L");
    s.windows = gaussian_matrix(3 + i % 4, 512, static_cast<std::uint64_t>(i)).cast<float>();
    embedding::write_embedding_file(s, dir / embedding::embedding_file_name(s.sample_id));
  }
  const auto t = pipeline::pool_directory(dir);
  CHECK(t.values.rows() == 12);
  CHECK(t.dim() == 1024);
  CHECK(t.kind == FeatureKind::kPooledEmbedding);
  embedding::EmbeddingSet odd;
  odd.sample_id = "odd";
  odd.config = embedding::validate_config("VGGISH");
  odd.windows = gaussian_matrix(2, 128, 1).cast<float>();
  embedding::write_embedding_file(odd, dir / "odd.emb");
  CHECK(code_of([&] { pipeline::pool_directory(dir); }) == ErrorCode::kDimensionMismatch);
}

TEST_CASE("end to end run on a small synthetic cohort is deterministic") {
  TempDir tmp;
  CohortSpec spec;
  spec.users = 30;
  spec.pairs_per_user = 1;
  spec.seconds = 0.5;
  const auto manifest = write_cohort(tmp.path() / "cohort", spec);
  pipeline::RunConfig cfg;
  cfg.manifest = manifest;
  cfg.modality = "CB";
  cfg.seed = 11;
  cfg.algorithms = {"LR", "AB"};
  const auto a = report_json(pipeline::run_evaluation(cfg));
  const auto b = report_json(pipeline::run_evaluation(cfg));
  CHECK(a == b);
  const ExperimentReport r = parse_report(a);
  CHECK(r.run.feature_dim == 954);
  CHECK(r.run.rows == 30);
  REQUIRE(r.cells.size() == 2);
  for (const auto& c : r.cells) CHECK(c.folds.size() == 5);

  cfg.features = "emb:YAMNET";
  CHECK(code_of([&] { pipeline::validate_run_config(cfg); }) == ErrorCode::kInvalidArgument);
  cfg.features = "emb:RESNET";
  cfg.embeddings = tmp.path();
  CHECK(code_of([&] { pipeline::validate_run_config(cfg); }) == ErrorCode::kUnknownConfig);
}
