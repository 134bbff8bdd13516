#include "respire/nested_cv.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include "respire/errors.hpp"
#include "respire/metrics.hpp"
#include "respire/parallel.hpp"
#include "respire/pca.hpp"

namespace respire::eval {

namespace {

using learners::Standardizer;

Matrix take_rows(const Matrix& x, const std::vector<int>& rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = x.row(rows[i]);
  return out;
}

Labels take(const Labels& y, const std::vector<int>& rows) {
  Labels out;
  for (int r : rows) out.push_back(y[static_cast<std::size_t>(r)]);
  return out;
}

std::vector<std::string> users_of(const std::vector<std::string>& users, const std::vector<int>& rows) {
  std::set<std::string> s;
  for (int r : rows) s.insert(users[static_cast<std::size_t>(r)]);
  return {s.begin(), s.end()};
}

bool both_classes(const Labels& y) {
  const auto pos = std::count(y.begin(), y.end(), 1);
  return pos > 0 && pos < static_cast<std::ptrdiff_t>(y.size());
}

struct OuterSplit {
  std::vector<int> dev, test;
  std::vector<std::string> dev_users, test_users;
};

OuterSplit split_outer(const EvalData& data, const FoldPlan& plan, int f, const CvOptions& options) {
  OuterSplit s{plan.development_rows(f, data.users), plan.test_rows(f, data.users), {}, {}};
  s.dev_users = users_of(data.users, s.dev);
  s.test_users = users_of(data.users, s.test);
  std::vector<std::string> shared;
  std::set_intersection(s.dev_users.begin(), s.dev_users.end(), s.test_users.begin(), s.test_users.end(),
                        std::back_inserter(shared));
  if (!shared.empty()) throw std::logic_error("user '" + shared.front() + "' on both sides of outer fold " + std::to_string(f));
  if (options.observer) options.observer(f, s.dev_users, s.test_users);
  if (!both_classes(take(data.y, s.test))) {
    throw Error(ErrorCode::kSingleClass, "outer fold " + std::to_string(f) + " test users hold a single label");
  }
  return s;
}

// Inner folds as positions within the development rows.
std::vector<head::Fold> inner_folds(const EvalData& data, const FoldPlan& plan, int f, const std::vector<int>& dev) {
  std::vector<head::Fold> folds(static_cast<std::size_t>(plan.k));
  const auto& assign = plan.inner[static_cast<std::size_t>(f)];
  for (std::size_t i = 0; i < dev.size(); ++i) {
    const int g = assign.at(data.users[static_cast<std::size_t>(dev[i])]);
    for (int j = 0; j < plan.k; ++j) (j == g ? folds[j].validation : folds[j].train).push_back(static_cast<int>(i));
  }
  return folds;
}

// Standardizer and PCA fitted on one training block, with every threshold's projections.
struct Prepared {
  std::map<double, Matrix> train, other;
  std::map<double, int> components;
};

Prepared prepare(const Matrix& train, const Matrix& other, const std::set<double>& thresholds) {
  const Standardizer st = Standardizer::fit(train);
  const Matrix zt = st.apply(train);
  const Matrix zo = st.apply(other);
  const learners::PcaBasis basis = learners::pca_decompose(zt);
  Prepared p;
  for (double t : thresholds) {
    const auto model = learners::pca_truncate(basis, t);
    p.train[t] = learners::pca_transform(model, zt);
    p.other[t] = learners::pca_transform(model, zo);
    p.components[t] = static_cast<int>(model.n_components());
  }
  return p;
}

double mean_ignoring_nan(const std::vector<double>& v) {
  double s = 0;
  int n = 0;
  for (double x : v) {
    if (!std::isnan(x)) {
      s += x;
      ++n;
    }
  }
  return n ? s / n : std::numeric_limits<double>::quiet_NaN();
}

void finish(CellResult& cell) {
  double sum = 0;
  for (const auto& f : cell.folds) sum += f.pr_auc;
  cell.mean_pr_auc = sum / static_cast<double>(cell.folds.size());
}

}  // namespace

Approach parse_approach(std::string_view s) {
  if (s == "fe") return Approach::kFeatureExtraction;
  if (s == "ft") return Approach::kFineTuning;
  throw Error(ErrorCode::kInvalidArgument, "approach must be fe or ft, got '" + std::string(s) + "'");
}

std::string_view approach_name(Approach a) { return a == Approach::kFeatureExtraction ? "fe" : "ft"; }

CellResult nested_cv_shallow(const EvalData& data, learners::Algorithm algorithm, const FoldPlan& plan,
                             const CvOptions& options) {
  CellResult cell;
  cell.algorithm = std::string(learners::algorithm_name(algorithm));
  const auto alg = static_cast<std::uint64_t>(algorithm);
  for (int f = 0; f < plan.k; ++f) {
    const OuterSplit outer = split_outer(data, plan, f, options);
    const Matrix x_dev = take_rows(data.x, outer.dev);
    const Labels y_dev = take(data.y, outer.dev);
    const auto folds = inner_folds(data, plan, f, outer.dev);
    const auto candidates =
        learners::shallow_candidates(algorithm, derive_seed(options.seed, {2, alg, static_cast<std::uint64_t>(f)}), options.trials);
    std::set<double> thresholds;
    for (const auto& c : candidates) thresholds.insert(c.pca_threshold);

    std::vector<Prepared> prepared(folds.size());
    std::vector<Labels> y_tr(folds.size()), y_val(folds.size());
    parallel_for(folds.size(), options.workers, [&](std::size_t j) {
      prepared[j] = prepare(take_rows(x_dev, folds[j].train), take_rows(x_dev, folds[j].validation), thresholds);
      y_tr[j] = take(y_dev, folds[j].train);
      y_val[j] = take(y_dev, folds[j].validation);
    });

    const std::size_t jobs = candidates.size() * folds.size();
    std::vector<double> scores(jobs, std::numeric_limits<double>::quiet_NaN());
    parallel_for(jobs, options.workers, [&](std::size_t job) {
      const std::size_t c = job / folds.size(), j = job % folds.size();
      if (!both_classes(y_val[j])) return;
      const double t = candidates[c].pca_threshold;
      const auto model = learners::fit(candidates[c].params, prepared[j].train.at(t), y_tr[j],
                                       derive_seed(options.seed, {3, alg, static_cast<std::uint64_t>(f), j, c}));
      scores[job] = pr_auc(model.score(prepared[j].other.at(t)), y_val[j]);
    });

    std::size_t best = 0;
    double best_score = -1.0;
    for (std::size_t c = 0; c < candidates.size(); ++c) {
      const double m = mean_ignoring_nan({scores.begin() + static_cast<std::ptrdiff_t>(c * folds.size()),
                                          scores.begin() + static_cast<std::ptrdiff_t>((c + 1) * folds.size())});
      if (m > best_score) {
        best_score = m;
        best = c;
      }
    }
    if (best_score < 0) throw Error(ErrorCode::kSingleClass, "no inner validation fold holds both labels");

    const auto& chosen = candidates[best];
    const Prepared refit = prepare(x_dev, take_rows(data.x, outer.test), {chosen.pca_threshold});
    const auto model = learners::fit(chosen.params, refit.train.at(chosen.pca_threshold), y_dev,
                                     derive_seed(options.seed, {4, alg, static_cast<std::uint64_t>(f)}));
    FoldResult r;
    r.fold = f;
    r.train_rows = outer.dev.size();
    r.test_rows = outer.test.size();
    r.train_users = outer.dev_users.size();
    r.test_users = outer.test_users.size();
    r.pca_threshold = chosen.pca_threshold;
    r.pca_components = refit.components.at(chosen.pca_threshold);
    r.params = learners::describe(chosen.params);
    r.inner_pr_auc = best_score;
    r.pr_auc = pr_auc(model.score(refit.other.at(chosen.pca_threshold)), take(data.y, outer.test));
    const ModelBlob blob = model.to_blob();
    r.model_bytes = encode_blob(blob).size();
    r.parameter_count = blob.scalar_count();
    r.candidates = static_cast<int>(candidates.size());
    cell.folds.push_back(std::move(r));
  }
  finish(cell);
  return cell;
}

CellResult nested_cv_head(const EvalData& data, const FoldPlan& plan, const CvOptions& options) {
  CellResult cell;
  cell.algorithm = "MLP";
  for (int f = 0; f < plan.k; ++f) {
    const OuterSplit outer = split_outer(data, plan, f, options);
    const Matrix x_dev = take_rows(data.x, outer.dev);
    const Labels y_dev = take(data.y, outer.dev);
    head::HyperbandOptions hb = options.hyperband;
    hb.workers = options.workers;
    const auto search = head::hyperband_search(options.head_space, x_dev, y_dev, inner_folds(data, plan, f, outer.dev),
                                               derive_seed(options.seed, {5, static_cast<std::uint64_t>(f)}), hb);
    head::HeadConfig cfg = search.best;
    cfg.seed = derive_seed(options.seed, {6, static_cast<std::uint64_t>(f)});
    const auto model = head::train(cfg, x_dev, y_dev, Matrix(0, x_dev.cols()), Labels{}, hb.max_epochs, hb.train);
    FoldResult r;
    r.fold = f;
    r.train_rows = outer.dev.size();
    r.test_rows = outer.test.size();
    r.train_users = outer.dev_users.size();
    r.test_users = outer.test_users.size();
    r.params = cfg.describe();
    r.inner_pr_auc = search.best_score;
    r.pr_auc = pr_auc(model.score(take_rows(data.x, outer.test)), take(data.y, outer.test));
    r.model_bytes = model.serialize().size();
    r.parameter_count = model.parameter_count();
    r.candidates = static_cast<int>(search.trials.size());
    cell.folds.push_back(std::move(r));
  }
  finish(cell);
  return cell;
}

}  // namespace respire::eval
