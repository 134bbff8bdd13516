#pragma once

#include <functional>
#include <string>
#include <vector>

#include "respire/classifiers.hpp"
#include "respire/feature_table.hpp"
#include "respire/folds.hpp"
#include "respire/head.hpp"
#include "respire/search_space.hpp"

namespace respire::eval {

enum class Approach { kFeatureExtraction, kFineTuning };

Approach parse_approach(std::string_view s);  // "fe" or "ft"
std::string_view approach_name(Approach a);

struct FoldResult {
  int fold = 0;
  std::size_t train_rows = 0;
  std::size_t test_rows = 0;
  std::size_t train_users = 0;
  std::size_t test_users = 0;
  double pca_threshold = 0.0;  // 0 on the head path
  int pca_components = 0;
  std::string params;
  double inner_pr_auc = 0.0;   // mean inner-validation score of the chosen config
  double pr_auc = 0.0;         // outer test score
  std::uint64_t model_bytes = 0;
  std::uint64_t parameter_count = 0;
  int candidates = 0;
};

struct CellResult {
  std::string algorithm;  // LR, SVM, RF, AB or MLP
  std::vector<FoldResult> folds;
  double mean_pr_auc = 0.0;
};

/// Called once per outer fold with the distinct users on each side, before any fitting.
using FoldObserver = std::function<void(int fold, const std::vector<std::string>& train_users,
                                        const std::vector<std::string>& test_users)>;

struct CvOptions {
  std::uint64_t seed = 0;
  unsigned workers = 1;
  int trials = learners::kRandomSearchTrials;
  head::HyperbandOptions hyperband;
  head::HeadSpace head_space;
  FoldObserver observer;
};

/// Outer folds from `plan`; inside each development set, every (PCA threshold, hyperparameter)
/// candidate is scored by mean PR-AUC over the inner folds, then the best is refit on the whole
/// development set and scored on the held-out users. Standardizer and PCA are fit on training
/// rows only at every level.
CellResult nested_cv_shallow(const EvalData& data, learners::Algorithm algorithm, const FoldPlan& plan,
                             const CvOptions& options);

/// Same protocol with Hyperband over the MLP head space instead of the shallow grid.
CellResult nested_cv_head(const EvalData& data, const FoldPlan& plan, const CvOptions& options);

}  // namespace respire::eval
