#pragma once

#include <map>
#include <string>
#include <vector>

#include "respire/random.hpp"

namespace respire::eval {

inline constexpr int kFolds = 5;

/// Seeded shuffle of the distinct users followed by round-robin assignment to k folds.
/// Throws kTooFewUsers when there are fewer users than folds.
std::map<std::string, int> user_grouped_folds(const std::vector<std::string>& users, int k, std::uint64_t seed);

struct FoldPlan {
  int k = kFolds;
  std::uint64_t seed = 0;
  std::map<std::string, int> outer;               // user -> outer fold
  std::vector<std::map<std::string, int>> inner;  // per outer fold: development user -> inner fold

  /// Row indices of the development (not f) and test (f) parts of outer fold f.
  std::vector<int> development_rows(int fold, const std::vector<std::string>& row_users) const;
  std::vector<int> test_rows(int fold, const std::vector<std::string>& row_users) const;
};

/// Outer folds over all users, then k inner folds over each development set.
/// Throws kTooFewUsers if any development set has fewer than k users.
FoldPlan make_fold_plan(const std::vector<std::string>& users, std::uint64_t seed, int k = kFolds);

/// Number of broken invariants: users in several or no outer folds, inner folds that do not
/// partition the development users, fold sizes differing by more than one.
int count_plan_violations(const FoldPlan& plan, const std::vector<std::string>& users);

}  // namespace respire::eval
