#include "respire/folds.hpp"

#include <algorithm>
#include <set>

#include "respire/errors.hpp"

namespace respire::eval {

namespace {

std::vector<std::string> distinct(const std::vector<std::string>& users) {
  std::vector<std::string> u(users);
  std::sort(u.begin(), u.end());
  u.erase(std::unique(u.begin(), u.end()), u.end());
  return u;
}

bool balanced(const std::map<std::string, int>& assignment, int k) {
  std::vector<int> sizes(static_cast<std::size_t>(k), 0);
  for (const auto& [u, f] : assignment) {
    if (f < 0 || f >= k) return false;
    ++sizes[static_cast<std::size_t>(f)];
  }
  const auto [lo, hi] = std::minmax_element(sizes.begin(), sizes.end());
  return *hi - *lo <= 1;
}

}  // namespace

std::map<std::string, int> user_grouped_folds(const std::vector<std::string>& users, int k, std::uint64_t seed) {
  if (k < 2) throw Error(ErrorCode::kInvalidArgument, "need at least 2 folds");
  std::vector<std::string> u = distinct(users);
  if (static_cast<int>(u.size()) < k) {
    throw Error(ErrorCode::kTooFewUsers, std::to_string(u.size()) + " users cannot fill " + std::to_string(k) + " folds");
  }
  Rng rng(seed);
  shuffle_range(u.begin(), u.end(), rng);
  std::map<std::string, int> out;
  for (std::size_t i = 0; i < u.size(); ++i) out[u[i]] = static_cast<int>(i % static_cast<std::size_t>(k));
  return out;
}

FoldPlan make_fold_plan(const std::vector<std::string>& users, std::uint64_t seed, int k) {
  FoldPlan plan;
  plan.k = k;
  plan.seed = seed;
  plan.outer = user_grouped_folds(users, k, derive_seed(seed, {0}));
  for (int f = 0; f < k; ++f) {
    std::vector<std::string> dev;
    for (const auto& [u, g] : plan.outer) {
      if (g != f) dev.push_back(u);
    }
    plan.inner.push_back(user_grouped_folds(dev, k, derive_seed(seed, {1, static_cast<std::uint64_t>(f)})));
  }
  return plan;
}

std::vector<int> FoldPlan::development_rows(int fold, const std::vector<std::string>& row_users) const {
  std::vector<int> rows;
  for (std::size_t i = 0; i < row_users.size(); ++i) {
    if (outer.at(row_users[i]) != fold) rows.push_back(static_cast<int>(i));
  }
  return rows;
}

std::vector<int> FoldPlan::test_rows(int fold, const std::vector<std::string>& row_users) const {
  std::vector<int> rows;
  for (std::size_t i = 0; i < row_users.size(); ++i) {
    if (outer.at(row_users[i]) == fold) rows.push_back(static_cast<int>(i));
  }
  return rows;
}

int count_plan_violations(const FoldPlan& plan, const std::vector<std::string>& users) {
  int violations = 0;
  const std::vector<std::string> u = distinct(users);
  for (const auto& name : u) violations += plan.outer.count(name) != 1;
  violations += plan.outer.size() != u.size();
  violations += !balanced(plan.outer, plan.k);
  violations += plan.inner.size() != static_cast<std::size_t>(plan.k);
  for (int f = 0; f < plan.k && f < static_cast<int>(plan.inner.size()); ++f) {
    std::set<std::string> dev, inner_users;
    for (const auto& [name, g] : plan.outer) {
      if (g != f) dev.insert(name);
    }
    for (const auto& [name, g] : plan.inner[static_cast<std::size_t>(f)]) {
      inner_users.insert(name);
      violations += plan.outer.count(name) && plan.outer.at(name) == f;  // test user leaked inward
    }
    violations += dev != inner_users;
    violations += !balanced(plan.inner[static_cast<std::size_t>(f)], plan.k);
  }
  return violations;
}

}  // namespace respire::eval
