#include "respire/search_space.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "respire/pca.hpp"

namespace respire::learners {

namespace {

const std::vector<double> kRegularization = {1e-3, 1e-2, 1e-1, 1, 10, 100, 1000};
const std::vector<double> kKernelCoef = {1e-3, 1e-2, 1e-1, 1, 10};
const std::vector<int> kDegrees = {2, 3, 4, 5};
const std::vector<int> kEstimators = {10, 20, 50, 100};
const std::vector<double> kLearningRates = {1, .5, .1, .05, .01, .001};
const std::vector<int> kMinSamplesSplit = {2, 8, 10, 12};
const std::vector<int> kMaxDepth = {10, 30, 50};

template <class T>
std::vector<std::string> render(const std::vector<T>& v) {
  std::vector<std::string> out;
  for (const T& x : v) {
    std::string s = std::to_string(x);
    if constexpr (std::is_floating_point_v<T>) {
      s.erase(s.find_last_not_of('0') + 1);
      if (s.back() == '.') s.pop_back();
    }
    out.push_back(s);
  }
  return out;
}

}  // namespace

std::size_t SearchSpace::grid_size() const {
  std::size_t n = 1;
  for (const auto& a : axes) n *= a.values.size();
  return n;
}

SearchSpace enumerate_space(Algorithm a) {
  SearchSpace s{a, {}};
  switch (a) {
    case Algorithm::kLR:
      s.axes = {{"penalty", {"l1", "l2"}}, {"C", render(kRegularization)}};
      break;
    case Algorithm::kSVM:
      s.axes = {{"C", render(kRegularization)},
                {"kernel", {"rbf", "poly", "sigmoid"}},
                {"gamma", render(kKernelCoef)},
                {"degree", render(kDegrees)}};
      break;
    case Algorithm::kRF:
      s.axes = {{"n_estimators", render(kEstimators)},
                {"min_samples_split", render(kMinSamplesSplit)},
                {"max_depth", render(kMaxDepth)},
                {"criterion", {"entropy", "gini"}}};
      break;
    case Algorithm::kAB:
      s.axes = {{"n_estimators", render(kEstimators)}, {"learning_rate", render(kLearningRates)}};
      break;
  }
  return s;
}

std::vector<Hyperparams> expand_grid(Algorithm a) {
  std::vector<Hyperparams> out;
  switch (a) {
    case Algorithm::kLR:
      for (Penalty p : {Penalty::kL1, Penalty::kL2}) {
        for (double c : kRegularization) out.emplace_back(LrParams{p, c});
      }
      break;
    case Algorithm::kSVM:
      for (double c : kRegularization) {
        for (Kernel k : {Kernel::kRbf, Kernel::kPoly, Kernel::kSigmoid}) {
          for (double g : kKernelCoef) {
            for (int d : kDegrees) out.emplace_back(SvmParams{k, c, g, d});
          }
        }
      }
      break;
    case Algorithm::kRF:
      for (int n : kEstimators) {
        for (int m : kMinSamplesSplit) {
          for (int d : kMaxDepth) {
            for (Criterion c : {Criterion::kEntropy, Criterion::kGini}) out.emplace_back(RfParams{n, m, d, c});
          }
        }
      }
      break;
    case Algorithm::kAB:
      for (int n : kEstimators) {
        for (double lr : kLearningRates) out.emplace_back(AbParams{n, lr});
      }
      break;
  }
  return out;
}

std::vector<Candidate> shallow_candidates(Algorithm a, std::uint64_t seed, int trials) {
  const std::vector<Hyperparams> grid = expand_grid(a);
  const std::vector<double>& thresholds = pca_thresholds();
  const std::size_t total = grid.size() * thresholds.size();
  std::vector<std::size_t> picks(total);
  std::iota(picks.begin(), picks.end(), 0);
  if (total > kGridSearchLimit) {
    const auto want = std::min<std::size_t>(total, static_cast<std::size_t>(std::max(1, trials)));
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(a)}));
    for (std::size_t i = 0; i < want; ++i) std::swap(picks[i], picks[i + uniform_index(rng, total - i)]);
    picks.resize(want);
    std::sort(picks.begin(), picks.end());
  }
  std::vector<Candidate> out;
  out.reserve(picks.size());
  for (std::size_t k : picks) out.push_back({thresholds[k % thresholds.size()], grid[k / thresholds.size()]});
  return out;
}

}  // namespace respire::learners
