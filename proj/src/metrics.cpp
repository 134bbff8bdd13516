#include "respire/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "respire/errors.hpp"

namespace respire::eval {

double pr_auc(const std::vector<double>& scores, const Labels& labels) {
  if (scores.size() != labels.size()) throw Error(ErrorCode::kDimensionMismatch, "scores and labels differ in length");
  const std::size_t n = scores.size();
  const auto positives = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
  if (positives == 0 || positives == n) throw Error(ErrorCode::kSingleClass, "average precision needs both labels");
  for (double s : scores) {
    if (std::isnan(s)) throw Error(ErrorCode::kNonFiniteFeature, "score is NaN");
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  // A positive at slot k (1-based) of a tie group of size g holding p positives, placed after
  // `seen` items of which `hits` are positive, has expected precision
  //   (hits + 1 + (k-1)(p-1)/(g-1)) / (seen + k).
  double ap = 0.0;
  std::size_t seen = 0, hits = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    std::size_t p = 0;
    while (j < n && scores[order[j]] == scores[order[i]]) p += labels[order[j++]] == 1;
    const std::size_t g = j - i;
    if (p > 0) {
      double sum = 0.0;
      for (std::size_t k = 1; k <= g; ++k) {
        const double others = g > 1 ? static_cast<double>(k - 1) * static_cast<double>(p - 1) / static_cast<double>(g - 1) : 0.0;
        sum += (static_cast<double>(hits) + 1.0 + others) / static_cast<double>(seen + k);
      }
      ap += static_cast<double>(p) * sum / static_cast<double>(g);
    }
    seen += g;
    hits += p;
    i = j;
  }
  return ap / static_cast<double>(positives);
}

}  // namespace respire::eval
