#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "respire/classifiers.hpp"

namespace respire::learners {

namespace {

double impurity(double pos, double neg, Criterion c) {
  const double n = pos + neg;
  if (n <= 0) return 0.0;
  const double p = pos / n, q = neg / n;
  if (c == Criterion::kGini) return 1.0 - p * p - q * q;
  double h = 0.0;
  if (p > 0) h -= p * std::log2(p);
  if (q > 0) h -= q * std::log2(q);
  return h;
}

struct Split {
  int feature = -1;
  double threshold = 0.0;
  double score = std::numeric_limits<double>::infinity();  // weighted child impurity
};

class TreeBuilder {
 public:
  TreeBuilder(const Matrix& x, const Labels& y, const RfParams& p, Rng& rng)
      : x_(x), y_(y), p_(p), rng_(rng), mtry_(std::max<int>(1, static_cast<int>(std::sqrt(static_cast<double>(x.cols()))))) {
    features_.resize(static_cast<std::size_t>(x.cols()));
    std::iota(features_.begin(), features_.end(), 0);
  }

  std::vector<TreeNode> build(std::vector<int> rows) {
    nodes_.clear();
    grow(std::move(rows), 0);
    return std::move(nodes_);
  }

 private:
  int grow(std::vector<int> rows, int depth) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    double pos = 0;
    for (int r : rows) pos += y_[static_cast<std::size_t>(r)];
    const double neg = static_cast<double>(rows.size()) - pos;
    nodes_[static_cast<std::size_t>(id)].vote = pos > neg ? 1.0 : (pos < neg ? 0.0 : 0.5);

    if (depth >= p_.max_depth || static_cast<int>(rows.size()) < p_.min_samples_split || pos == 0 || neg == 0) return id;
    const Split split = best_split(rows, pos, neg);
    if (split.feature < 0) return id;

    std::vector<int> left, right;
    for (int r : rows) (x_(r, split.feature) <= split.threshold ? left : right).push_back(r);
    rows.clear();
    rows.shrink_to_fit();
    const int l = grow(std::move(left), depth + 1);
    const int rgt = grow(std::move(right), depth + 1);
    auto& node = nodes_[static_cast<std::size_t>(id)];
    node.feature = split.feature;
    node.threshold = split.threshold;
    node.left = l;
    node.right = rgt;
    return id;
  }

  // Draws features in random order until mtry non-constant ones have been scored.
  Split best_split(const std::vector<int>& rows, double pos, double neg) {
    Split best;
    const double n = pos + neg;
    std::vector<std::pair<double, int>> column(rows.size());
    int scored = 0;
    const auto d = features_.size();
    for (std::size_t k = 0; k < d && scored < mtry_; ++k) {
      std::swap(features_[k], features_[k + uniform_index(rng_, d - k)]);
      const int f = features_[k];
      for (std::size_t i = 0; i < rows.size(); ++i) column[i] = {x_(rows[i], f), y_[static_cast<std::size_t>(rows[i])]};
      std::sort(column.begin(), column.end());
      if (column.front().first == column.back().first) continue;
      ++scored;
      double lp = 0, ln = 0;
      for (std::size_t i = 0; i + 1 < column.size(); ++i) {
        (column[i].second ? lp : ln) += 1;
        if (column[i].first == column[i + 1].first) continue;
        const double nl = lp + ln, nr = n - nl;
        const double score = (nl * impurity(lp, ln, p_.criterion) + nr * impurity(pos - lp, neg - ln, p_.criterion)) / n;
        if (score < best.score) {
          best.score = score;
          best.feature = f;
          double mid = 0.5 * (column[i].first + column[i + 1].first);
          if (mid >= column[i + 1].first) mid = column[i].first;
          best.threshold = mid;
        }
      }
    }
    return best;
  }

  const Matrix& x_;
  const Labels& y_;
  const RfParams& p_;
  Rng& rng_;
  int mtry_;
  std::vector<int> features_;
  std::vector<TreeNode> nodes_;
};

}  // namespace

double tree_vote(const std::vector<TreeNode>& tree, const Matrix& x, Eigen::Index row) {
  int node = 0;
  while (tree[static_cast<std::size_t>(node)].feature >= 0) {
    const auto& nd = tree[static_cast<std::size_t>(node)];
    node = x(row, nd.feature) <= nd.threshold ? nd.left : nd.right;
  }
  return tree[static_cast<std::size_t>(node)].vote;
}

ForestState fit_forest(const Matrix& x, const Labels& y, const RfParams& p, std::uint64_t seed,
                       std::vector<double>* oob_score) {
  const auto n = static_cast<std::size_t>(x.rows());
  ForestState forest;
  std::vector<double> oob_sum(n, 0.0);
  std::vector<int> oob_count(n, 0);
  std::vector<char> in_bag(n);
  for (int t = 0; t < p.n_estimators; ++t) {
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(t)}));
    std::vector<int> rows(n);
    std::fill(in_bag.begin(), in_bag.end(), 0);
    for (auto& r : rows) {
      r = static_cast<int>(uniform_index(rng, n));
      in_bag[static_cast<std::size_t>(r)] = 1;
    }
    TreeBuilder builder(x, y, p, rng);
    forest.trees.push_back(builder.build(std::move(rows)));
    if (oob_score) {
      for (std::size_t i = 0; i < n; ++i) {
        if (in_bag[i]) continue;
        oob_sum[i] += tree_vote(forest.trees.back(), x, static_cast<Eigen::Index>(i));
        ++oob_count[i];
      }
    }
  }
  if (oob_score) {
    oob_score->assign(n, std::numeric_limits<double>::quiet_NaN());
    for (std::size_t i = 0; i < n; ++i) {
      if (oob_count[i] > 0) (*oob_score)[i] = oob_sum[i] / oob_count[i];
    }
  }
  return forest;
}

BoostState fit_adaboost(const Matrix& x, const Labels& y, const AbParams& p) {
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  std::vector<std::vector<int>> order(static_cast<std::size_t>(d));
  for (Eigen::Index f = 0; f < d; ++f) {
    auto& o = order[static_cast<std::size_t>(f)];
    o.resize(static_cast<std::size_t>(n));
    std::iota(o.begin(), o.end(), 0);
    std::stable_sort(o.begin(), o.end(), [&](int a, int b) { return x(a, f) < x(b, f); });
  }

  std::vector<double> w(static_cast<std::size_t>(n), 1.0 / static_cast<double>(n));
  BoostState boost;
  for (int round = 0; round < p.n_estimators; ++round) {
    double total_pos = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (y[static_cast<std::size_t>(i)]) total_pos += w[static_cast<std::size_t>(i)];
    }
    Stump best;
    double best_err = std::numeric_limits<double>::infinity();
    for (Eigen::Index f = 0; f < d; ++f) {
      const auto& o = order[static_cast<std::size_t>(f)];
      double left_pos = 0, left_neg = 0;
      // Position k means rows o[0..k) fall at or below the threshold.
      for (std::size_t k = 0; k <= o.size(); ++k) {
        if (k > 0) {
          const int r = o[k - 1];
          (y[static_cast<std::size_t>(r)] ? left_pos : left_neg) += w[static_cast<std::size_t>(r)];
          if (k < o.size() && x(o[k], f) == x(r, f)) continue;
        }
        const double total_neg = 1.0 - total_pos;
        const double err_up = left_pos + (total_neg - left_neg);  // positive above threshold
        const double err_down = 1.0 - err_up;
        const double err = std::min(err_up, err_down);
        if (err < best_err - 1e-15) {
          best_err = err;
          best.feature = static_cast<int>(f);
          best.polarity = err_up <= err_down ? 1 : -1;
          if (k == 0) {
            best.threshold = x(o[0], f) - 1.0;
          } else if (k == o.size()) {
            best.threshold = x(o[k - 1], f) + 1.0;
          } else {
            double mid = 0.5 * (x(o[k - 1], f) + x(o[k], f));
            if (mid >= x(o[k], f)) mid = x(o[k - 1], f);
            best.threshold = mid;
          }
        }
      }
    }

    const auto predict = [&](Eigen::Index i) {
      const bool above = x(i, best.feature) > best.threshold;
      return (above ? 1 : -1) * best.polarity;
    };
    if (best_err <= 0.0) {
      best.alpha = 1.0;
      boost.stumps.push_back(best);
      break;
    }
    if (best_err >= 0.5) {
      if (boost.stumps.empty()) {
        best.alpha = 1.0;
        boost.stumps.push_back(best);
      }
      break;
    }
    best.alpha = p.learning_rate * std::log((1.0 - best_err) / best_err);
    boost.stumps.push_back(best);

    double sum = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const int truth = y[static_cast<std::size_t>(i)] ? 1 : -1;
      auto& wi = w[static_cast<std::size_t>(i)];
      if (predict(i) != truth) wi *= std::exp(best.alpha);
      sum += wi;
    }
    for (auto& wi : w) wi /= sum;
  }
  return boost;
}

}  // namespace respire::learners
