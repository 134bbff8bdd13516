#pragma once

#include <string>
#include <vector>

#include "respire/classifiers.hpp"

namespace respire::learners {

struct ParameterAxis {
  std::string name;
  std::vector<std::string> values;  // rendered as in the grid table
};

struct SearchSpace {
  Algorithm algorithm = Algorithm::kLR;
  std::vector<ParameterAxis> axes;

  std::size_t grid_size() const;
};

SearchSpace enumerate_space(Algorithm a);

/// Cartesian product of the axes, first axis varying slowest.
std::vector<Hyperparams> expand_grid(Algorithm a);

inline constexpr std::size_t kGridSearchLimit = 500;
inline constexpr int kRandomSearchTrials = 60;

struct Candidate {
  double pca_threshold = 0.0;
  Hyperparams params;
};

/// Joint PCA-threshold x hyperparameter grid when it holds at most 500 points, otherwise
/// `trials` distinct seeded uniform draws from it (kept in grid order).
std::vector<Candidate> shallow_candidates(Algorithm a, std::uint64_t seed, int trials = kRandomSearchTrials);

}  // namespace respire::learners
