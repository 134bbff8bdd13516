#pragma once

#include <vector>

#include "respire/linalg.hpp"

namespace respire::learners {

/// Explained-variance thresholds searched during tuning.
const std::vector<double>& pca_thresholds();

/// Full eigendecomposition of the sample covariance of centred data, components sorted by
/// descending variance. Computing it once lets every threshold reuse the same basis.
struct PcaBasis {
  Vector mean;
  Matrix components;  // r x d, orthonormal rows
  Vector variances;   // r, descending, >= 0
  double total_variance = 0.0;
};

struct PcaModel {
  Vector mean;
  Matrix components;  // k x d
  Vector explained_variance_ratio;  // k
  double threshold = 0.0;

  Eigen::Index n_components() const { return components.rows(); }
};

/// Throws kDegenerateData when n < 2 or the data has zero total variance.
PcaBasis pca_decompose(const Matrix& x);

/// Keeps the smallest k whose cumulative explained-variance ratio reaches `threshold`.
PcaModel pca_truncate(const PcaBasis& basis, double threshold);

PcaModel pca_fit(const Matrix& x, double threshold);
Matrix pca_transform(const PcaModel& model, const Matrix& x);
Matrix pca_inverse_transform(const PcaModel& model, const Matrix& z);

}  // namespace respire::learners
