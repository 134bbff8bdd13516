#include "respire/pca.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "respire/errors.hpp"

namespace respire::learners {

const std::vector<double>& pca_thresholds() {
  static const std::vector<double> t{0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95, 0.99};
  return t;
}

PcaBasis pca_decompose(const Matrix& x) {
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  if (n < 2) throw Error(ErrorCode::kDegenerateData, "PCA needs at least two rows");

  PcaBasis basis;
  basis.mean = x.colwise().mean().transpose();
  const Matrix centred = x.rowwise() - basis.mean.transpose();
  const double denom = static_cast<double>(n - 1);
  basis.total_variance = centred.squaredNorm() / denom;
  if (!(basis.total_variance > 0.0)) throw Error(ErrorCode::kDegenerateData, "data has zero total variance");

  Vector eigenvalues;
  Matrix vectors;  // d x r, columns are components
  if (d <= n) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(centred.transpose() * centred / denom);
    eigenvalues = solver.eigenvalues();
    vectors = solver.eigenvectors();
  } else {
    // Wide data: eigenvectors of the n x n Gram matrix map onto covariance eigenvectors.
    Eigen::SelfAdjointEigenSolver<Matrix> solver(centred * centred.transpose() / denom);
    const double floor = 1e-12 * std::max(solver.eigenvalues().maxCoeff(), 0.0);
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (solver.eigenvalues()(i) > floor) keep.push_back(i);
    }
    eigenvalues.resize(static_cast<Eigen::Index>(keep.size()));
    vectors.resize(d, static_cast<Eigen::Index>(keep.size()));
    for (std::size_t c = 0; c < keep.size(); ++c) {
      const auto i = keep[c];
      const double lambda = solver.eigenvalues()(i);
      eigenvalues(static_cast<Eigen::Index>(c)) = lambda;
      vectors.col(static_cast<Eigen::Index>(c)) = centred.transpose() * solver.eigenvectors().col(i) / std::sqrt(lambda * denom);
    }
  }

  const Eigen::Index r = eigenvalues.size();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(r));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return eigenvalues(a) > eigenvalues(b); });

  basis.components.resize(r, d);
  basis.variances.resize(r);
  for (Eigen::Index c = 0; c < r; ++c) {
    Vector v = vectors.col(order[static_cast<std::size_t>(c)]);
    v.normalize();
    // Sign convention: the largest-magnitude loading is positive.
    Eigen::Index arg;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0.0) v = -v;
    basis.components.row(c) = v.transpose();
    basis.variances(c) = std::max(0.0, eigenvalues(order[static_cast<std::size_t>(c)]));
  }
  return basis;
}

PcaModel pca_truncate(const PcaBasis& basis, double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "explained-variance threshold must lie in (0, 1]");
  }
  const Eigen::Index r = basis.variances.size();
  Eigen::Index k = r;
  double cumulative = 0.0;
  for (Eigen::Index i = 0; i < r; ++i) {
    cumulative += basis.variances(i) / basis.total_variance;
    if (cumulative >= threshold - 1e-12) {
      k = i + 1;
      break;
    }
  }
  PcaModel m;
  m.mean = basis.mean;
  m.components = basis.components.topRows(k);
  m.explained_variance_ratio = basis.variances.head(k) / basis.total_variance;
  m.threshold = threshold;
  return m;
}

PcaModel pca_fit(const Matrix& x, double threshold) { return pca_truncate(pca_decompose(x), threshold); }

Matrix pca_transform(const PcaModel& model, const Matrix& x) {
  if (x.cols() != model.mean.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "PCA fitted on " + std::to_string(model.mean.size()) +
                                                   " columns, got " + std::to_string(x.cols()));
  }
  return (x.rowwise() - model.mean.transpose()) * model.components.transpose();
}

Matrix pca_inverse_transform(const PcaModel& model, const Matrix& z) {
  return (z * model.components).rowwise() + model.mean.transpose();
}

}  // namespace respire::learners
