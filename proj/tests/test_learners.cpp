#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "datasets.hpp"
#include "respire/classifiers.hpp"
#include "respire/errors.hpp"
#include "respire/model_blob.hpp"
#include "respire/pca.hpp"
#include "respire/search_space.hpp"

using namespace respire;
using namespace respire::learners;
using namespace respire::testing;

namespace {

// Cyclic Jacobi eigenvalues of a symmetric matrix, descending.
std::vector<double> jacobi_eigenvalues(Matrix a) {
  const Eigen::Index n = a.rows();
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off < 1e-26) break;
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        if (std::abs(a(p, q)) < 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1));
        const double c = 1 / std::sqrt(t * t + 1), s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
      }
    }
  }
  std::vector<double> ev(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) ev[static_cast<std::size_t>(i)] = a(i, i);
  std::sort(ev.rbegin(), ev.rend());
  return ev;
}

Matrix sample_covariance(const Matrix& x) {
  const Matrix c = x.rowwise() - x.colwise().mean();
  return c.transpose() * c / static_cast<double>(x.rows() - 1);
}

}  // namespace

TEST_CASE("pca on collinear points keeps one component") {
  Matrix x(6, 2);
  for (int i = 0; i < 6; ++i) x.row(i) << i, 2.0 * i + 1;
  const PcaModel m = pca_fit(x, 0.6);
  CHECK(m.n_components() == 1);
  CHECK(m.explained_variance_ratio(0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("pca on isotropic gaussian at 0.65 keeps two components") {
  const Matrix x = gaussian_matrix(10000, 3, 5);
  const PcaModel m = pca_fit(x, 0.65);
  CHECK(m.n_components() == 2);
  const PcaBasis b = pca_decompose(x);
  const auto oracle = jacobi_eigenvalues(sample_covariance(x));
  for (int i = 0; i < 3; ++i) CHECK(b.variances(i) == doctest::Approx(oracle[static_cast<std::size_t>(i)]).epsilon(1e-9));
}

TEST_CASE("pca basis agrees with jacobi oracle and is orthonormal") {
  Matrix x = gaussian_matrix(200, 6, 9);
  x.col(1) = 3 * x.col(0) + 0.1 * x.col(1);
  x.col(4) *= 5;
  const PcaBasis b = pca_decompose(x);
  const auto oracle = jacobi_eigenvalues(sample_covariance(x));
  for (int i = 0; i < 6; ++i) CHECK(b.variances(i) == doctest::Approx(oracle[static_cast<std::size_t>(i)]).epsilon(1e-9));
  const Matrix gram = b.components * b.components.transpose();
  CHECK((gram - Matrix::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff() < 1e-8);
  for (double t : pca_thresholds()) {
    const PcaModel m = pca_truncate(b, t);
    const double cum = m.explained_variance_ratio.sum();
    CHECK(cum >= t - 1e-12);
    if (m.n_components() > 1) CHECK(cum - m.explained_variance_ratio(m.n_components() - 1) < t);
    for (Eigen::Index k = 1; k < m.n_components(); ++k) CHECK(m.explained_variance_ratio(k) <= m.explained_variance_ratio(k - 1));
  }
}

TEST_CASE("pca wide data uses consistent spectrum") {
  const Matrix x = gaussian_matrix(8, 30, 2);
  const PcaBasis b = pca_decompose(x);
  const auto oracle = jacobi_eigenvalues(sample_covariance(x));
  CHECK(b.variances.size() <= 8);
  for (Eigen::Index i = 0; i < b.variances.size(); ++i) {
    CHECK(b.variances(i) == doctest::Approx(oracle[static_cast<std::size_t>(i)]).epsilon(1e-8));
  }
  const Matrix gram = b.components * b.components.transpose();
  CHECK((gram - Matrix::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("pca reconstruction error identity and zero mean transform") {
  const Matrix x = gaussian_matrix(300, 8, 4) * gaussian_matrix(8, 8, 6);
  const PcaBasis b = pca_decompose(x);
  for (double t : pca_thresholds()) {
    const PcaModel m = pca_truncate(b, t);
    const Matrix r = pca_inverse_transform(m, pca_transform(m, x));
    const double mse = (x - r).squaredNorm() / static_cast<double>(x.rows() - 1);
    CHECK(mse == doctest::Approx(b.total_variance * (1 - m.explained_variance_ratio.sum())).epsilon(1e-6).scale(1));
    const Matrix zm = pca_transform(m, m.mean.transpose());
    CHECK(zm.cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("pca rejects degenerate data") {
  Matrix x = Matrix::Constant(5, 3, 2.0);
  CHECK_THROWS_AS(pca_fit(x, 0.9), Error);
  CHECK_THROWS_AS(pca_fit(Matrix::Ones(1, 3), 0.9), Error);
}

TEST_CASE("every algorithm separates blobs") {
  const Dataset d = separable_blobs(40, 2.0, 3);
  const std::vector<Hyperparams> params = {LrParams{Penalty::kL2, 1.0}, LrParams{Penalty::kL1, 1.0},
                                           SvmParams{Kernel::kRbf, 1.0, 0.1, 3}, RfParams{},
                                           AbParams{50, 1.0}};
  for (const auto& p : params) {
    const ShallowModel m = fit(p, d.x, d.y, 7);
    const auto s = m.score(d.x);
    CHECK_MESSAGE(accuracy(s, d.y) == 1.0, describe(p));
    for (double v : s) CHECK((v >= 0 && v <= 1));
  }
}

TEST_CASE("xor: rbf svm fits, linear cannot") {
  const Dataset d = jittered_xor(100, 0.1, 11);
  const ShallowModel svm = fit(SvmParams{Kernel::kRbf, 10.0, 1.0, 3}, d.x, d.y, 1);
  CHECK(accuracy(svm.score(d.x), d.y) == 1.0);
  for (double c : {1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0, 1000.0}) {
    for (Penalty pen : {Penalty::kL1, Penalty::kL2}) {
      const ShallowModel lr = fit(LrParams{pen, c}, d.x, d.y, 1);
      CHECK(accuracy(lr.score(d.x), d.y) <= 0.75);
    }
  }
}

TEST_CASE("single class and non-finite input are rejected") {
  const Dataset d = separable_blobs(20, 2.0, 1);
  Labels ones(20, 1);
  try {
    fit(LrParams{}, d.x, ones, 0);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kSingleClass);
  }
  Matrix bad = d.x;
  bad(3, 1) = std::nan("");
  try {
    fit(RfParams{}, bad, d.y, 0);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kNonFiniteFeature);
  }
}

TEST_CASE("fits are deterministic for a fixed seed") {
  const Dataset d = jittered_xor(30, 0.6, 2);
  for (const Hyperparams& p : std::vector<Hyperparams>{LrParams{Penalty::kL1, 0.1}, SvmParams{Kernel::kPoly, 1, 0.1, 3},
                                                       RfParams{20, 2, 10, Criterion::kEntropy}, AbParams{20, 0.5}}) {
    const auto a = fit(p, d.x, d.y, 42).score(d.x);
    const auto b = fit(p, d.x, d.y, 42).score(d.x);
    CHECK(a == b);
    CHECK(fit(p, d.x, d.y, 42).serialize() == fit(p, d.x, d.y, 42).serialize());
  }
}

TEST_CASE("logistic ranking is invariant to positive weight scaling") {
  const Dataset d = jittered_xor(25, 0.9, 8);
  const ShallowModel m = fit(LrParams{Penalty::kL2, 1.0}, d.x, d.y, 0);
  const auto base = m.decision_function(d.x);
  auto order = [](const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
    return idx;
  };
  for (double c : {0.01, 0.5, 3.0, 100.0}) {
    std::vector<double> scaled;
    for (double v : base) scaled.push_back(1.0 / (1.0 + std::exp(-c * v)));
    CHECK(order(scaled) == order(base));
  }
}

TEST_CASE("l2 logistic reaches a stationary point") {
  const Dataset d = jittered_xor(25, 0.9, 8);
  const LrParams p{Penalty::kL2, 2.0};
  const LinearState s = fit_logistic(d.x, d.y, p);
  const double f0 = logistic_objective(d.x, d.y, p, s);
  for (int j = 0; j < 3; ++j) {
    LinearState t = s;
    if (j < 2) t.weights(j) += 1e-4; else t.bias += 1e-4;
    CHECK(logistic_objective(d.x, d.y, p, t) >= f0 - 1e-9);
  }
}

TEST_CASE("smo satisfies kkt tolerance for every kernel") {
  const Dataset d = jittered_xor(40, 0.7, 6);
  for (Kernel k : {Kernel::kRbf, Kernel::kPoly, Kernel::kSigmoid}) {
    for (double c : {0.01, 1.0, 100.0}) {
      const ShallowModel m = fit(SvmParams{k, c, 0.1, 3}, d.x, d.y, 0);
      CHECK(m.diagnostics().converged);
      CHECK(m.diagnostics().kkt_gap < kSmoTolerance + 1e-12);
    }
  }
}

TEST_CASE("random forest oob scores are stable across seeds") {
  const Dataset d = separable_blobs(40, 2.0, 3);
  const RfParams p{100, 2, 10, Criterion::kGini};
  const auto a = fit(p, d.x, d.y, 1).diagnostics().oob_score;
  const auto b = fit(p, d.x, d.y, 2).diagnostics().oob_score;
  double diff = 0;
  int n = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::isnan(a[i]) || std::isnan(b[i])) continue;
    diff += std::abs(a[i] - b[i]);
    ++n;
  }
  REQUIRE(n > 30);
  CHECK(diff / n < 0.05);
}

TEST_CASE("search space matches grid table") {
  CHECK(enumerate_space(Algorithm::kAB).axes[1].values == std::vector<std::string>{"1", "0.5", "0.1", "0.05", "0.01", "0.001"});
  CHECK(enumerate_space(Algorithm::kRF).axes[2].values == std::vector<std::string>{"10", "30", "50"});
  CHECK(expand_grid(Algorithm::kLR).size() == 14);
  CHECK(expand_grid(Algorithm::kSVM).size() == 420);
  CHECK(expand_grid(Algorithm::kRF).size() == 96);
  CHECK(expand_grid(Algorithm::kAB).size() == 24);
  for (Algorithm a : kAllAlgorithms) CHECK(enumerate_space(a).grid_size() == expand_grid(a).size());
  CHECK(shallow_candidates(Algorithm::kLR, 1).size() == 126);
  CHECK(shallow_candidates(Algorithm::kAB, 1).size() == 216);
  const auto svm = shallow_candidates(Algorithm::kSVM, 1);
  CHECK(svm.size() == 60);
  CHECK(shallow_candidates(Algorithm::kRF, 1).size() == 60);
  const auto again = shallow_candidates(Algorithm::kSVM, 1);
  for (std::size_t i = 0; i < svm.size(); ++i) {
    CHECK(describe(svm[i].params) == describe(again[i].params));
    CHECK(svm[i].pca_threshold == again[i].pca_threshold);
  }
}

TEST_CASE("model blob sizes and round trip") {
  const Matrix x = gaussian_matrix(60, 100, 3);
  Labels y(60);
  for (int i = 0; i < 60; ++i) y[static_cast<std::size_t>(i)] = x(i, 0) > 0;
  const ShallowModel lr = fit(LrParams{}, x, y, 0);
  const auto bytes = lr.serialize();
  CHECK(bytes.size() == 4 * 101 + 24);
  const ModelBlob blob = decode_blob(bytes);
  REQUIRE(blob.sections.size() == 1);
  // Folded weights score raw rows like the model does.
  const auto d = lr.decision_function(x);
  for (Eigen::Index i = 0; i < 5; ++i) {
    double z = blob.sections[0].values[100];
    for (int j = 0; j < 100; ++j) z += blob.sections[0].values[static_cast<std::size_t>(j)] * x(i, j);
    CHECK(z == doctest::Approx(d[static_cast<std::size_t>(i)]).epsilon(1e-4).scale(1));
  }
  CHECK(encode_blob(ModelBlob{}).size() == 12);
  for (Algorithm a : kAllAlgorithms) {
    const ShallowModel m = fit(expand_grid(a).front(), x, y, 0);
    const auto b = m.serialize();
    CHECK(encode_blob(decode_blob(b)) == b);
  }
}
