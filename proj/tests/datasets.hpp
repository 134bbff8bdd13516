#pragma once

#include "respire/linalg.hpp"
#include "respire/random.hpp"

namespace respire::testing {

struct Dataset {
  Matrix x;
  Labels y;
};

// Two 2-D boxes separated by a gap of `margin` along the second axis.
inline Dataset separable_blobs(int n, double margin, std::uint64_t seed) {
  Rng rng(seed);
  Dataset d{Matrix(n, 2), Labels(static_cast<std::size_t>(n))};
  for (int i = 0; i < n; ++i) {
    const int label = i % 2;
    d.y[static_cast<std::size_t>(i)] = label;
    d.x(i, 0) = 6.0 * uniform_unit(rng) - 3.0;
    const double off = margin / 2 + 2.0 * uniform_unit(rng);
    d.x(i, 1) = label ? off : -off;
  }
  return d;
}

// Four XOR corners, each repeated `copies` times with small jitter.
inline Dataset jittered_xor(int copies, double jitter, std::uint64_t seed) {
  Rng rng(seed);
  const int n = 4 * copies;
  Dataset d{Matrix(n, 2), Labels(static_cast<std::size_t>(n))};
  for (int i = 0; i < n; ++i) {
    const int a = i % 2, b = (i / 2) % 2;
    d.x(i, 0) = (a ? 1.0 : -1.0) + jitter * (2 * uniform_unit(rng) - 1);
    d.x(i, 1) = (b ? 1.0 : -1.0) + jitter * (2 * uniform_unit(rng) - 1);
    d.y[static_cast<std::size_t>(i)] = a ^ b;
  }
  return d;
}

inline Matrix gaussian_matrix(Eigen::Index n, Eigen::Index d, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> g;
  Matrix m(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) m(i, j) = g(rng);
  }
  return m;
}

inline double accuracy(const std::vector<double>& scores, const Labels& y) {
  int ok = 0;
  for (std::size_t i = 0; i < y.size(); ++i) ok += (scores[i] > 0.5) == (y[i] == 1);
  return static_cast<double>(ok) / static_cast<double>(y.size());
}

}  // namespace respire::testing
