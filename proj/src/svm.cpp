#include <algorithm>
#include <cmath>
#include <limits>

#include "respire/classifiers.hpp"

namespace respire::learners {

namespace {

constexpr double kTau = 1e-12;
constexpr long kMinIterations = 10000;
constexpr double kCoef0 = 0.0;

// Kernel values of every training row against row `i`, given precomputed dots and norms.
class KernelRows {
 public:
  KernelRows(const MatrixR& x, const SvmParams& p) : x_(x), p_(p), sq_norms_(x.rowwise().squaredNorm()) {}

  void row(Eigen::Index i, Vector& out) const {
    out.noalias() = x_ * x_.row(i).transpose();
    transform(out, sq_norms_(i));
  }

  double diag(Eigen::Index i) const { return apply_one(sq_norms_(i), sq_norms_(i), sq_norms_(i)); }

  double apply_one(double dot, double sq_a, double sq_b) const {
    switch (p_.kernel) {
      case Kernel::kRbf: return std::exp(-p_.gamma * std::max(0.0, sq_a + sq_b - 2.0 * dot));
      case Kernel::kPoly: return std::pow(p_.gamma * dot + kCoef0, p_.degree);
      case Kernel::kSigmoid: return std::tanh(p_.gamma * dot + kCoef0);
    }
    return 0.0;
  }

 private:
  void transform(Vector& dots, double sq_i) const {
    for (Eigen::Index t = 0; t < dots.size(); ++t) dots(t) = apply_one(dots(t), sq_i, sq_norms_(t));
  }

  const MatrixR& x_;
  const SvmParams& p_;
  Vector sq_norms_;
};

}  // namespace

double kernel_value(const SvmParams& p, const double* a, const double* b, Eigen::Index d) {
  double dot = 0.0, sq_a = 0.0, sq_b = 0.0;
  for (Eigen::Index k = 0; k < d; ++k) {
    dot += a[k] * b[k];
    sq_a += a[k] * a[k];
    sq_b += b[k] * b[k];
  }
  switch (p.kernel) {
    case Kernel::kRbf: return std::exp(-p.gamma * std::max(0.0, sq_a + sq_b - 2.0 * dot));
    case Kernel::kPoly: return std::pow(p.gamma * dot + kCoef0, p.degree);
    case Kernel::kSigmoid: return std::tanh(p.gamma * dot + kCoef0);
  }
  return 0.0;
}

Matrix kernel_matrix(const SvmParams& p, const Matrix& a, const Matrix& b) {
  Matrix k = a * b.transpose();
  const Vector sq_a = a.rowwise().squaredNorm();
  const Vector sq_b = b.rowwise().squaredNorm();
  for (Eigen::Index j = 0; j < k.cols(); ++j) {
    for (Eigen::Index i = 0; i < k.rows(); ++i) {
      const double dot = k(i, j);
      switch (p.kernel) {
        case Kernel::kRbf: k(i, j) = std::exp(-p.gamma * std::max(0.0, sq_a(i) + sq_b(j) - 2.0 * dot)); break;
        case Kernel::kPoly: k(i, j) = std::pow(p.gamma * dot + kCoef0, p.degree); break;
        case Kernel::kSigmoid: k(i, j) = std::tanh(p.gamma * dot + kCoef0); break;
      }
    }
  }
  return k;
}

// Dual solver with second-order working-set selection (Fan, Chen and Lin, 2005).
// Kernel rows are recomputed on demand; nothing is cached between iterations.
SvmSolution solve_smo(const Matrix& x_in, const Labels& labels, const SvmParams& p) {
  const MatrixR x = x_in;
  const Eigen::Index n = x.rows();
  const double c = p.C;
  const KernelRows kernel(x, p);

  Vector y(n), diag(n);
  for (Eigen::Index t = 0; t < n; ++t) {
    y(t) = labels[static_cast<std::size_t>(t)] ? 1.0 : -1.0;
    diag(t) = kernel.diag(t);
  }

  SvmSolution sol;
  sol.alpha = Vector::Zero(n);
  Vector& alpha = sol.alpha;
  Vector grad = Vector::Constant(n, -1.0);
  Vector k_i(n), k_j(n);
  const auto upper = [&](Eigen::Index t) { return alpha(t) >= c; };
  const auto lower = [&](Eigen::Index t) { return alpha(t) <= 0.0; };
  const long max_iter = std::max<long>(kMinIterations, 100 * static_cast<long>(n));

  for (sol.iterations = 0; sol.iterations < max_iter; ++sol.iterations) {
    double g_max = -std::numeric_limits<double>::infinity();
    Eigen::Index i = -1;
    for (Eigen::Index t = 0; t < n; ++t) {
      if (y(t) > 0) {
        if (!upper(t) && -grad(t) >= g_max) {
          g_max = -grad(t);
          i = t;
        }
      } else if (!lower(t) && grad(t) >= g_max) {
        g_max = grad(t);
        i = t;
      }
    }
    if (i < 0) {
      sol.converged = true;
      break;
    }
    kernel.row(i, k_i);

    double g_max2 = -std::numeric_limits<double>::infinity();
    double best = std::numeric_limits<double>::infinity();
    Eigen::Index j = -1;
    for (Eigen::Index t = 0; t < n; ++t) {
      double grad_diff = 0.0;
      if (y(t) > 0) {
        if (lower(t)) continue;
        grad_diff = g_max + grad(t);
        g_max2 = std::max(g_max2, grad(t));
      } else {
        if (upper(t)) continue;
        grad_diff = g_max - grad(t);
        g_max2 = std::max(g_max2, -grad(t));
      }
      if (grad_diff > 0) {
        double quad = diag(i) + diag(t) - 2.0 * k_i(t);
        if (quad <= 0) quad = kTau;
        const double obj = -(grad_diff * grad_diff) / quad;
        if (obj <= best) {
          best = obj;
          j = t;
        }
      }
    }
    if (g_max + g_max2 < kSmoTolerance || j < 0) {
      sol.converged = true;
      break;
    }
    kernel.row(j, k_j);

    const double old_i = alpha(i), old_j = alpha(j);
    double quad = diag(i) + diag(j) - 2.0 * k_i(j);
    if (quad <= 0) quad = kTau;
    if (y(i) != y(j)) {
      const double delta = (-grad(i) - grad(j)) / quad;
      const double diff = alpha(i) - alpha(j);
      alpha(i) += delta;
      alpha(j) += delta;
      if (diff > 0) {
        if (alpha(j) < 0) {
          alpha(j) = 0;
          alpha(i) = diff;
        }
      } else if (alpha(i) < 0) {
        alpha(i) = 0;
        alpha(j) = -diff;
      }
      if (diff > 0) {
        if (alpha(i) > c) {
          alpha(i) = c;
          alpha(j) = c - diff;
        }
      } else if (alpha(j) > c) {
        alpha(j) = c;
        alpha(i) = c + diff;
      }
    } else {
      const double delta = (grad(i) - grad(j)) / quad;
      const double sum = alpha(i) + alpha(j);
      alpha(i) -= delta;
      alpha(j) += delta;
      if (sum > c) {
        if (alpha(i) > c) {
          alpha(i) = c;
          alpha(j) = sum - c;
        }
      } else if (alpha(j) < 0) {
        alpha(j) = 0;
        alpha(i) = sum;
      }
      if (sum > c) {
        if (alpha(j) > c) {
          alpha(j) = c;
          alpha(i) = sum - c;
        }
      } else if (alpha(i) < 0) {
        alpha(i) = 0;
        alpha(j) = sum;
      }
    }

    const double d_i = (alpha(i) - old_i) * y(i);
    const double d_j = (alpha(j) - old_j) * y(j);
    grad.array() += y.array() * (k_i.array() * d_i + k_j.array() * d_j);
  }

  // Bias from free vectors, or the midpoint of the feasible interval when none are free.
  double ub = std::numeric_limits<double>::infinity(), lb = -ub, sum_free = 0.0;
  long n_free = 0;
  for (Eigen::Index t = 0; t < n; ++t) {
    const double yg = y(t) * grad(t);
    if (upper(t)) {
      if (y(t) < 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else if (lower(t)) {
      if (y(t) > 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else {
      ++n_free;
      sum_free += yg;
    }
  }
  const double rho = n_free > 0 ? sum_free / static_cast<double>(n_free) : (ub + lb) / 2.0;
  sol.bias = -rho;
  return sol;
}

std::pair<double, double> fit_platt(const std::vector<double>& dec, const Labels& y) {
  const std::size_t n = dec.size();
  double prior1 = 0, prior0 = 0;
  for (int v : y) (v ? prior1 : prior0) += 1;
  const int max_iter = 100;
  const double min_step = 1e-10, sigma = 1e-12, eps = 1e-5;
  const double hi = (prior1 + 1.0) / (prior1 + 2.0), lo = 1.0 / (prior0 + 2.0);
  std::vector<double> t(n);
  for (std::size_t i = 0; i < n; ++i) t[i] = y[i] ? hi : lo;

  double a = 0.0, b = std::log((prior0 + 1.0) / (prior1 + 1.0));
  const auto objective = [&](double aa, double bb) {
    double f = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double z = dec[i] * aa + bb;
      f += z >= 0 ? t[i] * z + std::log1p(std::exp(-z)) : (t[i] - 1.0) * z + std::log1p(std::exp(z));
    }
    return f;
  };
  double fval = objective(a, b);
  for (int iter = 0; iter < max_iter; ++iter) {
    double h11 = sigma, h22 = sigma, h21 = 0.0, g1 = 0.0, g2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double z = dec[i] * a + b;
      double p, q;
      if (z >= 0) {
        p = std::exp(-z) / (1.0 + std::exp(-z));
        q = 1.0 / (1.0 + std::exp(-z));
      } else {
        p = 1.0 / (1.0 + std::exp(z));
        q = std::exp(z) / (1.0 + std::exp(z));
      }
      const double d2 = p * q;
      h11 += dec[i] * dec[i] * d2;
      h22 += d2;
      h21 += dec[i] * d2;
      const double d1 = t[i] - p;
      g1 += dec[i] * d1;
      g2 += d1;
    }
    if (std::abs(g1) < eps && std::abs(g2) < eps) break;
    const double det = h11 * h22 - h21 * h21;
    const double da = -(h22 * g1 - h21 * g2) / det;
    const double db = -(-h21 * g1 + h11 * g2) / det;
    const double gd = g1 * da + g2 * db;
    double step = 1.0;
    while (step >= min_step) {
      const double na = a + step * da, nb = b + step * db;
      const double nf = objective(na, nb);
      if (nf < fval + 0.0001 * step * gd) {
        a = na;
        b = nb;
        fval = nf;
        break;
      }
      step /= 2.0;
    }
    if (step < min_step) break;
  }
  return {a, b};
}

}  // namespace respire::learners
