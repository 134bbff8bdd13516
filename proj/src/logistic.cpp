#include <cmath>
#include <deque>
#include <functional>

#include "respire/classifiers.hpp"

namespace respire::learners {

namespace {

constexpr int kLbfgsMemory = 10;
constexpr int kMaxIterations = 1000;
constexpr double kGradTolerance = 1e-6;

// log(1 + exp(-m)) without overflow.
double log_loss_margin(double m) { return m > 0 ? std::log1p(std::exp(-m)) : -m + std::log1p(std::exp(m)); }

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double data_loss(const Matrix& x, const Labels& y, const Vector& w, double b) {
  const Vector z = (x * w).array() + b;
  double loss = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) loss += log_loss_margin(y[static_cast<std::size_t>(i)] ? z(i) : -z(i));
  return loss;
}

using Objective = std::function<double(const Vector&, Vector&)>;

// Limited-memory BFGS with Armijo backtracking. Parameters packed as [w..., b].
Vector minimize_lbfgs(const Objective& f, Vector x) {
  Vector g(x.size());
  double fx = f(x, g);
  const double g0 = std::max(1.0, g.lpNorm<Eigen::Infinity>());
  std::deque<std::pair<Vector, Vector>> history;  // (s, y)

  for (int iter = 0; iter < kMaxIterations; ++iter) {
    if (g.lpNorm<Eigen::Infinity>() <= kGradTolerance * g0) break;

    // Two-loop recursion.
    Vector q = g;
    std::vector<double> alphas(history.size());
    for (std::size_t k = history.size(); k-- > 0;) {
      const auto& [s, yv] = history[k];
      alphas[k] = s.dot(q) / yv.dot(s);
      q -= alphas[k] * yv;
    }
    if (!history.empty()) {
      const auto& [s, yv] = history.back();
      q *= s.dot(yv) / yv.dot(yv);
    } else {
      q /= std::max(1.0, g.norm());
    }
    for (std::size_t k = 0; k < history.size(); ++k) {
      const auto& [s, yv] = history[k];
      const double beta = yv.dot(q) / yv.dot(s);
      q += (alphas[k] - beta) * s;
    }
    Vector dir = -q;
    double slope = g.dot(dir);
    if (slope >= 0) {  // not a descent direction; fall back to steepest descent
      history.clear();
      dir = -g / std::max(1.0, g.norm());
      slope = g.dot(dir);
    }

    double step = 1.0;
    Vector x_new, g_new(x.size());
    double f_new = 0.0;
    for (int ls = 0; ls < 60; ++ls) {
      x_new = x + step * dir;
      f_new = f(x_new, g_new);
      if (f_new <= fx + 1e-4 * step * slope) break;
      step *= 0.5;
    }
    if (!(f_new <= fx)) break;

    Vector s = x_new - x;
    Vector yv = g_new - g;
    if (s.dot(yv) > 1e-12 * yv.squaredNorm()) {
      history.emplace_back(std::move(s), std::move(yv));
      if (history.size() > kLbfgsMemory) history.pop_front();
    }
    const double rel = (fx - f_new) / std::max({std::abs(fx), std::abs(f_new), 1.0});
    x = std::move(x_new);
    g = g_new;
    fx = f_new;
    if (rel < 1e-14) break;
  }
  return x;
}

LinearState fit_l2(const Matrix& x, const Labels& y, double c) {
  const Eigen::Index d = x.cols();
  Vector target(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) target(i) = y[static_cast<std::size_t>(i)];

  const Objective f = [&](const Vector& theta, Vector& grad) {
    const auto w = theta.head(d);
    const double b = theta(d);
    const Vector z = (x * w).array() + b;
    Vector resid(z.size());
    double loss = 0.0;
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      loss += log_loss_margin(target(i) > 0.5 ? z(i) : -z(i));
      resid(i) = sigmoid(z(i)) - target(i);
    }
    grad.head(d) = w + c * (x.transpose() * resid);
    grad(d) = c * resid.sum();
    return 0.5 * w.squaredNorm() + c * loss;
  };
  const Vector theta = minimize_lbfgs(f, Vector::Zero(d + 1));
  return {theta.head(d), theta(d)};
}

double soft_threshold(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

// Newton steps on the log-loss, each solved by cyclic coordinate descent with soft thresholding.
LinearState fit_l1(const Matrix& x, const Labels& y, double c) {
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  LinearState s{Vector::Zero(d), 0.0};
  const auto objective = [&](const Vector& w, double b) { return w.lpNorm<1>() + c * data_loss(x, y, w, b); };
  double current = objective(s.weights, s.bias);

  for (int outer = 0; outer < 100; ++outer) {
    const Vector z = (x * s.weights).array() + s.bias;
    Vector weight(n), resid(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double p = sigmoid(z(i));
      weight(i) = std::max(p * (1.0 - p), 1e-6);
      resid(i) = (y[static_cast<std::size_t>(i)] - p) / weight(i);
    }
    Vector w_new = s.weights;
    double b_new = s.bias;
    for (int pass = 0; pass < 100; ++pass) {
      double max_change = 0.0;
      const double db = weight.dot(resid) / weight.sum();
      b_new += db;
      resid.array() -= db;
      max_change = std::max(max_change, std::abs(db));
      for (Eigen::Index j = 0; j < d; ++j) {
        const auto col = x.col(j);
        const double a = c * weight.dot(col.cwiseProduct(col));
        if (a <= 0.0) continue;
        const double g = c * weight.dot(col.cwiseProduct(resid));
        const double updated = soft_threshold(w_new(j) * a + g, 1.0) / a;
        const double delta = updated - w_new(j);
        if (delta != 0.0) {
          w_new(j) = updated;
          resid -= delta * col;
          max_change = std::max(max_change, std::abs(delta));
        }
      }
      if (max_change < 1e-8) break;
    }

    // Backtrack along the Newton direction until the true objective decreases.
    const Vector dw = w_new - s.weights;
    const double dbias = b_new - s.bias;
    double step = 1.0, candidate = objective(w_new, b_new);
    while (candidate > current && step > 1e-10) {
      step *= 0.5;
      candidate = objective(s.weights + step * dw, s.bias + step * dbias);
    }
    if (candidate > current) break;
    s.weights += step * dw;
    s.bias += step * dbias;
    const double rel = (current - candidate) / std::max(1.0, std::abs(current));
    current = candidate;
    if (rel < 1e-10 || step * std::max(dw.lpNorm<Eigen::Infinity>(), std::abs(dbias)) < 1e-9) break;
  }
  return s;
}

}  // namespace

double logistic_objective(const Matrix& x, const Labels& y, const LrParams& p, const LinearState& s) {
  const double reg = p.penalty == Penalty::kL1 ? s.weights.lpNorm<1>() : 0.5 * s.weights.squaredNorm();
  return reg + p.C * data_loss(x, y, s.weights, s.bias);
}

LinearState fit_logistic(const Matrix& x, const Labels& y, const LrParams& p) {
  return p.penalty == Penalty::kL1 ? fit_l1(x, y, p.C) : fit_l2(x, y, p.C);
}

}  // namespace respire::learners
