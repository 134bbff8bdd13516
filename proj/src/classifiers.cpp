#include <cmath>
#include <limits>
#include <sstream>

#include "respire/classifiers.hpp"
#include "respire/errors.hpp"

namespace respire::learners {

namespace {

enum SectionTag : std::uint32_t {
  kLinearWeights = 1,
  kStdMean = 2,
  kStdScale = 3,
  kSupport = 4,
  kDualCoef = 5,
  kSvmScalars = 6,
  kTreeNodes = 7,
  kStumps = 8,
};

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

std::string number(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

BlobSection row_section(std::uint32_t tag, const Vector& v) {
  BlobSection s{tag, 1, static_cast<std::uint32_t>(v.size()), {}};
  s.values.reserve(static_cast<std::size_t>(v.size()));
  for (double x : v) s.values.push_back(static_cast<float>(x));
  return s;
}

void validate(const Matrix& x, const Labels& y) {
  if (x.rows() != static_cast<Eigen::Index>(y.size())) {
    throw Error(ErrorCode::kDimensionMismatch, "feature rows and label count differ");
  }
  if (x.rows() == 0) throw Error(ErrorCode::kEmptySet, "no training rows");
  if (!x.allFinite()) throw Error(ErrorCode::kNonFiniteFeature, "training matrix has non-finite values");
  bool pos = false, neg = false;
  for (int v : y) {
    if (v != 0 && v != 1) throw Error(ErrorCode::kInvalidArgument, "labels must be 0 or 1");
    (v ? pos : neg) = true;
  }
  if (!pos || !neg) throw Error(ErrorCode::kSingleClass, "training labels hold a single class");
}

// Largest KKT violation m(alpha) - M(alpha) of the dual, recomputed from scratch.
double kkt_gap(const Vector& alpha, const Labels& y, const Vector& grad, double c) {
  double m = -std::numeric_limits<double>::infinity();
  double big_m = std::numeric_limits<double>::infinity();
  for (Eigen::Index t = 0; t < alpha.size(); ++t) {
    const double yt = y[static_cast<std::size_t>(t)] ? 1.0 : -1.0;
    const double v = -yt * grad(t);
    const bool up = (yt > 0 && alpha(t) < c) || (yt < 0 && alpha(t) > 0);
    const bool low = (yt > 0 && alpha(t) > 0) || (yt < 0 && alpha(t) < c);
    if (up) m = std::max(m, v);
    if (low) big_m = std::min(big_m, v);
  }
  if (!std::isfinite(m) || !std::isfinite(big_m)) return 0.0;
  return std::max(0.0, m - big_m);
}

}  // namespace

std::string_view algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::kLR: return "LR";
    case Algorithm::kSVM: return "SVM";
    case Algorithm::kRF: return "RF";
    case Algorithm::kAB: return "AB";
  }
  return "?";
}

Algorithm parse_algorithm(std::string_view name) {
  for (Algorithm a : kAllAlgorithms) {
    if (algorithm_name(a) == name) return a;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown algorithm '" + std::string(name) + "'");
}

Algorithm algorithm_of(const Hyperparams& p) {
  return std::visit(Overloaded{[](const LrParams&) { return Algorithm::kLR; },
                               [](const SvmParams&) { return Algorithm::kSVM; },
                               [](const RfParams&) { return Algorithm::kRF; },
                               [](const AbParams&) { return Algorithm::kAB; }},
                    p);
}

std::string describe(const Hyperparams& p) {
  return std::visit(
      Overloaded{
          [](const LrParams& q) {
            return std::string("penalty=") + (q.penalty == Penalty::kL1 ? "l1" : "l2") + " C=" + number(q.C);
          },
          [](const SvmParams& q) {
            const char* k = q.kernel == Kernel::kRbf ? "rbf" : (q.kernel == Kernel::kPoly ? "poly" : "sigmoid");
            return "kernel=" + std::string(k) + " C=" + number(q.C) + " gamma=" + number(q.gamma) +
                   " degree=" + std::to_string(q.degree);
          },
          [](const RfParams& q) {
            return "n_estimators=" + std::to_string(q.n_estimators) + " min_samples_split=" +
                   std::to_string(q.min_samples_split) + " max_depth=" + std::to_string(q.max_depth) +
                   " criterion=" + (q.criterion == Criterion::kGini ? "gini" : "entropy");
          },
          [](const AbParams& q) {
            return "n_estimators=" + std::to_string(q.n_estimators) + " learning_rate=" + number(q.learning_rate);
          }},
      p);
}

Standardizer Standardizer::fit(const Matrix& x) {
  Standardizer s;
  s.mean = x.colwise().mean().transpose();
  s.scale.resize(x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double var = (x.col(j).array() - s.mean(j)).square().mean();
    const double sd = std::sqrt(var);
    s.scale(j) = sd > 1e-12 ? sd : 1.0;
  }
  return s;
}

Matrix Standardizer::apply(const Matrix& x) const {
  if (x.cols() != mean.size()) throw Error(ErrorCode::kDimensionMismatch, "standardizer width differs");
  return (x.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array();
}

ShallowModel fit(const Hyperparams& params, const Matrix& x, const Labels& y, std::uint64_t seed) {
  validate(x, y);
  ShallowModel m;
  m.params_ = params;
  m.algorithm_ = algorithm_of(params);
  m.input_dim_ = x.cols();

  std::visit(
      Overloaded{
          [&](const LrParams& p) {
            m.standardizer_ = Standardizer::fit(x);
            m.state_ = fit_logistic(m.standardizer_->apply(x), y, p);
          },
          [&](const SvmParams& p) {
            m.standardizer_ = Standardizer::fit(x);
            const Matrix z = m.standardizer_->apply(x);
            const SvmSolution sol = solve_smo(z, y, p);
            SvmState st;
            st.bias = sol.bias;
            for (Eigen::Index i = 0; i < sol.alpha.size(); ++i) {
              if (sol.alpha(i) > 0) st.support_index.push_back(static_cast<int>(i));
            }
            const auto n_sv = static_cast<Eigen::Index>(st.support_index.size());
            st.support.resize(n_sv, z.cols());
            st.dual_coef.resize(n_sv);
            for (Eigen::Index k = 0; k < n_sv; ++k) {
              const int i = st.support_index[static_cast<std::size_t>(k)];
              st.support.row(k) = z.row(i);
              st.dual_coef(k) = sol.alpha(i) * (y[static_cast<std::size_t>(i)] ? 1.0 : -1.0);
            }
            // f(x_t) without bias, for every training row.
            Vector margin = Vector::Zero(z.rows());
            if (n_sv > 0) margin = kernel_matrix(p, z, st.support) * st.dual_coef;
            Vector grad(z.rows());
            std::vector<double> decision(static_cast<std::size_t>(z.rows()));
            for (Eigen::Index t = 0; t < z.rows(); ++t) {
              const double yt = y[static_cast<std::size_t>(t)] ? 1.0 : -1.0;
              grad(t) = yt * margin(t) - 1.0;
              decision[static_cast<std::size_t>(t)] = margin(t) + st.bias;
            }
            std::tie(st.platt_a, st.platt_b) = fit_platt(decision, y);
            m.diagnostics_.converged = sol.converged;
            m.diagnostics_.iterations = sol.iterations;
            m.diagnostics_.kkt_gap = kkt_gap(sol.alpha, y, grad, p.C);
            m.state_ = std::move(st);
          },
          [&](const RfParams& p) { m.state_ = fit_forest(x, y, p, seed, &m.diagnostics_.oob_score); },
          [&](const AbParams& p) { m.state_ = fit_adaboost(x, y, p); }},
      params);
  return m;
}

std::vector<double> ShallowModel::decision_function(const Matrix& x_in) const {
  if (!fitted()) throw Error(ErrorCode::kInvalidArgument, "model is not fitted");
  if (x_in.cols() != input_dim_) throw Error(ErrorCode::kDimensionMismatch, "scoring width differs from training width");
  const Matrix x = standardizer_ ? standardizer_->apply(x_in) : x_in;
  std::vector<double> out(static_cast<std::size_t>(x.rows()));
  std::visit(Overloaded{
                 [](const std::monostate&) {},
                 [&](const LinearState& s) {
                   const Vector z = x * s.weights;
                   for (Eigen::Index i = 0; i < x.rows(); ++i) out[static_cast<std::size_t>(i)] = z(i) + s.bias;
                 },
                 [&](const SvmState& s) {
                   Vector z = Vector::Zero(x.rows());
                   if (s.support.rows() > 0) z = kernel_matrix(std::get<SvmParams>(params_), x, s.support) * s.dual_coef;
                   for (Eigen::Index i = 0; i < x.rows(); ++i) out[static_cast<std::size_t>(i)] = z(i) + s.bias;
                 },
                 [&](const ForestState& s) {
                   for (Eigen::Index i = 0; i < x.rows(); ++i) {
                     double v = 0;
                     for (const auto& tree : s.trees) v += tree_vote(tree, x, i);
                     out[static_cast<std::size_t>(i)] = v / static_cast<double>(s.trees.size());
                   }
                 },
                 [&](const BoostState& s) {
                   double total = 0;
                   for (const auto& st : s.stumps) total += st.alpha;
                   for (Eigen::Index i = 0; i < x.rows(); ++i) {
                     double v = 0;
                     for (const auto& st : s.stumps) {
                       v += st.alpha * st.polarity * (x(i, st.feature) > st.threshold ? 1.0 : -1.0);
                     }
                     out[static_cast<std::size_t>(i)] = total > 0 ? v / total : 0.0;
                   }
                 }},
             state_);
  return out;
}

std::vector<double> ShallowModel::score(const Matrix& x) const {
  std::vector<double> d = decision_function(x);
  switch (algorithm_) {
    case Algorithm::kLR:
    case Algorithm::kAB:
      for (auto& v : d) v = sigmoid(v);
      break;
    case Algorithm::kSVM: {
      const auto& s = std::get<SvmState>(state_);
      for (auto& v : d) v = sigmoid(-(s.platt_a * v + s.platt_b));
      break;
    }
    case Algorithm::kRF: break;
  }
  return d;
}

ModelBlob ShallowModel::to_blob() const {
  ModelBlob blob;
  blob.algorithm_tag = static_cast<std::uint32_t>(algorithm_);
  if (!fitted()) return blob;
  std::visit(
      Overloaded{
          [](const std::monostate&) {},
          [&](const LinearState& s) {
            // Standardization folded into the weights so the blob scores raw features.
            Vector w(s.weights.size() + 1);
            double b = s.bias;
            for (Eigen::Index j = 0; j < s.weights.size(); ++j) {
              w(j) = s.weights(j) / standardizer_->scale(j);
              b -= w(j) * standardizer_->mean(j);
            }
            w(s.weights.size()) = b;
            blob.sections.push_back(row_section(kLinearWeights, w));
          },
          [&](const SvmState& s) {
            const auto& p = std::get<SvmParams>(params_);
            blob.sections.push_back(row_section(kStdMean, standardizer_->mean));
            blob.sections.push_back(row_section(kStdScale, standardizer_->scale));
            BlobSection sv{kSupport, static_cast<std::uint32_t>(s.support.rows()),
                           static_cast<std::uint32_t>(s.support.cols()), {}};
            for (Eigen::Index i = 0; i < s.support.rows(); ++i) {
              for (Eigen::Index j = 0; j < s.support.cols(); ++j) sv.values.push_back(static_cast<float>(s.support(i, j)));
            }
            blob.sections.push_back(std::move(sv));
            blob.sections.push_back(row_section(kDualCoef, s.dual_coef));
            Vector scalars(6);
            scalars << s.bias, s.platt_a, s.platt_b, static_cast<double>(p.kernel), p.gamma, p.degree;
            blob.sections.push_back(row_section(kSvmScalars, scalars));
          },
          [&](const ForestState& s) {
            for (const auto& tree : s.trees) {
              BlobSection sec{kTreeNodes, static_cast<std::uint32_t>(tree.size()), 5, {}};
              for (const auto& n : tree) {
                sec.values.insert(sec.values.end(), {static_cast<float>(n.feature), static_cast<float>(n.threshold),
                                                     static_cast<float>(n.left), static_cast<float>(n.right),
                                                     static_cast<float>(n.vote)});
              }
              blob.sections.push_back(std::move(sec));
            }
          },
          [&](const BoostState& s) {
            BlobSection sec{kStumps, static_cast<std::uint32_t>(s.stumps.size()), 4, {}};
            for (const auto& st : s.stumps) {
              sec.values.insert(sec.values.end(), {static_cast<float>(st.feature), static_cast<float>(st.threshold),
                                                   static_cast<float>(st.polarity), static_cast<float>(st.alpha)});
            }
            blob.sections.push_back(std::move(sec));
          }},
      state_);
  return blob;
}

std::vector<std::uint8_t> ShallowModel::serialize() const { return encode_blob(to_blob()); }

}  // namespace respire::learners
