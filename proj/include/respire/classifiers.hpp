#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "respire/linalg.hpp"
#include "respire/model_blob.hpp"
#include "respire/random.hpp"

namespace respire::learners {

enum class Algorithm : std::uint32_t { kLR = 1, kSVM = 2, kRF = 3, kAB = 4 };

std::string_view algorithm_name(Algorithm a);
Algorithm parse_algorithm(std::string_view name);
inline constexpr Algorithm kAllAlgorithms[] = {Algorithm::kLR, Algorithm::kSVM, Algorithm::kRF, Algorithm::kAB};

enum class Penalty { kL1, kL2 };
enum class Kernel { kRbf, kPoly, kSigmoid };
enum class Criterion { kEntropy, kGini };

struct LrParams {
  Penalty penalty = Penalty::kL2;
  double C = 1.0;
};

struct SvmParams {
  Kernel kernel = Kernel::kRbf;
  double C = 1.0;
  double gamma = 0.1;
  int degree = 3;
};

struct RfParams {
  int n_estimators = 100;
  int min_samples_split = 2;
  int max_depth = 10;
  Criterion criterion = Criterion::kGini;
};

struct AbParams {
  int n_estimators = 50;
  double learning_rate = 1.0;
};

using Hyperparams = std::variant<LrParams, SvmParams, RfParams, AbParams>;

Algorithm algorithm_of(const Hyperparams& p);

/// Stable human-readable rendering, e.g. "penalty=l2 C=0.1".
std::string describe(const Hyperparams& p);

/// Per-feature standardization fitted on training rows; zero-variance columns keep scale 1.
struct Standardizer {
  Vector mean;
  Vector scale;

  static Standardizer fit(const Matrix& x);
  Matrix apply(const Matrix& x) const;
};

struct LinearState {
  Vector weights;  // standardized feature space
  double bias = 0.0;
};

struct SvmState {
  Matrix support;          // standardized support vectors
  Vector dual_coef;        // alpha_i * y_i
  std::vector<int> support_index;  // rows of the training matrix
  double bias = 0.0;
  double platt_a = 0.0;
  double platt_b = 0.0;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double vote = 0.0;  // leaf vote for the positive class: 0, 0.5 or 1
};

struct ForestState {
  std::vector<std::vector<TreeNode>> trees;
};

struct Stump {
  int feature = 0;
  double threshold = 0.0;
  int polarity = 1;  // +1: predict positive when x > threshold
  double alpha = 0.0;
};

struct BoostState {
  std::vector<Stump> stumps;
};

struct FitDiagnostics {
  bool converged = true;
  long iterations = 0;
  double kkt_gap = 0.0;          // SVM: m(alpha) - M(alpha) recomputed after training
  std::vector<double> oob_score; // RF: out-of-bag vote fraction per training row (NaN if never out of bag)
};

/// A fitted shallow classifier. Immutable after fit; score() is safe to call concurrently.
class ShallowModel {
 public:
  ShallowModel() = default;

  Algorithm algorithm() const { return algorithm_; }
  const Hyperparams& hyperparams() const { return params_; }
  bool fitted() const { return !std::holds_alternative<std::monostate>(state_); }
  const FitDiagnostics& diagnostics() const { return diagnostics_; }
  Eigen::Index input_dim() const { return input_dim_; }

  /// Scores in [0, 1]; higher means more likely positive.
  std::vector<double> score(const Matrix& x) const;

  /// Raw decision values before squashing (LR logit, SVM margin, RF vote, AB normalized margin).
  std::vector<double> decision_function(const Matrix& x) const;

  ModelBlob to_blob() const;
  std::vector<std::uint8_t> serialize() const;

  const LinearState* linear() const { return std::get_if<LinearState>(&state_); }
  const SvmState* svm() const { return std::get_if<SvmState>(&state_); }
  const ForestState* forest() const { return std::get_if<ForestState>(&state_); }
  const BoostState* boost() const { return std::get_if<BoostState>(&state_); }
  const std::optional<Standardizer>& standardizer() const { return standardizer_; }

 private:
  friend ShallowModel fit(const Hyperparams&, const Matrix&, const Labels&, std::uint64_t);

  Algorithm algorithm_ = Algorithm::kLR;
  Hyperparams params_;
  Eigen::Index input_dim_ = 0;
  std::optional<Standardizer> standardizer_;
  std::variant<std::monostate, LinearState, SvmState, ForestState, BoostState> state_;
  FitDiagnostics diagnostics_;
};

/// Fits one classifier. Throws kSingleClass, kNonFiniteFeature or kDimensionMismatch.
ShallowModel fit(const Hyperparams& params, const Matrix& x, const Labels& y, std::uint64_t seed);

// Solvers, exposed for direct testing. All operate on already-prepared features.

LinearState fit_logistic(const Matrix& x, const Labels& y, const LrParams& p);
double logistic_objective(const Matrix& x, const Labels& y, const LrParams& p, const LinearState& s);

struct SvmSolution {
  Vector alpha;
  double bias = 0.0;
  long iterations = 0;
  bool converged = false;
};

inline constexpr double kSmoTolerance = 1e-3;

double kernel_value(const SvmParams& p, const double* a, const double* b, Eigen::Index d);
/// Gram block K(a_i, b_j), rows of `a` against rows of `b`.
Matrix kernel_matrix(const SvmParams& p, const Matrix& a, const Matrix& b);
SvmSolution solve_smo(const Matrix& x, const Labels& y, const SvmParams& p);

/// Platt's sigmoid fit (Lin, Lin and Weng's Newton method): P(y=1|f) = 1 / (1 + exp(A f + B)).
std::pair<double, double> fit_platt(const std::vector<double>& decision, const Labels& y);

ForestState fit_forest(const Matrix& x, const Labels& y, const RfParams& p, std::uint64_t seed,
                       std::vector<double>* oob_score);
double tree_vote(const std::vector<TreeNode>& tree, const Matrix& x, Eigen::Index row);

BoostState fit_adaboost(const Matrix& x, const Labels& y, const AbParams& p);

}  // namespace respire::learners
