#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "respire/linalg.hpp"
#include "respire/model_blob.hpp"
#include "respire/random.hpp"

namespace respire::head {

inline constexpr std::uint32_t kHeadBlobTag = 5;

struct HeadConfig {
  int hidden_layers = 1;
  int hidden_units = 128;
  double dropout_rate = 0.0;
  int input_dim = 0;
  std::uint64_t seed = 0;

  /// Throws kInvalidArgument unless every field lies in the search-space sets.
  void validate() const;
  std::string describe() const;
};

struct HeadSpace {
  std::vector<int> hidden_layers = {1, 2, 3, 4, 5};
  std::vector<int> hidden_units = {128, 512, 1024, 2048, 6144};
  std::vector<double> dropout_rates = {0.0, 0.1, 0.2, 0.3, 0.4};

  std::size_t size() const { return hidden_layers.size() * hidden_units.size() * dropout_rates.size(); }
};

struct TrainOptions {
  double learning_rate = 1e-3;
  int batch_size = 32;
  int patience = 10;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct Layer {
  Matrix weights;  // in x out
  Vector bias;     // out
};

struct EpochRecord {
  double train_loss = 0.0;
  double val_pr_auc = 0.0;  // NaN without a validation set
};

/// Fully-connected ReLU layers followed by a 2-way softmax. Immutable once trained.
class HeadModel {
 public:
  HeadModel() = default;
  /// He-uniform weights and zero biases. Shape fields are not checked against the search space.
  explicit HeadModel(const HeadConfig& config);

  const HeadConfig& config() const { return config_; }
  std::vector<Layer>& layers() { return layers_; }
  const std::vector<Layer>& layers() const { return layers_; }
  const std::vector<EpochRecord>& trace() const { return trace_; }
  std::uint64_t parameter_count() const;

  /// n x 2 class probabilities. Dropout is applied only when `train_mode` is set, and then
  /// draws from `rng`. Throws kDimensionMismatch.
  Matrix forward(const Matrix& x, bool train_mode = false, Rng* rng = nullptr) const;

  /// Positive-class probability per row.
  std::vector<double> score(const Matrix& x) const;

  ModelBlob to_blob() const;
  std::vector<std::uint8_t> serialize() const;

 private:
  friend HeadModel train(const HeadConfig&, const Matrix&, const Labels&, const Matrix&, const Labels&, int,
                         const TrainOptions&);
  HeadConfig config_;
  std::vector<Layer> layers_;
  std::vector<EpochRecord> trace_;
};

struct Gradients {
  double loss = 0.0;  // mean cross-entropy
  std::vector<Layer> layers;
};

/// Mean cross-entropy and its gradient, evaluated without dropout.
Gradients loss_and_gradients(const HeadModel& model, const Matrix& x, const Labels& y);

/// Adam on mean cross-entropy with early stopping on validation PR-AUC (best epoch restored).
/// Inputs are standardized with training-row statistics, folded into the first layer afterwards.
/// An empty validation set trains for exactly `epochs`. Throws kSingleClass.
HeadModel train(const HeadConfig& config, const Matrix& x, const Labels& y, const Matrix& x_val,
                const Labels& y_val, int epochs, const TrainOptions& options = {});

struct Bracket {
  int s = 0;
  int n = 0;         // configurations in the first rung
  double r = 0.0;    // epochs per configuration in the first rung
};

/// s_max = floor(log_eta R); bracket s starts n = ceil((s_max+1) eta^s / (s+1)) configs at
/// r = R eta^-s epochs. Throws kInvalidBudget unless R >= eta >= 2.
std::vector<Bracket> hyperband_schedule(int max_epochs, int eta);

struct Fold {
  std::vector<int> train;
  std::vector<int> validation;
};

struct Trial {
  int bracket = 0;
  int rung = 0;
  HeadConfig config;
  int epochs = 0;
  double score = 0.0;  // mean validation PR-AUC over folds
};

struct HyperbandResult {
  HeadConfig best;
  double best_score = 0.0;
  std::vector<Trial> trials;
};

struct HyperbandOptions {
  int max_epochs = 27;
  int eta = 3;
  unsigned workers = 1;
  TrainOptions train;
};

HyperbandResult hyperband_search(const HeadSpace& space, const Matrix& x, const Labels& y,
                                 const std::vector<Fold>& folds, std::uint64_t seed,
                                 const HyperbandOptions& options = {});

}  // namespace respire::head
