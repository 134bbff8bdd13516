#include "respire/head.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "respire/classifiers.hpp"
#include "respire/errors.hpp"
#include "respire/metrics.hpp"
#include "respire/parallel.hpp"

namespace respire::head {

namespace {

enum SectionTag : std::uint32_t { kWeights = 10, kBias = 11 };

struct Pass {
  std::vector<Matrix> inputs;  // input to each layer (after ReLU and dropout)
  std::vector<Matrix> masks;   // ReLU-and-dropout multiplier of each hidden layer's output
  Matrix probs;
};

void fill_uniform(Matrix& m, double limit, Rng& rng) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = limit * (2.0 * uniform_unit(rng) - 1.0);
  }
}

void softmax_rows(Matrix& z) {
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const double mx = z.row(i).maxCoeff();
    z.row(i) = (z.row(i).array() - mx).exp();
    z.row(i) /= z.row(i).sum();
  }
}

Pass run(const std::vector<Layer>& layers, const Matrix& x, bool train_mode, double dropout, Rng* rng) {
  Pass pass;
  Matrix h = x;
  const double keep = 1.0 - dropout;
  for (std::size_t l = 0; l + 1 < layers.size(); ++l) {
    pass.inputs.push_back(h);
    Matrix z = (h * layers[l].weights).rowwise() + layers[l].bias.transpose();
    Matrix mask = (z.array() > 0.0).cast<double>();
    if (train_mode && dropout > 0.0) {
      for (Eigen::Index i = 0; i < mask.rows(); ++i) {
        for (Eigen::Index j = 0; j < mask.cols(); ++j) mask(i, j) *= uniform_unit(*rng) < keep ? 1.0 / keep : 0.0;
      }
    }
    h = z.cwiseProduct(mask);
    pass.masks.push_back(std::move(mask));
  }
  pass.inputs.push_back(h);
  Matrix z = (h * layers.back().weights).rowwise() + layers.back().bias.transpose();
  softmax_rows(z);
  pass.probs = std::move(z);
  return pass;
}

double cross_entropy(const Matrix& probs, const Labels& y) {
  double loss = 0.0;
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    loss -= std::log(std::max(probs(i, y[static_cast<std::size_t>(i)]), 1e-300));
  }
  return loss / static_cast<double>(probs.rows());
}

std::vector<Layer> backward(const std::vector<Layer>& layers, const Pass& pass, const Labels& y) {
  const auto n = static_cast<double>(pass.probs.rows());
  Matrix delta = pass.probs;
  for (Eigen::Index i = 0; i < delta.rows(); ++i) delta(i, y[static_cast<std::size_t>(i)]) -= 1.0;
  delta /= n;
  std::vector<Layer> grads(layers.size());
  for (std::size_t l = layers.size(); l-- > 0;) {
    grads[l].weights = pass.inputs[l].transpose() * delta;
    grads[l].bias = delta.colwise().sum().transpose();
    if (l > 0) delta = (delta * layers[l].weights.transpose()).cwiseProduct(pass.masks[l - 1]);
  }
  return grads;
}

Matrix take_rows(const Matrix& x, const std::vector<int>& rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = x.row(rows[i]);
  return out;
}

Labels take(const Labels& y, const std::vector<int>& rows) {
  Labels out;
  out.reserve(rows.size());
  for (int r : rows) out.push_back(y[static_cast<std::size_t>(r)]);
  return out;
}

bool both_classes(const Labels& y) {
  const auto pos = std::count(y.begin(), y.end(), 1);
  return pos > 0 && pos < static_cast<std::ptrdiff_t>(y.size());
}

template <class T>
bool member(const std::vector<T>& set, T v) {
  return std::find(set.begin(), set.end(), v) != set.end();
}

}  // namespace

void HeadConfig::validate() const {
  const HeadSpace space;
  if (!member(space.hidden_layers, hidden_layers) || !member(space.hidden_units, hidden_units) ||
      !member(space.dropout_rates, dropout_rate) || input_dim <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "head config outside the search space: " + describe());
  }
}

std::string HeadConfig::describe() const {
  std::ostringstream os;
  os << "hidden_layers=" << hidden_layers << " hidden_units=" << hidden_units << " dropout_rate=" << dropout_rate;
  return os.str();
}

HeadModel::HeadModel(const HeadConfig& config) : config_(config) {
  if (config.hidden_layers < 1 || config.hidden_units < 1 || config.input_dim < 1 || config.dropout_rate < 0 ||
      config.dropout_rate >= 1) {
    throw Error(ErrorCode::kInvalidArgument, "head shape must be positive with dropout in [0, 1)");
  }
  Rng rng(derive_seed(config.seed, {0}));
  int fan_in = config.input_dim;
  for (int l = 0; l < config.hidden_layers; ++l) {
    Layer layer{Matrix(fan_in, config.hidden_units), Vector::Zero(config.hidden_units)};
    fill_uniform(layer.weights, std::sqrt(6.0 / fan_in), rng);
    layers_.push_back(std::move(layer));
    fan_in = config.hidden_units;
  }
  Layer out{Matrix(fan_in, 2), Vector::Zero(2)};
  fill_uniform(out.weights, std::sqrt(6.0 / (fan_in + 2)), rng);
  layers_.push_back(std::move(out));
}

std::uint64_t HeadModel::parameter_count() const {
  std::uint64_t n = 0;
  for (const auto& l : layers_) n += static_cast<std::uint64_t>(l.weights.size() + l.bias.size());
  return n;
}

Matrix HeadModel::forward(const Matrix& x, bool train_mode, Rng* rng) const {
  if (layers_.empty()) throw Error(ErrorCode::kInvalidArgument, "head has no layers");
  if (x.cols() != layers_.front().weights.rows()) {
    throw Error(ErrorCode::kDimensionMismatch, "head input width " + std::to_string(x.cols()) + " != " +
                                                   std::to_string(layers_.front().weights.rows()));
  }
  if (train_mode && config_.dropout_rate > 0 && rng == nullptr) {
    throw Error(ErrorCode::kInvalidArgument, "train-mode forward with dropout needs an rng");
  }
  return run(layers_, x, train_mode, config_.dropout_rate, rng).probs;
}

std::vector<double> HeadModel::score(const Matrix& x) const {
  const Matrix p = forward(x);
  return std::vector<double>(p.col(1).data(), p.col(1).data() + p.rows());
}

ModelBlob HeadModel::to_blob() const {
  ModelBlob blob;
  blob.algorithm_tag = kHeadBlobTag;
  for (const auto& l : layers_) {
    BlobSection w{kWeights, static_cast<std::uint32_t>(l.weights.rows()), static_cast<std::uint32_t>(l.weights.cols()), {}};
    w.values.reserve(static_cast<std::size_t>(l.weights.size()));
    for (Eigen::Index i = 0; i < l.weights.rows(); ++i) {
      for (Eigen::Index j = 0; j < l.weights.cols(); ++j) w.values.push_back(static_cast<float>(l.weights(i, j)));
    }
    BlobSection b{kBias, 1, static_cast<std::uint32_t>(l.bias.size()), {}};
    for (double v : l.bias) b.values.push_back(static_cast<float>(v));
    blob.sections.push_back(std::move(w));
    blob.sections.push_back(std::move(b));
  }
  return blob;
}

std::vector<std::uint8_t> HeadModel::serialize() const { return encode_blob(to_blob()); }

Gradients loss_and_gradients(const HeadModel& model, const Matrix& x, const Labels& y) {
  const Pass pass = run(model.layers(), x, false, 0.0, nullptr);
  return {cross_entropy(pass.probs, y), backward(model.layers(), pass, y)};
}

HeadModel train(const HeadConfig& config, const Matrix& x, const Labels& y, const Matrix& x_val,
                const Labels& y_val, int epochs, const TrainOptions& options) {
  if (x.rows() != static_cast<Eigen::Index>(y.size()) || x_val.rows() != static_cast<Eigen::Index>(y_val.size())) {
    throw Error(ErrorCode::kDimensionMismatch, "row and label counts differ");
  }
  if (!both_classes(y)) throw Error(ErrorCode::kSingleClass, "head training labels hold a single class");
  if (!x.allFinite() || !x_val.allFinite()) throw Error(ErrorCode::kNonFiniteFeature, "non-finite head input");
  if (epochs < 1) throw Error(ErrorCode::kInvalidArgument, "epochs must be >= 1");

  HeadConfig cfg = config;
  cfg.input_dim = static_cast<int>(x.cols());
  HeadModel model(cfg);
  if (x_val.rows() > 0 && x_val.cols() != x.cols()) throw Error(ErrorCode::kDimensionMismatch, "validation width differs");
  const bool validate = x_val.rows() > 0 && both_classes(y_val);
  // Trained on standardized inputs; the transform is folded into the first layer at the end.
  const auto standardizer = learners::Standardizer::fit(x);
  const Matrix xs = standardizer.apply(x);
  const Matrix xs_val = x_val.rows() > 0 ? standardizer.apply(x_val) : Matrix(0, x.cols());

  std::vector<Layer> m1(model.layers_.size()), m2(model.layers_.size());
  for (std::size_t l = 0; l < model.layers_.size(); ++l) {
    m1[l] = {Matrix::Zero(model.layers_[l].weights.rows(), model.layers_[l].weights.cols()),
             Vector::Zero(model.layers_[l].bias.size())};
    m2[l] = m1[l];
  }

  Rng rng(derive_seed(cfg.seed, {1}));
  std::vector<int> order(static_cast<std::size_t>(x.rows()));
  std::iota(order.begin(), order.end(), 0);
  std::vector<Layer> best_layers = model.layers_;
  double best = -std::numeric_limits<double>::infinity();
  int stale = 0;
  long step = 0;
  const auto batch = static_cast<std::size_t>(std::max(1, options.batch_size));

  for (int epoch = 0; epoch < epochs; ++epoch) {
    shuffle_range(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::vector<int> rows(order.begin() + static_cast<std::ptrdiff_t>(start),
                                  order.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), start + batch)));
      const Matrix xb = take_rows(xs, rows);
      const Labels yb = take(y, rows);
      const Pass pass = run(model.layers_, xb, true, cfg.dropout_rate, &rng);
      loss_sum += cross_entropy(pass.probs, yb) * static_cast<double>(rows.size());
      const std::vector<Layer> g = backward(model.layers_, pass, yb);
      ++step;
      const double c1 = 1.0 - std::pow(options.beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(options.beta2, static_cast<double>(step));
      const double lr = options.learning_rate;
      const double eps = options.epsilon;
      const double b1 = options.beta1, b2 = options.beta2;
      for (std::size_t l = 0; l < g.size(); ++l) {
        m1[l].weights = b1 * m1[l].weights + (1 - b1) * g[l].weights;
        m2[l].weights = b2 * m2[l].weights + (1 - b2) * g[l].weights.cwiseAbs2();
        m1[l].bias = b1 * m1[l].bias + (1 - b1) * g[l].bias;
        m2[l].bias = b2 * m2[l].bias + (1 - b2) * g[l].bias.cwiseAbs2();
        model.layers_[l].weights.array() -=
            lr * (m1[l].weights.array() / c1) / ((m2[l].weights.array() / c2).sqrt() + eps);
        model.layers_[l].bias.array() -= lr * (m1[l].bias.array() / c1) / ((m2[l].bias.array() / c2).sqrt() + eps);
      }
    }
    EpochRecord rec{loss_sum / static_cast<double>(x.rows()), std::numeric_limits<double>::quiet_NaN()};
    if (validate) {
      rec.val_pr_auc = eval::pr_auc(model.score(xs_val), y_val);
      if (rec.val_pr_auc > best) {
        best = rec.val_pr_auc;
        best_layers = model.layers_;
        stale = 0;
      } else if (++stale >= options.patience) {
        model.trace_.push_back(rec);
        break;
      }
    }
    model.trace_.push_back(rec);
  }
  if (validate) model.layers_ = std::move(best_layers);
  Layer& first = model.layers_.front();
  first.bias -= first.weights.transpose() * standardizer.mean.cwiseQuotient(standardizer.scale);
  first.weights = standardizer.scale.cwiseInverse().asDiagonal() * first.weights;
  return model;
}

std::vector<Bracket> hyperband_schedule(int max_epochs, int eta) {
  if (eta < 2 || max_epochs < eta) {
    throw Error(ErrorCode::kInvalidBudget, "hyperband needs R >= eta >= 2 (R=" + std::to_string(max_epochs) +
                                               ", eta=" + std::to_string(eta) + ")");
  }
  int s_max = 0;
  for (long p = eta; p <= max_epochs; p *= eta) ++s_max;
  std::vector<Bracket> out;
  for (int s = s_max; s >= 0; --s) {
    long pow = 1;
    for (int i = 0; i < s; ++i) pow *= eta;
    const long n = ((s_max + 1) * pow + s) / (s + 1);
    out.push_back({s, static_cast<int>(n), static_cast<double>(max_epochs) / static_cast<double>(pow)});
  }
  return out;
}

HyperbandResult hyperband_search(const HeadSpace& space, const Matrix& x, const Labels& y,
                                 const std::vector<Fold>& folds, std::uint64_t seed, const HyperbandOptions& options) {
  const auto schedule = hyperband_schedule(options.max_epochs, options.eta);
  if (space.size() == 0) throw Error(ErrorCode::kInvalidArgument, "empty head search space");
  if (folds.empty()) throw Error(ErrorCode::kInvalidArgument, "hyperband needs at least one fold");

  // Fold subsets are shared by every trial.
  struct FoldData {
    Matrix x, x_val;
    Labels y, y_val;
  };
  std::vector<FoldData> data;
  for (const auto& f : folds) data.push_back({take_rows(x, f.train), take_rows(x, f.validation), take(y, f.train), take(y, f.validation)});

  const auto evaluate = [&](const HeadConfig& cfg, int epochs) {
    double sum = 0.0;
    int used = 0;
    for (std::size_t k = 0; k < data.size(); ++k) {
      if (!both_classes(data[k].y_val)) continue;
      HeadConfig c = cfg;
      c.seed = derive_seed(cfg.seed, {k});
      const HeadModel m = train(c, data[k].x, data[k].y, data[k].x_val, data[k].y_val, epochs, options.train);
      sum += eval::pr_auc(m.score(data[k].x_val), data[k].y_val);
      ++used;
    }
    return used ? sum / used : 0.0;
  };

  HyperbandResult result;
  result.best_score = -1.0;
  int best_epochs = -1;
  for (const Bracket& b : schedule) {
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(b.s)}));
    std::vector<HeadConfig> live;
    for (int i = 0; i < b.n; ++i) {
      HeadConfig c;
      c.hidden_layers = space.hidden_layers[uniform_index(rng, space.hidden_layers.size())];
      c.hidden_units = space.hidden_units[uniform_index(rng, space.hidden_units.size())];
      c.dropout_rate = space.dropout_rates[uniform_index(rng, space.dropout_rates.size())];
      c.input_dim = static_cast<int>(x.cols());
      c.seed = derive_seed(seed, {static_cast<std::uint64_t>(b.s), static_cast<std::uint64_t>(i)});
      live.push_back(c);
    }
    double eta_pow = 1.0;
    for (int rung = 0; rung <= b.s && !live.empty(); ++rung, eta_pow *= options.eta) {
      const int epochs = std::max(1, static_cast<int>(std::lround(b.r * eta_pow)));
      std::vector<double> scores(live.size());
      parallel_for(live.size(), options.workers, [&](std::size_t i) { scores[i] = evaluate(live[i], epochs); });
      std::vector<std::size_t> rank(live.size());
      std::iota(rank.begin(), rank.end(), 0);
      std::stable_sort(rank.begin(), rank.end(), [&](auto a, auto c) { return scores[a] > scores[c]; });
      for (std::size_t i = 0; i < live.size(); ++i) {
        result.trials.push_back({b.s, rung, live[i], epochs, scores[i]});
        if (scores[i] > result.best_score || (scores[i] == result.best_score && epochs > best_epochs)) {
          result.best_score = scores[i];
          result.best = live[i];
          best_epochs = epochs;
        }
      }
      const auto keep = static_cast<std::size_t>(std::floor(b.n / (eta_pow * options.eta)));
      std::vector<HeadConfig> next;
      for (std::size_t i = 0; i < std::min(keep, rank.size()); ++i) next.push_back(live[rank[i]]);
      live = std::move(next);
    }
  }
  return result;
}

}  // namespace respire::head
