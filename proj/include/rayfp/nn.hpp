#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "rayfp/error.hpp"
#include "rayfp/random.hpp"

namespace rayfp {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Fully connected classifier: rectifier hidden layers, softmax output.
struct MlpSpec {
  int input_dim = 0;
  std::vector<int> hidden{256, 128, 32};
  int output_dim = 5;

  void validate() const {
    if (input_dim < 1 || output_dim < 1) throw Error(Errc::shape_error, "input and output widths must be >= 1");
    for (int w : hidden) {
      if (w < 1) throw Error(Errc::shape_error, "hidden widths must be >= 1");
    }
  }

  int layer_count() const noexcept { return static_cast<int>(hidden.size()) + 1; }
  int fan_in(int layer) const { return layer == 0 ? input_dim : hidden[layer - 1]; }
  int fan_out(int layer) const { return layer == layer_count() - 1 ? output_dim : hidden[layer]; }

  friend bool operator==(const MlpSpec&, const MlpSpec&) = default;
};

/// "256,128,32" or "256-128-32".
std::vector<int> parse_arch(const std::string& text);
std::string format_arch(const std::vector<int>& hidden, char sep = '-');

template <typename Scalar>
struct DenseLayer {
  MatrixX<Scalar> weight;  // fan_out x fan_in
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> bias;
};

template <typename Scalar>
struct MlpParams {
  MlpSpec spec;
  std::vector<DenseLayer<Scalar>> layers;

  /// Same shapes, all entries zero.
  static MlpParams zeros(const MlpSpec& spec) {
    spec.validate();
    MlpParams p{spec, {}};
    for (int l = 0; l < spec.layer_count(); ++l) {
      p.layers.push_back({MatrixX<Scalar>::Zero(spec.fan_out(l), spec.fan_in(l)),
                          Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Zero(spec.fan_out(l))});
    }
    return p;
  }

  bool same_shape(const MlpParams& other) const {
    if (layers.size() != other.layers.size()) return false;
    for (std::size_t l = 0; l < layers.size(); ++l) {
      if (layers[l].weight.rows() != other.layers[l].weight.rows() ||
          layers[l].weight.cols() != other.layers[l].weight.cols() ||
          layers[l].bias.size() != other.layers[l].bias.size()) {
        return false;
      }
    }
    return true;
  }

  friend bool operator==(const MlpParams& a, const MlpParams& b) {
    if (!(a.spec == b.spec) || !a.same_shape(b)) return false;
    for (std::size_t l = 0; l < a.layers.size(); ++l) {
      if (!(a.layers[l].weight.array() == b.layers[l].weight.array()).all() ||
          !(a.layers[l].bias.array() == b.layers[l].bias.array()).all()) {
        return false;
      }
    }
    return true;
  }
};

/// Bias-corrected Adam moments. Hyperparameters default to the usual
/// published values.
template <typename Scalar>
struct AdamState {
  MlpParams<Scalar> first;
  MlpParams<Scalar> second;
  std::int64_t step = 0;
  Scalar learning_rate = Scalar(1e-3);
  Scalar beta1 = Scalar(0.9);
  Scalar beta2 = Scalar(0.999);
  Scalar epsilon = Scalar(1e-8);

  static AdamState for_params(const MlpParams<Scalar>& params, Scalar learning_rate = Scalar(1e-3)) {
    AdamState s{MlpParams<Scalar>::zeros(params.spec), MlpParams<Scalar>::zeros(params.spec)};
    s.learning_rate = learning_rate;
    return s;
  }
};

/// Columns are samples.
template <typename Scalar>
struct LabeledData {
  MatrixX<Scalar> inputs;
  std::vector<int> labels;

  Eigen::Index size() const noexcept { return inputs.cols(); }
};

struct TrainConfig {
  int epochs = 50;
  int batch_size = 32;
  std::uint64_t seed = 0;
  double learning_rate = 1e-3;
};

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;
  // Running accuracy over the epoch's minibatches, before each update.
  double train_accuracy = 0.0;
  // NaN when no validation data was given.
  double val_accuracy = std::numeric_limits<double>::quiet_NaN();
};

template <typename Scalar>
struct TrainResult {
  MlpParams<Scalar> params;
  std::vector<EpochStats> history;
};

struct Evaluation {
  double accuracy = 0.0;
  Eigen::MatrixXi confusion;  // rows: true class, cols: predicted class
};

template <typename Scalar>
struct LossAndGrad {
  Scalar loss;
  MlpParams<Scalar> grads;
  // Batch samples whose pre-update prediction matched the label.
  int correct = 0;
};

/// Weights ~ U(-sqrt(6 / fan_in), +sqrt(6 / fan_in)), biases 0.
template <typename Scalar>
MlpParams<Scalar> init_params(const MlpSpec& spec, std::uint64_t seed) {
  MlpParams<Scalar> p = MlpParams<Scalar>::zeros(spec);
  Rng rng(seed);
  for (int l = 0; l < spec.layer_count(); ++l) {
    const double bound = std::sqrt(6.0 / spec.fan_in(l));
    auto& w = p.layers[l].weight;
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = static_cast<Scalar>(rng.uniform(-bound, bound));
    }
  }
  return p;
}

namespace detail {

template <typename Scalar>
void check_inputs(const MlpParams<Scalar>& params, const MatrixX<Scalar>& inputs) {
  if (inputs.rows() != params.spec.input_dim) {
    throw Error(Errc::shape_error, "input has " + std::to_string(inputs.rows()) + " features, network expects " +
                                       std::to_string(params.spec.input_dim));
  }
}

template <typename Scalar>
void check_labels(const MlpParams<Scalar>& params, std::span<const int> labels) {
  for (int y : labels) {
    if (y < 0 || y >= params.spec.output_dim) {
      throw Error(Errc::label_out_of_range, "label " + std::to_string(y) + " outside 0.." +
                                                std::to_string(params.spec.output_dim - 1));
    }
  }
}

// Column-wise softmax in place.
template <typename Scalar>
void softmax_columns(MatrixX<Scalar>& z) {
  for (Eigen::Index c = 0; c < z.cols(); ++c) {
    auto col = z.col(c);
    col.array() -= col.maxCoeff();
    col = col.array().exp().matrix();
    col /= col.sum();
  }
}

template <typename Derived>
int argmax_first(const Eigen::MatrixBase<Derived>& v) {
  int best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i) {
    if (v(i) > v(best)) best = static_cast<int>(i);
  }
  return best;
}

}  // namespace detail

/// Pre-softmax scores, one column per input column.
template <typename Scalar>
MatrixX<Scalar> logits(const MlpParams<Scalar>& params, const MatrixX<Scalar>& inputs) {
  detail::check_inputs(params, inputs);
  MatrixX<Scalar> a = inputs;
  const std::size_t last = params.layers.size() - 1;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    MatrixX<Scalar> z = params.layers[l].weight * a;
    z.colwise() += params.layers[l].bias;
    if (l != last) z = z.cwiseMax(Scalar(0));
    a = std::move(z);
  }
  return a;
}

/// Class probabilities for one input vector.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> forward(const MlpParams<Scalar>& params,
                                                 const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& x) {
  MatrixX<Scalar> z = logits(params, MatrixX<Scalar>(x));
  detail::softmax_columns(z);
  return z.col(0);
}

/// argmax per column; ties go to the lowest class index.
template <typename Scalar>
std::vector<int> predict(const MlpParams<Scalar>& params, const MatrixX<Scalar>& inputs) {
  const MatrixX<Scalar> z = logits(params, inputs);
  std::vector<int> out(static_cast<std::size_t>(z.cols()));
  for (Eigen::Index c = 0; c < z.cols(); ++c) out[static_cast<std::size_t>(c)] = detail::argmax_first(z.col(c));
  return out;
}

/// Mean sparse categorical cross-entropy over the batch and its gradient,
/// back-propagated through the fused softmax + cross-entropy.
template <typename Scalar>
LossAndGrad<Scalar> loss_and_grad(const MlpParams<Scalar>& params, const MatrixX<Scalar>& inputs,
                                  std::span<const int> labels) {
  detail::check_inputs(params, inputs);
  if (static_cast<Eigen::Index>(labels.size()) != inputs.cols()) {
    throw Error(Errc::shape_error, "batch has a different number of inputs and labels");
  }
  if (labels.empty()) throw Error(Errc::empty_dataset, "empty batch");
  detail::check_labels(params, labels);

  const std::size_t n_layers = params.layers.size();
  const Scalar batch = static_cast<Scalar>(inputs.cols());

  // activations[l] is the input to layer l.
  std::vector<MatrixX<Scalar>> activations;
  activations.reserve(n_layers);
  activations.push_back(inputs);
  MatrixX<Scalar> z;
  for (std::size_t l = 0; l < n_layers; ++l) {
    z.noalias() = params.layers[l].weight * activations.back();
    z.colwise() += params.layers[l].bias;
    if (l + 1 < n_layers) activations.push_back(z.cwiseMax(Scalar(0)));
  }

  Scalar loss = 0;
  int correct = 0;
  for (Eigen::Index c = 0; c < z.cols(); ++c) {
    auto col = z.col(c);
    if (detail::argmax_first(col) == labels[static_cast<std::size_t>(c)]) ++correct;
    const Scalar peak = col.maxCoeff();
    const Scalar lse = peak + std::log((col.array() - peak).exp().sum());
    loss += lse - col(labels[static_cast<std::size_t>(c)]);
  }
  loss /= batch;

  detail::softmax_columns(z);
  MatrixX<Scalar> delta = std::move(z);
  for (Eigen::Index c = 0; c < delta.cols(); ++c) delta(labels[static_cast<std::size_t>(c)], c) -= Scalar(1);
  delta /= batch;

  MlpParams<Scalar> grads{params.spec, std::vector<DenseLayer<Scalar>>(n_layers)};
  for (std::size_t l = n_layers; l-- > 0;) {
    grads.layers[l].weight.noalias() = delta * activations[l].transpose();
    grads.layers[l].bias = delta.rowwise().sum();
    if (l > 0) {
      MatrixX<Scalar> back = params.layers[l].weight.transpose() * delta;
      delta = (activations[l].array() > Scalar(0)).select(back, Scalar(0));
    }
  }
  return {loss, std::move(grads), correct};
}

/// In-place Adam update.
template <typename Scalar>
void adam_update(MlpParams<Scalar>& params, const MlpParams<Scalar>& grads, AdamState<Scalar>& state) {
  if (!params.same_shape(grads) || !params.same_shape(state.first) || !params.same_shape(state.second)) {
    throw Error(Errc::shape_error, "parameter, gradient and optimizer shapes differ");
  }
  ++state.step;
  const Scalar t = static_cast<Scalar>(state.step);
  const Scalar correct1 = Scalar(1) - std::pow(state.beta1, t);
  const Scalar correct2 = Scalar(1) - std::pow(state.beta2, t);
  auto update = [&](auto& p, const auto& g, auto& m, auto& v) {
    m.array() = state.beta1 * m.array() + (Scalar(1) - state.beta1) * g.array();
    v.array() = state.beta2 * v.array() + (Scalar(1) - state.beta2) * g.array().square();
    p.array() -= state.learning_rate * (m.array() / correct1) / ((v.array() / correct2).sqrt() + state.epsilon);
  };
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    update(params.layers[l].weight, grads.layers[l].weight, state.first.layers[l].weight,
           state.second.layers[l].weight);
    update(params.layers[l].bias, grads.layers[l].bias, state.first.layers[l].bias, state.second.layers[l].bias);
  }
}

/// Pure form of adam_update.
template <typename Scalar>
std::pair<MlpParams<Scalar>, AdamState<Scalar>> adam_step(const MlpParams<Scalar>& params,
                                                          const MlpParams<Scalar>& grads,
                                                          const AdamState<Scalar>& state) {
  std::pair<MlpParams<Scalar>, AdamState<Scalar>> out{params, state};
  adam_update(out.first, grads, out.second);
  return out;
}

template <typename Scalar>
Evaluation evaluate(const MlpParams<Scalar>& params, const LabeledData<Scalar>& data) {
  if (data.size() == 0) throw Error(Errc::empty_dataset, "cannot evaluate on an empty dataset");
  if (static_cast<Eigen::Index>(data.labels.size()) != data.size()) {
    throw Error(Errc::shape_error, "inputs and labels differ in count");
  }
  detail::check_labels(params, data.labels);
  const int classes = params.spec.output_dim;
  Evaluation ev{0.0, Eigen::MatrixXi::Zero(classes, classes)};
  constexpr Eigen::Index kChunk = 4096;
  for (Eigen::Index start = 0; start < data.size(); start += kChunk) {
    const Eigen::Index len = std::min(kChunk, data.size() - start);
    const auto predicted = predict(params, MatrixX<Scalar>(data.inputs.middleCols(start, len)));
    for (Eigen::Index i = 0; i < len; ++i) {
      ++ev.confusion(data.labels[static_cast<std::size_t>(start + i)], predicted[static_cast<std::size_t>(i)]);
    }
  }
  ev.accuracy = static_cast<double>(ev.confusion.trace()) / static_cast<double>(data.size());
  return ev;
}

/// Fixed-budget minibatch training with a seeded reshuffle every epoch.
template <typename Scalar>
TrainResult<Scalar> train(const MlpSpec& spec, const LabeledData<Scalar>& train_set,
                          const std::optional<LabeledData<Scalar>>& val_set, const TrainConfig& config,
                          std::optional<std::uint64_t> init_seed = std::nullopt) {
  spec.validate();
  if (config.epochs < 1 || config.batch_size < 1) throw Error(Errc::invalid_parameter, "epochs and batch size must be >= 1");
  if (train_set.size() == 0) throw Error(Errc::empty_dataset, "training set is empty");
  if (static_cast<Eigen::Index>(train_set.labels.size()) != train_set.size()) {
    throw Error(Errc::shape_error, "inputs and labels differ in count");
  }

  TrainResult<Scalar> result{init_params<Scalar>(spec, init_seed.value_or(derive_seed({config.seed, 0x1717}))), {}};
  detail::check_inputs(result.params, train_set.inputs);
  detail::check_labels(result.params, train_set.labels);
  if (val_set && val_set->size() > 0) detail::check_inputs(result.params, val_set->inputs);

  AdamState<Scalar> adam = AdamState<Scalar>::for_params(result.params, static_cast<Scalar>(config.learning_rate));
  Rng rng(derive_seed({config.seed, 0x5eed}));
  std::vector<Eigen::Index> order(static_cast<std::size_t>(train_set.size()));
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<Eigen::Index>(i);

  MatrixX<Scalar> batch_x;
  std::vector<int> batch_y;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    rng.shuffle(std::span<Eigen::Index>(order));
    double loss_sum = 0.0;
    Eigen::Index correct = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t len = std::min(order.size() - start, static_cast<std::size_t>(config.batch_size));
      batch_x.resize(train_set.inputs.rows(), static_cast<Eigen::Index>(len));
      batch_y.resize(len);
      for (std::size_t i = 0; i < len; ++i) {
        batch_x.col(static_cast<Eigen::Index>(i)) = train_set.inputs.col(order[start + i]);
        batch_y[i] = train_set.labels[static_cast<std::size_t>(order[start + i])];
      }
      const auto step = loss_and_grad(result.params, batch_x, batch_y);
      loss_sum += static_cast<double>(step.loss) * static_cast<double>(len);
      correct += step.correct;
      adam_update(result.params, step.grads, adam);
    }
    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = loss_sum / static_cast<double>(order.size());
    stats.train_accuracy = static_cast<double>(correct) / static_cast<double>(order.size());
    if (val_set && val_set->size() > 0) stats.val_accuracy = evaluate(result.params, *val_set).accuracy;
    result.history.push_back(stats);
  }
  return result;
}

/// Extra context stored alongside a model so that it can be applied to new
/// scenes without repeating the fingerprinting flags.
struct ModelMeta {
  int dims = 0;
  int ray_length_px = 0;
  std::string gamma = "reciprocal";
  std::string direction_scheme;
  double offset_angle = 0.0;
  std::vector<std::string> class_names;

  friend bool operator==(const ModelMeta&, const ModelMeta&) = default;
};

struct SavedModel {
  MlpParams<double> params;
  std::optional<ModelMeta> meta;
};

// JSON: {"spec": {...}, "layers": [{"w": [[...]], "b": [...]}, ...], "meta": {...}}.
std::string model_to_json(const MlpParams<double>& params, const std::optional<ModelMeta>& meta = std::nullopt);
SavedModel model_from_json(const std::string& text);
void save_model(const std::string& path, const MlpParams<double>& params,
                const std::optional<ModelMeta>& meta = std::nullopt);
SavedModel load_model(const std::string& path);

}  // namespace rayfp
