#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <cstring>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "hvs/architecture.hpp"
#include "hvs/image.hpp"
#include "hvs/random.hpp"

namespace hvs::nn {

template <typename S>
using Matrix = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename S>
using Vector = Eigen::Matrix<S, Eigen::Dynamic, 1>;
/// A batch of flattened tensors, one sample per column (planar CHW order).
template <typename S>
using Batch = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;

/// Conv weights are (filters, in_channels * k * k) with column index
/// (c * k + ky) * k + kx; dense weights are (units, inputs).
template <typename S>
struct LayerParams {
  Matrix<S> weights;
  Vector<S> bias;
};

template <typename S>
struct Network {
  Architecture arch;
  // One entry per architecture layer; empty for layers without parameters.
  std::vector<LayerParams<S>> layers;
  std::uint64_t step = 0;
  std::uint64_t seed = 0;

  template <typename T>
  Network<T> cast() const {
    Network<T> out{arch, {}, step, seed};
    for (const auto& l : layers) out.layers.push_back({l.weights.template cast<T>(), l.bias.template cast<T>()});
    return out;
  }

  bool all_finite() const {
    return std::all_of(layers.begin(), layers.end(),
                       [](const auto& l) { return l.weights.allFinite() && l.bias.allFinite(); });
  }

  /// Bitwise comparison of all weights and biases.
  bool same_weights(const Network& other) const {
    if (layers.size() != other.layers.size()) return false;
    for (std::size_t i = 0; i < layers.size(); ++i) {
      const auto& a = layers[i];
      const auto& b = other.layers[i];
      if (a.weights.rows() != b.weights.rows() || a.weights.cols() != b.weights.cols() ||
          a.bias.size() != b.bias.size()) {
        return false;
      }
      if (std::memcmp(a.weights.data(), b.weights.data(), sizeof(S) * a.weights.size()) != 0 ||
          std::memcmp(a.bias.data(), b.bias.data(), sizeof(S) * a.bias.size()) != 0) {
        return false;
      }
    }
    return true;
  }
};

using NetworkParams = Network<float>;

/// Expected (rows, cols) of each parametric layer's weight matrix; (0, 0)
/// for layers without parameters.
inline std::vector<std::pair<Index, Index>> weight_shapes(const Architecture& arch) {
  const auto shapes = arch.shapes();
  std::vector<std::pair<Index, Index>> out;
  for (std::size_t i = 0; i < arch.layers.size(); ++i) {
    const auto& l = arch.layers[i];
    if (l.kind == LayerKind::kConv) {
      out.emplace_back(l.units, shapes[i].channels * l.kernel * l.kernel);
    } else if (l.kind == LayerKind::kDense) {
      out.emplace_back(l.units, shapes[i].size());
    } else {
      out.emplace_back(0, 0);
    }
  }
  return out;
}

/// Weights uniform in +-sqrt(6 / fan_in), biases zero. Deterministic in seed.
template <typename S = float>
Network<S> init_network(const Architecture& arch, std::uint64_t seed) {
  arch.validate();
  Rng rng(seed);
  Network<S> net{arch, {}, 0, seed};
  for (const auto& [rows, cols] : weight_shapes(arch)) {
    LayerParams<S> p;
    if (rows > 0) {
      const double limit = std::sqrt(6.0 / static_cast<double>(cols));
      p.weights.resize(rows, cols);
      for (Index k = 0; k < p.weights.size(); ++k) p.weights.data()[k] = static_cast<S>(rng.uniform(-limit, limit));
      p.bias = Vector<S>::Zero(rows);
    }
    net.layers.push_back(std::move(p));
  }
  return net;
}

/// Every weight and bias zero: logits are constant, predictions uniform.
template <typename S = float>
Network<S> zero_network(const Architecture& arch) {
  Network<S> net = init_network<S>(arch, 0);
  for (auto& l : net.layers) {
    l.weights.setZero();
    l.bias.setZero();
  }
  return net;
}

enum class Mode { kTrain, kInfer };

/// Intermediate values recorded by a forward pass for the backward pass.
template <typename S>
struct Tape {
  // acts[0] is the input batch; acts[i + 1] is layer i's output (logits for
  // the final layer).
  std::vector<Batch<S>> acts;
  std::vector<Eigen::Matrix<Index, Eigen::Dynamic, Eigen::Dynamic>> pool_argmax;
  std::vector<Batch<S>> dropout_masks;
  Batch<S> probs;
};

namespace detail {

template <typename S>
using RowMap = Eigen::Map<Matrix<S>>;
template <typename S>
using ConstRowMap = Eigen::Map<const Matrix<S>>;

// Unfolds same-padded k x k neighbourhoods: row (c*k+ky)*k+kx holds the
// plane of channel c shifted by (ky-k/2, kx-k/2), zero outside the image.
template <typename S>
void im2col(const S* in, const Shape& s, Index k, Matrix<S>& cols) {
  const Index h = s.height;
  const Index w = s.width;
  const Index pad = k / 2;
  cols.setZero(s.channels * k * k, h * w);
  for (Index c = 0; c < s.channels; ++c) {
    for (Index ky = 0; ky < k; ++ky) {
      for (Index kx = 0; kx < k; ++kx) {
        const Index row = (c * k + ky) * k + kx;
        const Index dy = ky - pad;
        const Index dx = kx - pad;
        const Index x0 = std::max<Index>(0, -dx);
        const Index x1 = std::min(w, w - dx);
        if (x1 <= x0) continue;
        for (Index y = std::max<Index>(0, -dy); y < std::min(h, h - dy); ++y) {
          const S* src = in + (c * h + y + dy) * w + x0 + dx;
          std::copy(src, src + (x1 - x0), &cols(row, y * w + x0));
        }
      }
    }
  }
}

// Adjoint of im2col: scatters-adds columns back onto the input planes.
template <typename S>
void col2im(const Matrix<S>& cols, const Shape& s, Index k, S* out) {
  const Index h = s.height;
  const Index w = s.width;
  const Index pad = k / 2;
  for (Index c = 0; c < s.channels; ++c) {
    for (Index ky = 0; ky < k; ++ky) {
      for (Index kx = 0; kx < k; ++kx) {
        const Index row = (c * k + ky) * k + kx;
        const Index dy = ky - pad;
        const Index dx = kx - pad;
        const Index x0 = std::max<Index>(0, -dx);
        const Index x1 = std::min(w, w - dx);
        if (x1 <= x0) continue;
        for (Index y = std::max<Index>(0, -dy); y < std::min(h, h - dy); ++y) {
          S* dst = out + (c * h + y + dy) * w + x0 + dx;
          const S* src = &cols(row, y * w + x0);
          for (Index x = 0; x < x1 - x0; ++x) dst[x] += src[x];
        }
      }
    }
  }
}

template <typename S>
void softmax_columns(const Batch<S>& logits, Batch<S>& probs) {
  probs.resize(logits.rows(), logits.cols());
  for (Index j = 0; j < logits.cols(); ++j) {
    const S top = logits.col(j).maxCoeff();
    probs.col(j) = (logits.col(j).array() - top).exp().matrix();
    probs.col(j) /= probs.col(j).sum();
  }
}

}  // namespace detail

/// Batched forward pass. Returns class probabilities (classes x batch).
/// Train mode draws dropout masks from rng, which must then be non-null.
template <typename S>
Batch<S> forward_batch(const Network<S>& net, const Batch<S>& x, Mode mode, Rng* rng, Tape<S>* tape = nullptr) {
  const auto shapes = net.arch.shapes();
  if (x.rows() != shapes.front().size()) {
    throw DimensionError("network input has " + std::to_string(x.rows()) + " values, architecture expects " +
                         std::to_string(shapes.front().size()));
  }
  if (mode == Mode::kTrain && rng == nullptr) throw ArgumentError("train-mode forward needs a dropout stream");

  const Index batch = x.cols();
  const std::size_t n_layers = net.arch.layers.size();
  Tape<S> local;
  Tape<S>& t = tape ? *tape : local;
  t.acts.assign(1, x);
  t.pool_argmax.assign(n_layers, {});
  t.dropout_masks.assign(n_layers, {});

  Matrix<S> cols;
  for (std::size_t i = 0; i < n_layers; ++i) {
    const auto& spec = net.arch.layers[i];
    const Shape& in_shape = shapes[i];
    const Shape& out_shape = shapes[i + 1];
    const Batch<S>& in = t.acts.back();
    Batch<S> out(out_shape.size(), batch);

    switch (spec.kind) {
      case LayerKind::kConv: {
        const auto& p = net.layers[i];
        for (Index j = 0; j < batch; ++j) {
          detail::im2col(in.col(j).data(), in_shape, spec.kernel, cols);
          detail::RowMap<S> o(out.col(j).data(), out_shape.channels, out_shape.height * out_shape.width);
          o.noalias() = p.weights * cols;
          o.colwise() += p.bias;
        }
        if (spec.activation == Activation::kRelu) out = out.cwiseMax(S(0));
        break;
      }
      case LayerKind::kMaxPool: {
        const Index k = spec.kernel;
        auto& arg = t.pool_argmax[i];
        arg.resize(out_shape.size(), batch);
        for (Index j = 0; j < batch; ++j) {
          const S* src = in.col(j).data();
          for (Index c = 0; c < out_shape.channels; ++c) {
            for (Index oy = 0; oy < out_shape.height; ++oy) {
              for (Index ox = 0; ox < out_shape.width; ++ox) {
                Index best = (c * in_shape.height + oy * k) * in_shape.width + ox * k;
                for (Index dy = 0; dy < k; ++dy) {
                  for (Index dx = 0; dx < k; ++dx) {
                    const Index idx = (c * in_shape.height + oy * k + dy) * in_shape.width + ox * k + dx;
                    if (src[idx] > src[best]) best = idx;
                  }
                }
                const Index o = (c * out_shape.height + oy) * out_shape.width + ox;
                out(o, j) = src[best];
                arg(o, j) = best;
              }
            }
          }
        }
        break;
      }
      case LayerKind::kDropout: {
        if (mode == Mode::kInfer || spec.rate == 0.0f) {
          out = in;
          break;
        }
        // Inverted dropout: kept activations are scaled by 1/(1-rate) so
        // inference needs no rescaling.
        const double keep = 1.0 - spec.rate;
        const S scale = S(1.0 / keep);
        auto& mask = t.dropout_masks[i];
        mask.resize(in.rows(), batch);
        for (Index k = 0; k < mask.size(); ++k) mask.data()[k] = rng->bernoulli(keep) ? scale : S(0);
        out = in.cwiseProduct(mask);
        break;
      }
      case LayerKind::kFlatten:
        out = in;
        break;
      case LayerKind::kDense: {
        const auto& p = net.layers[i];
        out.noalias() = p.weights * in;
        out.colwise() += p.bias;
        if (spec.activation == Activation::kRelu) out = out.cwiseMax(S(0));
        break;
      }
    }
    t.acts.push_back(std::move(out));
  }
  detail::softmax_columns(t.acts.back(), t.probs);
  return t.probs;
}

template <typename S>
struct Gradients {
  std::vector<LayerParams<S>> layers;
  Batch<S> input;
};

/// Backpropagates d(loss)/d(logits) through a recorded forward pass. The
/// input gradient is only formed when requested.
template <typename S>
Gradients<S> backward_batch(const Network<S>& net, const Tape<S>& t, const Batch<S>& dlogits, bool want_input) {
  const auto shapes = net.arch.shapes();
  const std::size_t n_layers = net.arch.layers.size();
  const Index batch = dlogits.cols();
  Gradients<S> g;
  g.layers.resize(n_layers);

  Batch<S> delta = dlogits;
  Matrix<S> cols;
  Matrix<S> dcols;
  for (std::size_t ii = n_layers; ii-- > 0;) {
    const auto& spec = net.arch.layers[ii];
    const Shape& in_shape = shapes[ii];
    const Shape& out_shape = shapes[ii + 1];
    const Batch<S>& in = t.acts[ii];
    const Batch<S>& out = t.acts[ii + 1];
    const bool need_delta_in = ii > 0 || want_input;

    switch (spec.kind) {
      case LayerKind::kConv: {
        const auto& p = net.layers[ii];
        if (spec.activation == Activation::kRelu) delta = delta.cwiseProduct((out.array() > S(0)).matrix().template cast<S>());
        auto& gp = g.layers[ii];
        gp.weights = Matrix<S>::Zero(p.weights.rows(), p.weights.cols());
        gp.bias = Vector<S>::Zero(p.bias.size());
        Batch<S> delta_in;
        if (need_delta_in) delta_in = Batch<S>::Zero(in_shape.size(), batch);
        for (Index j = 0; j < batch; ++j) {
          detail::ConstRowMap<S> d(delta.col(j).data(), out_shape.channels, out_shape.height * out_shape.width);
          detail::im2col(in.col(j).data(), in_shape, spec.kernel, cols);
          gp.weights.noalias() += d * cols.transpose();
          gp.bias += d.rowwise().sum();
          if (need_delta_in) {
            dcols.noalias() = p.weights.transpose() * d;
            detail::col2im(dcols, in_shape, spec.kernel, delta_in.col(j).data());
          }
        }
        delta = std::move(delta_in);
        break;
      }
      case LayerKind::kMaxPool: {
        Batch<S> delta_in = Batch<S>::Zero(in_shape.size(), batch);
        const auto& arg = t.pool_argmax[ii];
        for (Index j = 0; j < batch; ++j) {
          for (Index o = 0; o < delta.rows(); ++o) delta_in(arg(o, j), j) += delta(o, j);
        }
        delta = std::move(delta_in);
        break;
      }
      case LayerKind::kDropout:
        if (t.dropout_masks[ii].size() > 0) delta = delta.cwiseProduct(t.dropout_masks[ii]);
        break;
      case LayerKind::kFlatten:
        break;
      case LayerKind::kDense: {
        const auto& p = net.layers[ii];
        if (spec.activation == Activation::kRelu) delta = delta.cwiseProduct((out.array() > S(0)).matrix().template cast<S>());
        auto& gp = g.layers[ii];
        gp.weights.noalias() = delta * in.transpose();
        gp.bias = delta.rowwise().sum();
        if (need_delta_in) {
          Batch<S> delta_in = p.weights.transpose() * delta;
          delta = std::move(delta_in);
        } else {
          delta.resize(0, 0);
        }
        break;
      }
    }
  }
  if (want_input) g.input = std::move(delta);
  return g;
}

/// Mean cross-entropy of the probabilities against labels.
template <typename S>
double cross_entropy(const Tape<S>& t, std::span<const int> labels) {
  const Batch<S>& logits = t.acts.back();
  double total = 0.0;
  for (Index j = 0; j < logits.cols(); ++j) {
    const auto col = logits.col(j).template cast<double>();
    const double top = col.maxCoeff();
    const double lse = top + std::log((col.array() - top).exp().sum());
    total += lse - col[labels[static_cast<std::size_t>(j)]];
  }
  return total / static_cast<double>(logits.cols());
}

template <typename S>
Batch<S> image_batch(std::span<const ImageT<S>* const> images) {
  Batch<S> x(images.front()->size(), static_cast<Index>(images.size()));
  for (std::size_t j = 0; j < images.size(); ++j) x.col(static_cast<Index>(j)) = images[j]->values();
  return x;
}

template <typename S>
void require_input_shape(const Network<S>& net, const ImageT<S>& img) {
  const Shape& s = net.arch.input;
  if (img.channels() != s.channels || img.height() != s.height || img.width() != s.width) {
    throw DimensionError("image " + std::to_string(img.height()) + "x" + std::to_string(img.width()) + "x" +
                         std::to_string(img.channels()) + " does not match network input " +
                         std::to_string(s.height) + "x" + std::to_string(s.width) + "x" +
                         std::to_string(s.channels));
  }
}

/// Class probabilities for one image.
template <typename S>
Vector<S> forward(const Network<S>& net, const ImageT<S>& img, Mode mode = Mode::kInfer, Rng* rng = nullptr) {
  require_input_shape(net, img);
  return forward_batch<S>(net, img.values(), mode, rng).col(0);
}

/// Index of the largest probability; ties go to the lowest class index.
template <typename Derived>
int argmax(const Eigen::MatrixBase<Derived>& probs) {
  Index best = 0;
  for (Index k = 1; k < probs.size(); ++k) {
    if (probs[k] > probs[best]) best = k;
  }
  return static_cast<int>(best);
}

template <typename S>
struct LossAndGradient {
  double loss = 0.0;
  GradientT<S> gradient;
};

/// Cross-entropy loss of one image and its gradient with respect to every
/// input value, evaluated with dropout disabled.
template <typename S>
LossAndGradient<S> loss_and_input_gradient(const Network<S>& net, const ImageT<S>& img, int label) {
  require_input_shape(net, img);
  if (label < 0 || label >= static_cast<int>(net.arch.classes())) {
    throw ArgumentError("label " + std::to_string(label) + " outside [0, " + std::to_string(net.arch.classes()) + ")");
  }
  Tape<S> t;
  const Batch<S> probs = forward_batch<S>(net, img.values(), Mode::kInfer, nullptr, &t);
  Batch<S> dlogits = probs;
  dlogits(label, 0) -= S(1);
  const int labels[] = {label};
  LossAndGradient<S> out{cross_entropy(t, labels), GradientT<S>(img.height(), img.width(), img.channels())};
  out.gradient.values() = backward_batch(net, t, dlogits, true).input.col(0);
  return out;
}

/// Inference-mode cross-entropy of one image, without a backward pass.
template <typename S>
double inference_loss(const Network<S>& net, const ImageT<S>& img, int label) {
  Tape<S> t;
  forward_batch<S>(net, img.values(), Mode::kInfer, nullptr, &t);
  const int labels[] = {label};
  return cross_entropy(t, labels);
}

/// Whitebox access to a model: loss gradients and predictions for an image.
template <typename O, typename S>
concept GradientOracle = requires(const O& o, const ImageT<S>& img, int label) {
  { o.loss_and_gradient(img, label) } -> std::same_as<LossAndGradient<S>>;
  { o.predict(img) } -> std::convertible_to<int>;
};

/// GradientOracle over a network held by reference; never mutates it.
template <typename S>
class ModelOracle {
 public:
  explicit ModelOracle(const Network<S>& net) : net_(&net) {}

  LossAndGradient<S> loss_and_gradient(const ImageT<S>& img, int label) const {
    return loss_and_input_gradient(*net_, img, label);
  }
  Vector<S> probabilities(const ImageT<S>& img) const { return forward(*net_, img); }
  int predict(const ImageT<S>& img) const { return argmax(probabilities(img)); }
  int class_count() const { return static_cast<int>(net_->arch.classes()); }
  const Network<S>& network() const { return *net_; }

 private:
  const Network<S>* net_;
};

struct TrainConfig {
  double lr = 0.01;
  double momentum = 0.9;
  std::size_t batch = 32;
  int epochs = 1;
  std::uint64_t seed = 0;
  // Re-evaluate loss/accuracy over the whole training set (dropout off)
  // after every epoch. Costs one extra forward pass per image.
  bool evaluate_each_epoch = true;
};

struct EpochStats {
  int epoch = 0;
  // Mean minibatch loss seen during the epoch (dropout on).
  double train_loss = 0.0;
  // Inference-mode loss/accuracy after the epoch, when evaluated.
  std::optional<double> loss;
  std::optional<double> accuracy;
};

template <typename S>
struct TrainResult {
  Network<S> params;
  // Inference-mode loss/accuracy before the first update (epoch 0).
  EpochStats initial;
  std::vector<EpochStats> history;
};

/// Inference-mode (mean loss, accuracy) over a dataset, in batches.
template <typename S>
std::pair<double, double> evaluate(const Network<S>& net, const Dataset& data, std::size_t batch = 64) {
  if (data.empty()) throw ArgumentError("cannot evaluate on an empty dataset");
  double loss = 0.0;
  std::size_t correct = 0;
  std::vector<ImageT<S>> images;
  std::vector<const ImageT<S>*> ptrs;
  std::vector<int> labels;
  for (std::size_t start = 0; start < data.size(); start += batch) {
    const std::size_t end = std::min(data.size(), start + batch);
    images.clear();
    ptrs.clear();
    labels.clear();
    for (std::size_t k = start; k < end; ++k) {
      images.push_back(data.items[k].image.template cast<S>());
      require_input_shape(net, images.back());
      labels.push_back(data.items[k].label);
    }
    for (const auto& img : images) ptrs.push_back(&img);
    Tape<S> t;
    const Batch<S> probs = forward_batch<S>(net, image_batch<S>(ptrs), Mode::kInfer, nullptr, &t);
    loss += cross_entropy(t, labels) * static_cast<double>(end - start);
    for (std::size_t j = 0; j < labels.size(); ++j) {
      if (argmax(probs.col(static_cast<Index>(j))) == labels[j]) ++correct;
    }
  }
  return {loss / static_cast<double>(data.size()), static_cast<double>(correct) / static_cast<double>(data.size())};
}

using EpochCallback = std::function<void(const EpochStats&)>;

/// Minibatch SGD with classical momentum on mean cross-entropy:
///   v <- momentum * v - lr * grad
///   w <- w + v
/// Every epoch reshuffles the sample order; shuffles and dropout masks come
/// from one stream seeded with cfg.seed, and batches are applied in order,
/// so a fixed seed reproduces the run bit-for-bit.
template <typename S>
TrainResult<S> train(Network<S> params, const Dataset& data, const TrainConfig& cfg, const EpochCallback& on_epoch = {}) {
  if (data.empty()) throw ArgumentError("cannot train on an empty dataset");
  if (cfg.batch == 0) throw ArgumentError("batch size must be positive");
  for (const auto& item : data.items) {
    if (item.label < 0 || item.label >= static_cast<int>(params.arch.classes())) {
      throw ArgumentError("training label " + std::to_string(item.label) + " outside the network's class range");
    }
  }

  TrainResult<S> result;
  if (cfg.evaluate_each_epoch) {
    const auto [loss, acc] = evaluate(params, data);
    result.initial = {0, loss, loss, acc};
  }

  std::vector<LayerParams<S>> velocity;
  for (const auto& l : params.layers) {
    velocity.push_back({Matrix<S>::Zero(l.weights.rows(), l.weights.cols()), Vector<S>::Zero(l.bias.size())});
  }

  Rng rng(cfg.seed);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const S lr = static_cast<S>(cfg.lr);
  const S mu = static_cast<S>(cfg.momentum);

  std::vector<ImageT<S>> images;
  std::vector<const ImageT<S>*> ptrs;
  std::vector<int> labels;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    rng.shuffle(order.begin(), order.end());
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch) {
      const std::size_t end = std::min(order.size(), start + cfg.batch);
      images.clear();
      ptrs.clear();
      labels.clear();
      for (std::size_t k = start; k < end; ++k) {
        const auto& item = data.items[order[k]];
        images.push_back(item.image.template cast<S>());
        require_input_shape(params, images.back());
        labels.push_back(item.label);
      }
      for (const auto& img : images) ptrs.push_back(&img);

      Tape<S> t;
      const Batch<S> probs = forward_batch<S>(params, image_batch<S>(ptrs), Mode::kTrain, &rng, &t);
      loss_sum += cross_entropy(t, labels) * static_cast<double>(end - start);

      Batch<S> dlogits = probs;
      for (std::size_t j = 0; j < labels.size(); ++j) dlogits(labels[j], static_cast<Index>(j)) -= S(1);
      dlogits /= static_cast<S>(end - start);
      const Gradients<S> g = backward_batch(params, t, dlogits, false);

      for (std::size_t i = 0; i < params.layers.size(); ++i) {
        if (params.layers[i].weights.size() == 0) continue;
        velocity[i].weights = mu * velocity[i].weights - lr * g.layers[i].weights;
        velocity[i].bias = mu * velocity[i].bias - lr * g.layers[i].bias;
        params.layers[i].weights += velocity[i].weights;
        params.layers[i].bias += velocity[i].bias;
      }
      ++params.step;
    }

    EpochStats stats{epoch, loss_sum / static_cast<double>(order.size()), std::nullopt, std::nullopt};
    if (cfg.evaluate_each_epoch) {
      const auto [loss, acc] = evaluate(params, data);
      stats.loss = loss;
      stats.accuracy = acc;
    }
    result.history.push_back(stats);
    if (on_epoch) on_epoch(stats);
  }
  result.params = std::move(params);
  return result;
}

/// max_i |a_i - n_i| / max(|a_i|, |n_i|, 1e-8).
template <typename DA, typename DB>
double max_relative_error(const Eigen::MatrixBase<DA>& analytic, const Eigen::MatrixBase<DB>& numeric) {
  const auto a = analytic.template cast<double>().array();
  const auto n = numeric.template cast<double>().array();
  const auto denom = a.abs().max(n.abs()).max(1e-8);
  return ((a - n).abs() / denom).maxCoeff();
}

/// Central-difference estimate of the input gradient of the inference loss.
template <typename S>
GradientT<S> numeric_input_gradient(const Network<S>& net, const ImageT<S>& img, int label, double h = 1e-3) {
  GradientT<S> out(img.height(), img.width(), img.channels());
  ImageT<S> probe = img;
  for (Index k = 0; k < img.size(); ++k) {
    const S orig = probe.values()[k];
    probe.values()[k] = static_cast<S>(orig + h);
    const double up = inference_loss(net, probe, label);
    probe.values()[k] = static_cast<S>(orig - h);
    const double down = inference_loss(net, probe, label);
    probe.values()[k] = orig;
    out.values()[k] = static_cast<S>((up - down) / (2.0 * h));
  }
  return out;
}

/// Number of input coordinates whose central-difference stencil x +/- h
/// flips a ReLU or changes a max-pool winner. At such inputs the loss is not
/// smooth over the stencil and finite differences need not match backprop.
template <typename S>
Index kink_crossings(const Network<S>& net, const ImageT<S>& img, double h = 1e-3) {
  auto pattern = [&](const ImageT<S>& x) {
    Tape<S> t;
    forward_batch<S>(net, x.values(), Mode::kInfer, nullptr, &t);
    return t;
  };
  const Tape<S> base = pattern(img);
  auto same = [&](const Tape<S>& t) {
    for (std::size_t i = 0; i < net.arch.layers.size(); ++i) {
      const auto& spec = net.arch.layers[i];
      if (spec.kind == LayerKind::kMaxPool && t.pool_argmax[i] != base.pool_argmax[i]) return false;
      if (spec.activation == Activation::kRelu &&
          ((t.acts[i + 1].array() > S(0)) != (base.acts[i + 1].array() > S(0))).any()) {
        return false;
      }
    }
    return true;
  };
  Index crossings = 0;
  ImageT<S> probe = img;
  for (Index k = 0; k < img.size(); ++k) {
    const S orig = probe.values()[k];
    probe.values()[k] = static_cast<S>(orig + h);
    bool smooth = same(pattern(probe));
    probe.values()[k] = static_cast<S>(orig - h);
    smooth = smooth && same(pattern(probe));
    probe.values()[k] = orig;
    crossings += !smooth;
  }
  return crossings;
}

/// Largest relative disagreement between the backpropagated input gradient
/// and central differences. Meaningful in double precision.
template <typename S>
double gradient_check(const Network<S>& net, const ImageT<S>& img, int label, double h = 1e-3) {
  const auto analytic = loss_and_input_gradient(net, img, label).gradient;
  const auto numeric = numeric_input_gradient(net, img, label, h);
  return max_relative_error(analytic.values(), numeric.values());
}

}  // namespace hvs::nn
