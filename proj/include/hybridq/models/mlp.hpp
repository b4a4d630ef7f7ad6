#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "hybridq/core/quantile_grid.hpp"
#include "hybridq/core/types.hpp"
#include "hybridq/error.hpp"
#include "hybridq/models/adam.hpp"
#include "hybridq/models/objective.hpp"
#include "hybridq/models/train_config.hpp"

namespace hybridq {

template <typename Scalar>
struct DenseLayer {
  RowMatrix<Scalar> weights;  // out x in
  RowMatrix<Scalar> bias;     // 1 x out
  Activation activation = Activation::Identity;

  bool operator==(const DenseLayer& o) const {
    return activation == o.activation && same_values(weights, o.weights) && same_values(bias, o.bias);
  }
};

/// Multi-output quantile network: hidden layers with a shared activation and
/// a linear head of width K * Q (room-major).
template <typename Scalar>
class BasicQuantileMlp {
 public:
  using Tensor = RowMatrix<Scalar>;

  BasicQuantileMlp() = default;

  // Uniform(+-1/sqrt(fan_in)) initialisation for weights and biases.
  BasicQuantileMlp(Index inputs, const std::vector<std::size_t>& hidden, Activation activation, Index rooms,
                   QuantileGrid grid, std::uint64_t seed)
      : rooms_(rooms), grid_(std::move(grid)) {
    std::mt19937_64 rng(seed);
    Index fan_in = inputs;
    auto add = [&](Index out, Activation act) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
      std::uniform_real_distribution<double> u(-bound, bound);
      DenseLayer<Scalar> layer;
      layer.weights.resize(out, fan_in);
      layer.bias.resize(1, out);
      for (Index i = 0; i < layer.weights.size(); ++i) layer.weights.data()[i] = static_cast<Scalar>(u(rng));
      for (Index i = 0; i < out; ++i) layer.bias(0, i) = static_cast<Scalar>(u(rng));
      layer.activation = act;
      layers_.push_back(std::move(layer));
      fan_in = out;
    };
    for (auto h : hidden) add(static_cast<Index>(h), activation);
    add(rooms * static_cast<Index>(grid_.size()), Activation::Identity);
  }

  explicit BasicQuantileMlp(std::vector<DenseLayer<Scalar>> layers, Index rooms, QuantileGrid grid)
      : layers_(std::move(layers)), rooms_(rooms), grid_(std::move(grid)) {
    validate();
  }

  void validate() const {
    if (layers_.empty()) throw InputError("network has no layers");
    for (std::size_t l = 1; l < layers_.size(); ++l) {
      if (layers_[l].weights.cols() != layers_[l - 1].weights.rows()) {
        throw InputError("layer " + std::to_string(l) + " input width does not match the previous layer");
      }
    }
    for (const auto& l : layers_) {
      if (l.bias.cols() != l.weights.rows()) throw InputError("bias width does not match layer width");
    }
    if (layers_.back().activation != Activation::Identity) throw InputError("final layer must be linear");
    if (layers_.back().weights.rows() != rooms_ * static_cast<Index>(grid_.size())) {
      throw InputError("output width differs from rooms x levels");
    }
  }

  Index inputs() const { return layers_.front().weights.cols(); }
  Index outputs() const { return layers_.back().weights.rows(); }
  Index rooms() const { return rooms_; }
  const QuantileGrid& grid() const { return grid_; }
  const std::vector<DenseLayer<Scalar>>& layers() const { return layers_; }
  std::vector<DenseLayer<Scalar>>& layers() { return layers_; }

  Index parameter_count() const {
    Index n = 0;
    for (const auto& l : layers_) n += l.weights.size() + l.bias.size();
    return n;
  }

  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> parameters() const {
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> p(parameter_count());
    Index o = 0;
    for (const auto& l : layers_) {
      for (Index i = 0; i < l.weights.size(); ++i) p(o++) = l.weights.data()[i];
      for (Index i = 0; i < l.bias.size(); ++i) p(o++) = l.bias.data()[i];
    }
    return p;
  }

  void set_parameters(const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& p) {
    if (p.size() != parameter_count()) throw InputError("parameter vector length mismatch");
    Index o = 0;
    for (auto& l : layers_) {
      for (Index i = 0; i < l.weights.size(); ++i) l.weights.data()[i] = p(o++);
      for (Index i = 0; i < l.bias.size(); ++i) l.bias.data()[i] = p(o++);
    }
  }

  // Forward pass keeping every layer's activations (acts[0] is the input).
  void forward(const Tensor& x, std::vector<Tensor>& acts) const {
    acts.resize(layers_.size() + 1);
    acts[0] = x;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      const auto& layer = layers_[l];
      acts[l + 1].noalias() = acts[l] * layer.weights.transpose();
      acts[l + 1].rowwise() += layer.bias.row(0);
      activate(acts[l + 1], layer.activation);
    }
  }

  Tensor forward(const Tensor& x) const {
    if (x.cols() != inputs()) {
      throw InputError("network expects " + std::to_string(inputs()) + " input columns, got " + std::to_string(x.cols()));
    }
    std::vector<Tensor> acts;
    forward(x, acts);
    return std::move(acts.back());
  }

  // Outputs for a double-precision input matrix, evaluated in chunks.
  Matrix predict(const Matrix& x, Index chunk = 4096) const {
    if (x.cols() != inputs()) {
      throw InputError("network expects " + std::to_string(inputs()) + " input columns, got " + std::to_string(x.cols()));
    }
    Matrix out(x.rows(), outputs());
    std::vector<Tensor> acts;
    for (Index s = 0; s < x.rows(); s += chunk) {
      const Index len = std::min(chunk, x.rows() - s);
      forward(x.middleRows(s, len).template cast<Scalar>(), acts);
      out.middleRows(s, len) = acts.back().template cast<double>();
    }
    return out;
  }

  /// Backpropagates d loss / d output through the activations of a forward
  /// pass; gradients come back in layer order as (weights, bias) pairs.
  void backward(const std::vector<Tensor>& acts, const Tensor& grad_out, std::vector<Tensor>& grads) const {
    grads.resize(2 * layers_.size());
    Tensor delta = grad_out;
    for (std::size_t l = layers_.size(); l-- > 0;) {
      const auto& layer = layers_[l];
      if (layer.activation != Activation::Identity) apply_derivative(delta, acts[l + 1], layer.activation);
      grads[2 * l].noalias() = delta.transpose() * acts[l];
      grads[2 * l + 1] = delta.colwise().sum();
      if (l > 0) {
        Tensor next;
        next.noalias() = delta * layer.weights;
        delta = std::move(next);
      }
    }
  }

  /// Loss terms and the flattened gradient of the total objective over all
  /// rows of `x`; used by gradient checks.
  std::pair<LossTerms, Eigen::Matrix<Scalar, Eigen::Dynamic, 1>> loss_and_gradient(
      const Matrix& x, const QuantileTargets& targets) const {
    std::vector<Tensor> acts, grads;
    forward(x.template cast<Scalar>(), acts);
    Tensor grad_out;
    const LossTerms terms = quantile_loss<Scalar>(acts.back(), targets, grid_, 0, &grad_out);
    backward(acts, grad_out, grads);
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> g(parameter_count());
    Index o = 0;
    for (const auto& t : grads) {
      for (Index i = 0; i < t.size(); ++i) g(o++) = t.data()[i];
    }
    return {terms, g};
  }

  LossTerms loss(const Matrix& x, const QuantileTargets& targets) const {
    const Tensor out = forward(x.template cast<Scalar>());
    return quantile_loss<Scalar>(out, targets, grid_, 0, nullptr);
  }

  bool operator==(const BasicQuantileMlp&) const = default;

 private:
  static void activate(Tensor& z, Activation a) {
    switch (a) {
      case Activation::Sigmoid: z = (Scalar(1) / (Scalar(1) + (-z.array()).exp())).matrix(); break;
      case Activation::Tanh: z = z.array().tanh().matrix(); break;
      case Activation::Relu: z = z.array().max(Scalar(0)).matrix(); break;
      case Activation::Identity: break;
    }
  }

  // delta *= activation'(z), expressed through the activation's output.
  static void apply_derivative(Tensor& delta, const Tensor& out, Activation a) {
    switch (a) {
      case Activation::Sigmoid: delta.array() *= out.array() * (Scalar(1) - out.array()); break;
      case Activation::Tanh: delta.array() *= Scalar(1) - out.array().square(); break;
      case Activation::Relu: delta.array() *= (out.array() > Scalar(0)).template cast<Scalar>(); break;
      case Activation::Identity: break;
    }
  }

  std::vector<DenseLayer<Scalar>> layers_;
  Index rooms_ = 0;
  QuantileGrid grid_;
};

// Training runs in single precision; gradient checks instantiate double.
using QuantileMlp = BasicQuantileMlp<float>;

template <typename Scalar>
struct MlpFit {
  BasicQuantileMlp<Scalar> model;
  TrainingLog log;
  std::size_t best_epoch = 0;
};

namespace detail {

// Validation-set objective, evaluated in chunks.
template <typename Scalar>
double validation_loss(const BasicQuantileMlp<Scalar>& net, const RowMatrix<Scalar>& x, const QuantileTargets& targets,
                       Index begin, Index end) {
  if (end <= begin) return std::numeric_limits<double>::quiet_NaN();
  constexpr Index chunk = 2048;
  std::vector<RowMatrix<Scalar>> acts;
  double total = 0.0;
  for (Index s = begin; s < end; s += chunk) {
    const Index len = std::min(chunk, end - s);
    net.forward(x.middleRows(s, len), acts);
    const LossTerms t = quantile_loss<Scalar>(acts.back(), targets, net.grid(), s, nullptr);
    total += t.total(targets.lambda) * static_cast<double>(len);
  }
  return total / static_cast<double>(end - begin);
}

/// Mini-batch Adam with seeded shuffling and early stopping on the trailing
/// validation rows. With `count_initial` the incoming weights compete as
/// epoch 0, so the result never validates worse than the starting point.
template <typename Scalar>
MlpFit<Scalar> train_mlp(BasicQuantileMlp<Scalar> net, const Matrix& x_in, const QuantileTargets& targets,
                         const TrainConfig& cfg, std::size_t max_epochs, std::size_t patience, bool count_initial) {
  using Tensor = RowMatrix<Scalar>;
  const Index n = x_in.rows();
  targets.validate(n, net.rooms());
  if (x_in.cols() != net.inputs()) {
    throw InputError("network expects " + std::to_string(net.inputs()) + " input columns, got " +
                     std::to_string(x_in.cols()));
  }
  if (!x_in.allFinite()) throw InputError("non-finite values in network inputs");
  const Index n_val = static_cast<Index>(std::llround(cfg.validation_fraction * static_cast<double>(n)));
  const Index n_fit = n - n_val;
  if (n_fit <= 0) throw InputError("no training rows left after the validation split");

  const Tensor x = x_in.template cast<Scalar>();
  MlpFit<Scalar> fit{net, {}, 0};
  double best = count_initial ? validation_loss(net, x, targets, n_fit, n)
                              : std::numeric_limits<double>::infinity();
  if (std::isnan(best)) best = std::numeric_limits<double>::infinity();

  std::vector<Tensor*> params;
  for (auto& l : net.layers()) {
    params.push_back(&l.weights);
    params.push_back(&l.bias);
  }
  Adam<Scalar> adam(params);
  std::mt19937_64 rng(cfg.seed ^ 0x5851f42d4c957f2dULL);
  std::vector<Index> order(static_cast<std::size_t>(n_fit));
  std::iota(order.begin(), order.end(), Index{0});

  const Index batch = static_cast<Index>(cfg.batch_size);
  Tensor xb, grad_out;
  std::vector<Tensor> acts, grads;
  std::vector<const Tensor*> grad_ptrs;
  std::size_t since_best = 0;

  for (std::size_t epoch = 1; epoch <= max_epochs; ++epoch) {
    for (Index i = n_fit - 1; i > 0; --i) {
      const auto j = static_cast<Index>(rng() % static_cast<std::uint64_t>(i + 1));
      std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
    }
    LossTerms epoch_terms;
    for (Index s = 0; s < n_fit; s += batch) {
      const Index len = std::min(batch, n_fit - s);
      xb.resize(len, x.cols());
      for (Index r = 0; r < len; ++r) xb.row(r) = x.row(order[static_cast<std::size_t>(s + r)]);
      net.forward(xb, acts);
      const LossTerms t = quantile_loss<Scalar>(acts.back(), targets, net.grid(), 0, &grad_out, order.data() + s);
      epoch_terms.data += t.data * static_cast<double>(len);
      epoch_terms.physics += t.physics * static_cast<double>(len);
      net.backward(acts, grad_out, grads);
      grad_ptrs.clear();
      for (const auto& g : grads) grad_ptrs.push_back(&g);
      adam.step(params, grad_ptrs, cfg.learning_rate);
    }
    epoch_terms.data /= static_cast<double>(n_fit);
    epoch_terms.physics /= static_cast<double>(n_fit);
    const double total = epoch_terms.total(targets.lambda);
    if (!std::isfinite(total)) throw NumericalError("non-finite training loss at epoch " + std::to_string(epoch));
    const double val = validation_loss(net, x, targets, n_fit, n);
    fit.log.push_back({epoch, epoch_terms, total, val});
    const double score = n_val > 0 ? val : total;
    if (!std::isfinite(score)) throw NumericalError("non-finite validation loss at epoch " + std::to_string(epoch));
    if (score < best) {
      best = score;
      fit.model = net;
      fit.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= patience && n_val > 0) {
      break;
    }
  }
  if (!count_initial && fit.best_epoch == 0) fit.model = net;
  return fit;
}

}  // namespace detail

/// Fits a multi-output quantile network (default 2 x 128 sigmoid units).
template <typename Scalar = float>
MlpFit<Scalar> fit_mlp(const Matrix& x, const QuantileTargets& targets, const QuantileGrid& grid,
                       const TrainConfig& cfg) {
  cfg.validate();
  if (x.rows() == 0) throw InputError("network training needs at least one row");
  if (targets.y == nullptr) throw InputError("targets missing");
  BasicQuantileMlp<Scalar> net(x.cols(), cfg.hidden, cfg.activation, targets.y->cols(), grid, cfg.seed);
  return detail::train_mlp(std::move(net), x, targets, cfg, cfg.max_epochs, cfg.patience, false);
}

/// Continues training from `net` on new targets with the fine-tuning
/// patience; the incoming weights count as the epoch-0 candidate.
template <typename Scalar>
MlpFit<Scalar> fine_tune_mlp(BasicQuantileMlp<Scalar> net, const Matrix& x, const QuantileTargets& targets,
                             const TrainConfig& cfg) {
  cfg.validate();
  return detail::train_mlp(std::move(net), x, targets, cfg, cfg.finetune_epochs, cfg.finetune_patience, true);
}

}  // namespace hybridq
