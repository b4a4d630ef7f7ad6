#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "hybridq/error.hpp"

namespace hybridq {

enum class Activation { Sigmoid, Tanh, Relu, Identity };

inline std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::Sigmoid: return "sigmoid";
    case Activation::Tanh: return "tanh";
    case Activation::Relu: return "relu";
    case Activation::Identity: return "identity";
  }
  return "?";
}

inline Activation parse_activation(std::string_view s) {
  if (s == "sigmoid") return Activation::Sigmoid;
  if (s == "tanh") return Activation::Tanh;
  if (s == "relu") return Activation::Relu;
  if (s == "identity") return Activation::Identity;
  throw InputError("unknown activation '" + std::string(s) + "'");
}

struct TrainConfig {
  // Network and shared gradient settings.
  std::size_t batch_size = 32;
  std::size_t max_epochs = 1000;
  std::size_t patience = 10;
  double validation_fraction = 0.2;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
  std::vector<std::size_t> hidden{128, 128};
  Activation activation = Activation::Sigmoid;

  // Linear model: full-batch Adam with step size lr / (1 + decay * epoch),
  // stopped once the loss improves by less than `tolerance` over `patience`
  // epochs.
  double linear_learning_rate = 0.02;
  double linear_decay = 0.01;
  double tolerance = 1e-8;

  // Forest.
  std::size_t trees = 500;
  std::size_t min_samples_split = 2;
  std::size_t min_samples_leaf = 1;
  double max_features = 1.0;  // fraction of features tried per split
  bool bootstrap = true;

  // Fine-tuning a surrogate on measurements.
  std::size_t finetune_patience = 3;
  std::size_t finetune_epochs = 1000;
  std::size_t finetune_trees = 100;

  void validate() const {
    if (batch_size == 0) throw InputError("batch_size must be positive");
    if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) {
      throw InputError("validation_fraction must lie in [0, 1)");
    }
    if (!(learning_rate > 0.0) || !(linear_learning_rate > 0.0)) throw InputError("learning rates must be positive");
    if (linear_decay < 0.0) throw InputError("linear_decay must be non-negative");
    if (min_samples_split < 2) throw InputError("min_samples_split must be at least 2");
    if (min_samples_leaf < 1) throw InputError("min_samples_leaf must be at least 1");
    if (!(max_features > 0.0 && max_features <= 1.0)) throw InputError("max_features must lie in (0, 1]");
    for (auto h : hidden) {
      if (h == 0) throw InputError("hidden layer widths must be positive");
    }
  }
};

}  // namespace hybridq
