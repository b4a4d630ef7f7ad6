#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <string_view>

#include "hybridq/error.hpp"

namespace hybridq {

enum class StrategyTag { DataDrivenOnly, Assistant, Residual, Surrogate, Augmentation, Constrained };

inline constexpr double kDefaultLambda = 0.1;

/// A hybrid formulation. Only the constrained formulation carries a
/// regularization constant.
class HybridStrategy {
 public:
  static HybridStrategy make(StrategyTag tag) {
    if (tag == StrategyTag::Constrained) return constrained(kDefaultLambda);
    return HybridStrategy(tag, std::nullopt);
  }

  static HybridStrategy constrained(double lambda) {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
      throw InputError("regularization constant must be finite and non-negative, got " + std::to_string(lambda));
    }
    return HybridStrategy(StrategyTag::Constrained, lambda);
  }

  StrategyTag tag() const { return tag_; }
  const std::optional<double>& lambda() const { return lambda_; }
  double lambda_or_zero() const { return lambda_.value_or(0.0); }

  bool needs_physics_for_training() const { return tag_ != StrategyTag::DataDrivenOnly; }
  bool reads_measurements() const { return tag_ != StrategyTag::Surrogate; }

  bool operator==(const HybridStrategy&) const = default;

 private:
  HybridStrategy(StrategyTag tag, std::optional<double> lambda) : tag_(tag), lambda_(lambda) {}

  StrategyTag tag_;
  std::optional<double> lambda_;
};

inline std::string_view to_string(StrategyTag t) {
  switch (t) {
    case StrategyTag::DataDrivenOnly: return "data_driven";
    case StrategyTag::Assistant: return "assistant";
    case StrategyTag::Residual: return "residual";
    case StrategyTag::Surrogate: return "surrogate";
    case StrategyTag::Augmentation: return "augmentation";
    case StrategyTag::Constrained: return "constrained";
  }
  return "?";
}

inline StrategyTag parse_strategy(std::string_view s) {
  for (auto t : {StrategyTag::DataDrivenOnly, StrategyTag::Assistant, StrategyTag::Residual, StrategyTag::Surrogate,
                 StrategyTag::Augmentation, StrategyTag::Constrained}) {
    if (to_string(t) == s) return t;
  }
  throw InputError("unknown strategy '" + std::string(s) +
                   "' (expected data_driven, assistant, residual, surrogate, augmentation or constrained)");
}

}  // namespace hybridq
