#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hybridq/error.hpp"

namespace hybridq {

// Absolute slack, on the probability scale, used whenever a level is turned
// into an order-statistic rank or compared against a cumulative weight.
// Absorbs representation error such as 0.07 * 100 = 7.000000000000001.
inline constexpr double kLevelTolerance = 1e-10;

// Tolerance for matching a requested level against grid levels.
inline constexpr double kGridMatchTolerance = 1e-9;

// Rank (1-based) of the order statistic that is the level-p empirical
// quantile of n sorted values: k = ceil(p * n), clipped to [1, n].
inline std::size_t order_statistic_rank(double p, std::size_t n) {
  if (n == 0) throw InputError("order statistic of an empty sample");
  const double raw = std::ceil(static_cast<double>(n) * (p - kLevelTolerance));
  if (raw < 1.0) return 1;
  if (raw > static_cast<double>(n)) return n;
  return static_cast<std::size_t>(raw);
}

// Level-p empirical quantile of an already sorted sample.
inline double sorted_quantile(std::span<const double> sorted, double p) {
  return sorted[order_statistic_rank(p, sorted.size()) - 1];
}

inline double empirical_quantile(std::vector<double> values, double p) {
  if (values.empty()) throw InputError("empirical quantile of an empty sample");
  std::sort(values.begin(), values.end());
  return sorted_quantile(values, p);
}

/// Ordered set of probability levels a quantile model predicts.
///
/// Levels are strictly increasing and lie in the open interval (0, 1). The
/// default grid holds the 99 percentiles 0.01 ... 0.99.
class QuantileGrid {
 public:
  QuantileGrid() : QuantileGrid(percentiles()) {}

  explicit QuantileGrid(std::vector<double> levels) : levels_(std::move(levels)) {
    if (levels_.empty()) throw InputError("quantile grid must not be empty");
    for (std::size_t i = 0; i < levels_.size(); ++i) {
      const double q = levels_[i];
      if (!(q > 0.0 && q < 1.0)) {
        throw InputError("quantile level " + std::to_string(q) + " outside (0, 1)");
      }
      if (i > 0 && !(q > levels_[i - 1])) {
        throw InputError("quantile levels must be strictly increasing");
      }
    }
  }

  static std::vector<double> percentiles() {
    std::vector<double> out;
    out.reserve(99);
    for (int i = 1; i <= 99; ++i) out.push_back(i / 100.0);
    return out;
  }

  std::size_t size() const { return levels_.size(); }
  double operator[](std::size_t i) const { return levels_[i]; }
  const std::vector<double>& levels() const { return levels_; }

  std::optional<std::size_t> find(double level) const {
    for (std::size_t i = 0; i < levels_.size(); ++i) {
      if (std::abs(levels_[i] - level) <= kGridMatchTolerance) return i;
    }
    return std::nullopt;
  }

  // Index of an exact grid level; off-grid levels are rejected.
  std::size_t index_of(double level) const {
    if (auto i = find(level)) return *i;
    throw InputError("level " + std::to_string(level) + " is not on the quantile grid");
  }

  bool operator==(const QuantileGrid&) const = default;

 private:
  std::vector<double> levels_;
};

// Grid indices of the lower (alpha/2) and upper (1 - alpha/2) levels of the
// central interval with nominal confidence 1 - alpha.
struct IntervalLevels {
  std::size_t lower;
  std::size_t upper;
};

inline IntervalLevels interval_levels(const QuantileGrid& grid, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw InputError("alpha " + std::to_string(alpha) + " outside (0, 1)");
  }
  return {grid.index_of(alpha / 2.0), grid.index_of(1.0 - alpha / 2.0)};
}

}  // namespace hybridq
