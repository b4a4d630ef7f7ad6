#pragma once

#include <algorithm>
#include <span>
#include <string>
#include <vector>

#include "hybridq/core/quantile_grid.hpp"
#include "hybridq/core/types.hpp"
#include "hybridq/error.hpp"

namespace hybridq {

/// Predicted temperatures indexed (timestep, room, level), stored flat in
/// that order so a model output row of width K*Q maps onto one timestep.
class QuantileForecast {
 public:
  QuantileForecast() = default;

  QuantileForecast(Index steps, std::vector<std::string> rooms, QuantileGrid grid)
      : steps_(steps), rooms_(std::move(rooms)), grid_(std::move(grid)),
        values_(static_cast<std::size_t>(steps) * rooms_.size() * grid_.size(), 0.0) {}

  // Adopts an N x (K*Q) matrix with room-major output columns.
  template <typename Derived>
  static QuantileForecast from_matrix(const Eigen::MatrixBase<Derived>& m, std::vector<std::string> rooms,
                                      QuantileGrid grid) {
    const auto width = static_cast<Index>(rooms.size() * grid.size());
    if (m.cols() != width) {
      throw InputError("model output has " + std::to_string(m.cols()) + " columns, expected " + std::to_string(width));
    }
    QuantileForecast f(m.rows(), std::move(rooms), std::move(grid));
    for (Index i = 0; i < m.rows(); ++i) {
      for (Index j = 0; j < width; ++j) f.values_[static_cast<std::size_t>(i * width + j)] = static_cast<double>(m(i, j));
    }
    return f;
  }

  Index steps() const { return steps_; }
  Index rooms_count() const { return static_cast<Index>(rooms_.size()); }
  Index levels() const { return static_cast<Index>(grid_.size()); }
  const std::vector<std::string>& rooms() const { return rooms_; }
  const QuantileGrid& grid() const { return grid_; }
  const std::vector<double>& values() const { return values_; }

  double& at(Index n, Index k, Index q) { return values_[offset(n, k) + static_cast<std::size_t>(q)]; }
  double at(Index n, Index k, Index q) const { return values_[offset(n, k) + static_cast<std::size_t>(q)]; }

  std::span<double> levels_at(Index n, Index k) { return {values_.data() + offset(n, k), grid_.size()}; }
  std::span<const double> levels_at(Index n, Index k) const { return {values_.data() + offset(n, k), grid_.size()}; }

  bool is_monotone() const {
    for (Index n = 0; n < steps_; ++n) {
      for (Index k = 0; k < rooms_count(); ++k) {
        const auto v = levels_at(n, k);
        if (!std::is_sorted(v.begin(), v.end())) return false;
      }
    }
    return true;
  }

  // Copy restricted to rows [begin, begin + count).
  QuantileForecast slice(Index begin, Index count) const {
    QuantileForecast f(count, rooms_, grid_);
    const std::size_t stride = rooms_.size() * grid_.size();
    std::copy_n(values_.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(begin) * stride),
                static_cast<std::size_t>(count) * stride, f.values_.begin());
    return f;
  }

  bool operator==(const QuantileForecast&) const = default;

 private:
  std::size_t offset(Index n, Index k) const {
    return (static_cast<std::size_t>(n) * rooms_.size() + static_cast<std::size_t>(k)) * grid_.size();
  }

  Index steps_ = 0;
  std::vector<std::string> rooms_;
  QuantileGrid grid_;
  std::vector<double> values_;
};

/// Sorts each (timestep, room) level vector ascending.
inline QuantileForecast sort_quantiles(QuantileForecast f) {
  for (Index n = 0; n < f.steps(); ++n) {
    for (Index k = 0; k < f.rooms_count(); ++k) {
      auto v = f.levels_at(n, k);
      std::sort(v.begin(), v.end());
    }
  }
  return f;
}

}  // namespace hybridq
