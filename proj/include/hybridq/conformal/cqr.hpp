#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hybridq/core/quantile_grid.hpp"
#include "hybridq/core/types.hpp"
#include "hybridq/error.hpp"
#include "hybridq/models/forecast.hpp"

namespace hybridq {

/// s_i = max(L_i - y_i, y_i - U_i); negative exactly when y is strictly
/// inside the interval.
inline std::vector<double> nonconformity_scores(std::span<const double> lower, std::span<const double> upper,
                                                std::span<const double> y) {
  if (lower.size() != y.size() || upper.size() != y.size()) {
    throw InputError("interval bounds (" + std::to_string(lower.size()) + ", " + std::to_string(upper.size()) +
                     ") and outcomes (" + std::to_string(y.size()) + ") differ in length");
  }
  std::vector<double> s(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) s[i] = std::max(lower[i] - y[i], y[i] - upper[i]);
  return s;
}

/// Finite-sample corrected empirical quantile of the scores at level
/// (n + 1)(1 - alpha) / n, or the largest score when that level exceeds 1.
inline double compute_delta_q(std::vector<double> scores, double alpha) {
  if (scores.empty()) throw InputError("no nonconformity scores to calibrate on");
  if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("alpha must lie in (0, 1)");
  const double n = static_cast<double>(scores.size());
  const double level = (n + 1.0) * (1.0 - alpha) / n;
  if (level > 1.0) return *std::max_element(scores.begin(), scores.end());
  std::sort(scores.begin(), scores.end());
  return sorted_quantile(scores, level);
}

enum class ConformalMode {
  PerRoom,   // one correction per (room, alpha) from that room's scores
  Pooled,    // scores pooled over rooms; the same correction for every room
};

struct ConformalEntry {
  Index room = 0;
  double alpha = 0.0;
  std::size_t lower = 0;  // grid indices of the interval columns
  std::size_t upper = 0;
  double delta_q = 0.0;
  std::size_t count = 0;

  bool operator==(const ConformalEntry&) const = default;
};

/// Corrections per (room, nominal confidence). With `full_grid` every
/// symmetric pair of levels below and above the median is calibrated.
struct ConformalCalibrator {
  std::vector<std::string> rooms;
  QuantileGrid grid;
  ConformalMode mode = ConformalMode::PerRoom;
  bool full_grid = false;
  std::vector<double> alphas;
  std::vector<ConformalEntry> entries;

  const ConformalEntry* find(Index room, double alpha) const {
    for (const auto& e : entries) {
      if (e.room == room && std::abs(e.alpha - alpha) <= kGridMatchTolerance) return &e;
    }
    return nullptr;
  }

  const ConformalEntry& at(Index room, double alpha) const {
    if (const auto* e = find(room, alpha)) return *e;
    throw UsageError("no conformal correction for room " + std::to_string(room) + " at alpha " + std::to_string(alpha));
  }

  bool operator==(const ConformalCalibrator&) const = default;
};

namespace detail {

inline std::vector<double> symmetric_alphas(const QuantileGrid& grid) {
  std::vector<double> out;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double q = grid[i];
    if (q < 0.5 - kGridMatchTolerance && grid.find(1.0 - q)) out.push_back(2.0 * q);
  }
  return out;
}

inline std::vector<double> room_scores(const QuantileForecast& f, const Matrix& y, Index k, std::size_t lo,
                                       std::size_t hi) {
  std::vector<double> l(static_cast<std::size_t>(f.steps())), u(l.size()), obs(l.size());
  for (Index n = 0; n < f.steps(); ++n) {
    l[static_cast<std::size_t>(n)] = f.at(n, k, static_cast<Index>(lo));
    u[static_cast<std::size_t>(n)] = f.at(n, k, static_cast<Index>(hi));
    obs[static_cast<std::size_t>(n)] = y(n, k);
  }
  return nonconformity_scores(l, u, obs);
}

}  // namespace detail

/// Fits corrections on a sorted calibration-set forecast and its outcomes.
inline ConformalCalibrator fit_calibrator(const QuantileForecast& calibration, const Matrix& y,
                                          const std::vector<double>& alphas, ConformalMode mode = ConformalMode::PerRoom,
                                          bool full_grid = false) {
  if (calibration.steps() == 0) throw InputError("calibration set is empty");
  if (y.rows() != calibration.steps() || y.cols() != calibration.rooms_count()) {
    throw InputError("calibration outcomes do not align with the forecast");
  }
  ConformalCalibrator c;
  c.rooms = calibration.rooms();
  c.grid = calibration.grid();
  c.mode = mode;
  c.full_grid = full_grid;
  c.alphas = full_grid ? detail::symmetric_alphas(c.grid) : alphas;
  if (c.alphas.empty()) throw InputError("no confidence levels to calibrate");
  for (double alpha : c.alphas) {
    const auto levels = interval_levels(c.grid, alpha);
    std::vector<std::vector<double>> scores;
    for (Index k = 0; k < calibration.rooms_count(); ++k) {
      scores.push_back(detail::room_scores(calibration, y, k, levels.lower, levels.upper));
    }
    if (mode == ConformalMode::Pooled) {
      std::vector<double> all;
      for (const auto& s : scores) all.insert(all.end(), s.begin(), s.end());
      const double dq = compute_delta_q(all, alpha);
      for (Index k = 0; k < calibration.rooms_count(); ++k) {
        c.entries.push_back({k, alpha, levels.lower, levels.upper, dq, all.size()});
      }
    } else {
      for (Index k = 0; k < calibration.rooms_count(); ++k) {
        const auto& s = scores[static_cast<std::size_t>(k)];
        c.entries.push_back({k, alpha, levels.lower, levels.upper, compute_delta_q(s, alpha), s.size()});
      }
    }
  }
  return c;
}

/// Replaces the designated interval columns by (L - dq, U + dq). Other
/// levels are clamped between the nearest corrected columns so the forecast
/// stays monotone; when the corrected columns themselves cross, the level
/// vector is sorted.
inline void apply_corrections(std::span<double> v, const std::vector<std::pair<std::size_t, double>>& pinned_in) {
  auto pinned = pinned_in;
  std::sort(pinned.begin(), pinned.end());
  for (const auto& [i, value] : pinned) v[i] = value;
  bool ordered = true;
  for (std::size_t j = 1; j < pinned.size(); ++j) ordered = ordered && pinned[j - 1].second <= pinned[j].second;
  if (!ordered) {
    std::sort(v.begin(), v.end());
    return;
  }
  double lo = -std::numeric_limits<double>::infinity();
  std::size_t next = 0;
  for (std::size_t q = 0; q < v.size(); ++q) {
    if (next < pinned.size() && pinned[next].first == q) {
      lo = pinned[next++].second;
      continue;
    }
    const double hi = next < pinned.size() ? pinned[next].second : std::numeric_limits<double>::infinity();
    v[q] = std::clamp(v[q], lo, hi);
  }
}

/// Conformalized copy of a sorted forecast at one nominal confidence.
inline QuantileForecast conformalize(QuantileForecast f, const ConformalCalibrator& c, double alpha) {
  if (!(f.grid() == c.grid)) throw UsageError("calibrator grid differs from the forecast grid");
  for (Index k = 0; k < f.rooms_count(); ++k) {
    const auto& e = c.at(k, alpha);
    for (Index n = 0; n < f.steps(); ++n) {
      auto v = f.levels_at(n, k);
      apply_corrections(v, {{e.lower, v[e.lower] - e.delta_q}, {e.upper, v[e.upper] + e.delta_q}});
    }
  }
  return f;
}

/// Applies every correction the calibrator holds at once, each computed from
/// the uncorrected forecast.
inline QuantileForecast conformalize_all(QuantileForecast f, const ConformalCalibrator& c) {
  if (!(f.grid() == c.grid)) throw UsageError("calibrator grid differs from the forecast grid");
  if (f.rooms_count() != static_cast<Index>(c.rooms.size())) throw UsageError("calibrator room count differs");
  std::vector<std::pair<std::size_t, double>> pinned;
  for (Index k = 0; k < f.rooms_count(); ++k) {
    std::vector<const ConformalEntry*> es;
    for (double a : c.alphas) es.push_back(&c.at(k, a));
    for (Index n = 0; n < f.steps(); ++n) {
      auto v = f.levels_at(n, k);
      pinned.clear();
      for (const auto* e : es) {
        pinned.emplace_back(e->lower, v[e->lower] - e->delta_q);
        pinned.emplace_back(e->upper, v[e->upper] + e->delta_q);
      }
      apply_corrections(v, pinned);
    }
  }
  return f;
}

}  // namespace hybridq
