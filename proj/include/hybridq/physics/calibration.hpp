#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include "hybridq/core/dataset.hpp"
#include "hybridq/physics/nelder_mead.hpp"
#include "hybridq/physics/rc_model.hpp"

namespace hybridq {

struct CalibrationOptions {
  std::size_t budget = 500;  // objective evaluations per room
  std::array<bool, RoomRc::kCount> free{true, true, true, true, true, true};
  Index rows = -1;  // leading rows used; all when negative
};

namespace detail {

inline double room_sse(const RoomRc& p, double initial, const Matrix& exog, const DriverColumns& cols,
                       std::size_t room, const Matrix& observed, Index n, double dt, int sub) {
  double t = initial, sse = 0.0;
  for (Index i = 0; i < n; ++i) {
    const double e = t - observed(i, static_cast<Index>(room));
    sse += e * e;
    if (i + 1 < n) t = advance_room(p, t, cols.at(exog, i, room), dt, sub, 0.0, i);
  }
  return sse;
}

}  // namespace detail

inline double simulation_rmse(const PhysicsModel& model, const TimeSeriesDataset& observed, Index rows = -1) {
  const Matrix sim = simulate(model, observed, rows);
  const Index n = sim.rows();
  return std::sqrt((sim - observed.temps.topRows(n)).squaredNorm() / static_cast<double>(sim.size()));
}

/// Derivative-free fit of the free RC parameters to observed temperatures.
///
/// The objective is the RMSE over all rooms with equal weights. Rooms are
/// thermally independent, so the squared error separates by room and each
/// room's free parameters are searched with their own bounded simplex; the
/// budget counts evaluations per room. Returned parameters always lie within
/// `bounds` and never score worse than the clipped starting point.
inline RcParams calibrate(const PhysicsModel& model, const TimeSeriesDataset& observed, const RcBounds& bounds,
                          const CalibrationOptions& opts = {}) {
  model.validate();
  bounds.validate();
  const Index n = opts.rows < 0 ? observed.rows() : std::min(opts.rows, observed.rows());
  if (n < kStepsPerDay) throw InputError("calibration needs at least one day of observations");
  if (observed.rooms.size() != model.params.size()) throw InputError("observed rooms do not match the physics model");

  std::vector<std::size_t> free_idx;
  for (std::size_t i = 0; i < RoomRc::kCount; ++i) {
    if (opts.free[i]) free_idx.push_back(i);
  }
  if (opts.budget < free_idx.size() + 1) {
    throw InputError("calibration budget " + std::to_string(opts.budget) + " is smaller than the simplex size " +
                     std::to_string(free_idx.size() + 1));
  }

  const DriverColumns cols(observed.schema, observed.rooms);
  const int sub = model.substeps();
  const auto lo_all = bounds.lower.to_array(), hi_all = bounds.upper.to_array();

  RcParams out;
  out.reserve(model.params.size());
  for (std::size_t r = 0; r < model.params.size(); ++r) {
    auto base = model.params[r].to_array();
    for (std::size_t i = 0; i < RoomRc::kCount; ++i) base[i] = std::clamp(base[i], lo_all[i], hi_all[i]);
    if (free_idx.empty()) {
      out.push_back(RoomRc::from_array(base));
      continue;
    }
    std::vector<double> x0, lo, hi;
    for (std::size_t i : free_idx) {
      x0.push_back(base[i]);
      lo.push_back(lo_all[i]);
      hi.push_back(hi_all[i]);
    }
    auto objective = [&](const std::vector<double>& x) {
      auto p = base;
      for (std::size_t j = 0; j < free_idx.size(); ++j) p[free_idx[j]] = x[j];
      try {
        return detail::room_sse(RoomRc::from_array(p), model.initial[r], observed.exog, cols, r, observed.temps, n,
                                model.step_seconds, sub);
      } catch (const NumericalError&) {
        return std::numeric_limits<double>::infinity();
      }
    };
    NelderMeadOptions nm;
    nm.max_evaluations = opts.budget;
    const auto result = nelder_mead(objective, x0, lo, hi, nm);
    auto fitted = base;
    for (std::size_t j = 0; j < free_idx.size(); ++j) fitted[free_idx[j]] = result.x[j];
    out.push_back(RoomRc::from_array(fitted));
  }
  return out;
}

}  // namespace hybridq
