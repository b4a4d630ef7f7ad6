#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "hybridq/core/dataset.hpp"
#include "hybridq/core/feature_schema.hpp"
#include "hybridq/core/types.hpp"
#include "hybridq/error.hpp"

namespace hybridq {

/// Single-room 1R1C parameters with switchable window conductance.
struct RoomRc {
  double resistance = 0.02;    // envelope R, K/W
  double capacitance = 8e6;    // C, J/K
  double solar_aperture = 0.8; // a_sol, m^2
  double occupant_gain = 100;  // g_occ, W per occupant
  double hvac_coupling = 3000; // k_hvac, W per (kg/s * K)
  double window_ua = 60;       // u_win, W/K with the window open

  static constexpr std::size_t kCount = 6;

  std::array<double, kCount> to_array() const {
    return {resistance, capacitance, solar_aperture, occupant_gain, hvac_coupling, window_ua};
  }
  static RoomRc from_array(const std::array<double, kCount>& a) { return {a[0], a[1], a[2], a[3], a[4], a[5]}; }

  double time_constant() const { return resistance * capacitance; }

  bool operator==(const RoomRc&) const = default;
};

inline constexpr std::array<const char*, RoomRc::kCount> kRcParameterNames = {
    "resistance", "capacitance", "solar_aperture", "occupant_gain", "hvac_coupling", "window_ua"};

using RcParams = std::vector<RoomRc>;

struct RcBounds {
  RoomRc lower{0.002, 5e5, 0.01, 5.0, 100.0, 1.0};
  RoomRc upper{0.2, 5e7, 5.0, 400.0, 20000.0, 500.0};

  void validate() const {
    const auto lo = lower.to_array(), hi = upper.to_array();
    for (std::size_t i = 0; i < RoomRc::kCount; ++i) {
      if (!std::isfinite(lo[i]) || !std::isfinite(hi[i])) {
        throw InputError(std::string("non-finite bound for ") + kRcParameterNames[i]);
      }
      if (lo[i] > hi[i]) throw InputError(std::string("infeasible bounds for ") + kRcParameterNames[i] + ": lower > upper");
      if (lo[i] <= 0.0) throw InputError(std::string("lower bound for ") + kRcParameterNames[i] + " must be positive");
    }
  }

  bool contains(const RoomRc& p) const {
    const auto lo = lower.to_array(), hi = upper.to_array(), v = p.to_array();
    for (std::size_t i = 0; i < RoomRc::kCount; ++i) {
      if (v[i] < lo[i] || v[i] > hi[i]) return false;
    }
    return true;
  }
};

inline constexpr double kSanityLow = -30.0;
inline constexpr double kSanityHigh = 60.0;

/// RC parameters, the explicit-Euler sub-step and the initial zone state.
struct PhysicsModel {
  RcParams params;
  double step_seconds = 60.0;
  std::vector<double> initial;  // degC per room

  void validate(EpochSeconds cadence = kQuarterHour) const {
    if (params.empty()) throw InputError("physics model has no rooms");
    if (initial.size() != params.size()) throw InputError("initial state size differs from room count");
    if (!(step_seconds > 0.0)) throw InputError("integration step must be positive");
    const double ratio = static_cast<double>(cadence) / step_seconds;
    if (std::abs(ratio - std::round(ratio)) > 1e-9) {
      throw InputError("integration step " + std::to_string(step_seconds) + " s does not divide the data cadence");
    }
    for (const auto& p : params) {
      for (double v : p.to_array()) {
        if (!(v > 0.0) || !std::isfinite(v)) throw InputError("RC parameters must be finite and positive");
      }
    }
  }

  int substeps(EpochSeconds cadence = kQuarterHour) const {
    return static_cast<int>(std::lround(static_cast<double>(cadence) / step_seconds));
  }
};

// Inputs to one room during one bin.
struct RoomDrivers {
  double t_out;
  double solar;
  double occupants;
  double mass_flow;
  double t_supply;
  double window;  // 0 closed, 1 open
};

/// Net heat flow into the room (W) at temperature `t`.
inline double room_heat_flow(const RoomRc& p, double t, const RoomDrivers& d, double extra_heat) {
  const double conductance = 1.0 / p.resistance + p.window_ua * d.window;  // 1 / R_eff
  return (d.t_out - t) * conductance + p.solar_aperture * d.solar + p.occupant_gain * d.occupants +
         p.hvac_coupling * d.mass_flow * (d.t_supply - t) + extra_heat;
}

/// Advances one room through one bin of `substeps` explicit-Euler steps.
/// Throws NumericalError when the state leaves the sanity band.
inline double advance_room(const RoomRc& p, double t, const RoomDrivers& d, double dt, int substeps,
                           double extra_heat, Index bin) {
  const double gain = dt / p.capacitance;
  for (int s = 0; s < substeps; ++s) {
    t += gain * room_heat_flow(p, t, d, extra_heat);
    if (!std::isfinite(t) || t < kSanityLow || t > kSanityHigh) {
      throw NumericalError("RC simulation diverged at bin " + std::to_string(bin) + ", sub-step " +
                           std::to_string(s) + " (dt = " + std::to_string(dt) + " s)");
    }
  }
  return t;
}

/// Column indices of the simulator's driving channels in a feature schema.
struct DriverColumns {
  Index t_out, sol_direct, sol_diffuse, t_supply;
  std::vector<Index> occupancy, mass_flow, window;

  DriverColumns(const FeatureSchema& schema, const std::vector<std::string>& rooms) {
    auto col = [&](const std::string& name) { return static_cast<Index>(schema.index_of(name)); };
    t_out = col("t_out");
    sol_direct = col("sol_direct");
    sol_diffuse = col("sol_diffuse");
    t_supply = col("t_supply");
    for (const auto& r : rooms) {
      occupancy.push_back(col("occ_" + r));
      mass_flow.push_back(col("mflow_" + r));
      window.push_back(col("window_" + r));
    }
  }

  RoomDrivers at(const Matrix& exog, Index row, std::size_t room) const {
    return {exog(row, t_out), exog(row, sol_direct) + exog(row, sol_diffuse), exog(row, occupancy[room]),
            exog(row, mass_flow[room]), exog(row, t_supply), exog(row, window[room])};
  }
};

/// Open-loop simulation of every room over the first `horizon` rows (all rows
/// when negative). Row n of the output is the state at timestamp n; row 0 is
/// the initial state.
inline Matrix simulate(const PhysicsModel& model, const Matrix& exog, const FeatureSchema& schema,
                       const std::vector<std::string>& rooms, Index horizon = -1) {
  model.validate();
  if (rooms.size() != model.params.size()) throw InputError("room list does not match the physics model");
  const DriverColumns cols(schema, rooms);
  const Index n = horizon < 0 ? exog.rows() : std::min(horizon, exog.rows());
  const int sub = model.substeps();
  Matrix out(n, static_cast<Index>(rooms.size()));
  for (std::size_t r = 0; r < rooms.size(); ++r) {
    double t = model.initial[r];
    for (Index i = 0; i < n; ++i) {
      out(i, static_cast<Index>(r)) = t;
      if (i + 1 < n) t = advance_room(model.params[r], t, cols.at(exog, i, r), model.step_seconds, sub, 0.0, i);
    }
  }
  return out;
}

inline Matrix simulate(const PhysicsModel& model, const TimeSeriesDataset& ds, Index horizon = -1) {
  return simulate(model, ds.exog, ds.schema, ds.rooms, horizon);
}

}  // namespace hybridq
