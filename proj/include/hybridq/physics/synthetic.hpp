#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "hybridq/core/dataset.hpp"
#include "hybridq/core/feature_schema.hpp"
#include "hybridq/core/timestamp.hpp"
#include "hybridq/physics/calibration.hpp"
#include "hybridq/physics/rc_model.hpp"

namespace hybridq {

enum class RoomType { Bedroom, Living, Bathroom };

// Room types cycle bedroom, living, bedroom, bathroom, bathroom.
inline RoomType room_type_at(std::size_t i) {
  static constexpr RoomType cycle[] = {RoomType::Bedroom, RoomType::Living, RoomType::Bedroom, RoomType::Bathroom,
                                       RoomType::Bathroom};
  return cycle[i % 5];
}

/// Scenario knobs for the synthetic building. Every field has a default so
/// a config file only needs to name what it changes.
struct ScenarioConfig {
  std::vector<std::string> rooms{"bed1", "living", "bed2", "bath1", "bath2"};
  std::string start = "2020-01-01T00:00:00";
  Index days = 730;
  Index train_days = 365;  // first block; extended window openings only occur after it

  double t_mean = 9.0;
  double t_annual_amplitude = 9.0;
  double t_diurnal_amplitude = 4.0;
  double weather_ar = 0.98;    // AR(1) coefficient per 15-min step
  double weather_noise = 0.3;  // AR(1) innovation sd, degC
  double solar_peak = 750.0;   // W/m^2

  double window_rate = 0.25;         // short openings per room per day
  double window_max_minutes = 60.0;  // short openings last 15 min up to this
  int extended_windows = 4;          // long openings per room in the test block
  double extended_min_hours = 8.0;
  double extended_max_hours = 36.0;
  Index extended_window_days = 90;  // long openings start within this many test-block days

  double noise_scale = 0.1;      // observation noise sd at zero occupancy, degC
  double unmodeled_scale = 1.0;  // occupancy heat noise, shower gains, blind shading
  double bias = 0.2;             // multiplicative physics-parameter bias (+/-)
  double physics_offset = 0.0;   // additive degC offset on the physics channel
  Index calibration_days = 120;  // refit of the biased model on leading days; 0 disables
  std::size_t calibration_budget = 300;
  bool iid = false;  // permute rows so every split is exchangeable

  double step_seconds = 60.0;
  double initial_temperature = 21.0;

  void validate() const {
    if (days <= 0) throw InputError("scenario duration must be positive");
    if (rooms.empty()) throw InputError("scenario needs at least one room");
    if (train_days < 0 || train_days > days) throw InputError("train_days must lie in [0, days]");
    if (bias < 0.0 || bias >= 1.0) throw InputError("bias must lie in [0, 1)");
    if (noise_scale < 0.0 || unmodeled_scale < 0.0) throw InputError("noise scales must be non-negative");
    if (window_rate < 0.0 || extended_windows < 0) throw InputError("window settings must be non-negative");
  }
};

inline RoomRc default_room_params(RoomType type) {
  switch (type) {
    case RoomType::Bedroom: return {0.025, 6e6, 0.6, 90.0, 2000.0, 60.0};
    case RoomType::Living: return {0.015, 1.2e7, 1.2, 100.0, 2500.0, 80.0};
    case RoomType::Bathroom: return {0.04, 3e6, 0.25, 120.0, 1200.0, 40.0};
  }
  return {};
}

inline RcParams default_true_params(const std::vector<std::string>& rooms) {
  RcParams p;
  for (std::size_t i = 0; i < rooms.size(); ++i) p.push_back(default_room_params(room_type_at(i)));
  return p;
}

struct GeneratedScenario {
  TimeSeriesDataset dataset;
  RcParams truth;
  RcParams physics;
  std::vector<double> physics_rmse;  // per room, physics channel vs measured
  std::vector<std::uint8_t> extended_window;  // per row: any room inside a long opening
};

namespace detail {

inline constexpr double kMaxMassFlow = 0.04;  // kg/s
inline constexpr double kFlowGain = 0.03;     // kg/s per K of setpoint error
inline constexpr double kCoolingSupply = 18.0;

struct OccupancyProfile {
  int capacity;
  double (*probability)(int hour, bool weekend);
};

inline double bedroom_presence(int h, bool weekend) {
  if (h >= 22 || h < 7) return 0.92;
  if (weekend && h < 10) return 0.7;
  return 0.08;
}
inline double living_presence(int h, bool weekend) {
  if (h >= 17 && h < 23) return 0.75;
  if (weekend && h >= 9 && h < 17) return 0.55;
  if (h >= 7 && h < 9) return 0.35;
  return 0.04;
}
inline double bathroom_presence(int h, bool) {
  if (h >= 6 && h < 9) return 0.3;
  if (h >= 20 && h < 23) return 0.2;
  return 0.02;
}

inline OccupancyProfile profile(RoomType t) {
  switch (t) {
    case RoomType::Bedroom: return {2, bedroom_presence};
    case RoomType::Living: return {3, living_presence};
    case RoomType::Bathroom: return {1, bathroom_presence};
  }
  return {1, bathroom_presence};
}

}  // namespace detail

/// Synthetic two-block building dataset.
///
/// Ground truth comes from a closed-loop simulation with the true parameters
/// plus effects the RC model does not describe (occupancy-driven heat noise,
/// shower gains in bathrooms, blind shading) and heteroscedastic sensor
/// noise. The physics channel replays the recorded drivers open-loop through
/// parameters biased by (1 +/- bias), optionally refitted on the first
/// `calibration_days`. Output is a pure function of (truth, config, seed).
inline GeneratedScenario generate_synthetic_dataset(const RcParams& truth, const ScenarioConfig& cfg,
                                                    std::uint64_t seed) {
  cfg.validate();
  if (truth.size() != cfg.rooms.size()) throw InputError("true parameters do not match the room list");
  const std::size_t k = cfg.rooms.size();
  const Index n = cfg.days * kStepsPerDay;
  const Index train_rows = cfg.train_days * kStepsPerDay;
  const EpochSeconds t0 = parse_iso8601(cfg.start);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  TimeSeriesDataset ds;
  ds.rooms = cfg.rooms;
  ds.schema = FeatureSchema::standard(cfg.rooms);
  ds.timestamps.resize(static_cast<std::size_t>(n));
  ds.exog = Matrix::Zero(n, static_cast<Index>(ds.schema.size()));
  ds.temps.resize(n, static_cast<Index>(k));
  auto col = [&](const std::string& name) { return static_cast<Index>(ds.schema.index_of(name)); };

  const Index c_season = col("season"), c_weekend = col("weekend"), c_daytime = col("daytime");
  const Index c_tout = col("t_out"), c_tdew = col("t_dew"), c_dir = col("sol_direct"), c_dif = col("sol_diffuse");
  const Index c_rh = col("rel_humidity"), c_wdir = col("wind_dir"), c_wspd = col("wind_speed");
  const Index c_hflow = col("mflow_heat_total"), c_cflow = col("mflow_cool_total"), c_tsup = col("t_supply");
  const Index c_mode = col("ac_mode");
  std::vector<Index> c_flow, c_sp, c_occ, c_win, c_blind;
  for (const auto& r : cfg.rooms) {
    c_flow.push_back(col("mflow_" + r));
    c_sp.push_back(col("setpoint_" + r));
    c_occ.push_back(col("occ_" + r));
    c_win.push_back(col("window_" + r));
    c_blind.push_back(col("blinds_" + r));
  }

  // Long openings: fixed per room before the main loop so they do not perturb
  // the rest of the random stream when toggled.
  std::vector<std::vector<std::uint8_t>> long_open(k, std::vector<std::uint8_t>(static_cast<std::size_t>(n), 0));
  {
    std::mt19937_64 wrng(seed ^ 0x9e3779b97f4a7c15ULL);
    const Index span_days = std::min(cfg.extended_window_days, cfg.days - cfg.train_days);
    for (std::size_t r = 0; r < k && span_days > 0; ++r) {
      for (int e = 0; e < cfg.extended_windows; ++e) {
        const Index start = train_rows + static_cast<Index>(unif(wrng) * static_cast<double>(span_days * kStepsPerDay));
        const double hours = cfg.extended_min_hours + unif(wrng) * (cfg.extended_max_hours - cfg.extended_min_hours);
        const Index len = static_cast<Index>(std::ceil(hours * 4.0));
        for (Index i = start; i < std::min(n, start + len); ++i) long_open[r][static_cast<std::size_t>(i)] = 1;
      }
    }
  }

  GeneratedScenario out;
  out.truth = truth;
  out.extended_window.assign(static_cast<std::size_t>(n), 0);

  std::vector<double> temp(k, cfg.initial_temperature);
  std::vector<double> heat_noise(k, 0.0);
  std::vector<int> present(k, 0);
  std::vector<Index> short_open_left(k, 0);
  double weather_ar = 0.0, cloud_ar = 0.0, rh_ar = 0.0, wind_ar = 0.0;
  double t_out_smooth = cfg.t_mean - cfg.t_annual_amplitude;
  const double dt = cfg.step_seconds;
  const int sub = static_cast<int>(std::lround(static_cast<double>(kQuarterHour) / dt));
  const double two_pi = 2.0 * std::numbers::pi;

  for (Index i = 0; i < n; ++i) {
    const EpochSeconds ts = t0 + i * kQuarterHour;
    ds.timestamps[static_cast<std::size_t>(i)] = ts;
    const CalendarInfo cal = calendar(ts);
    const double hour = static_cast<double>((ts % kDay + kDay) % kDay) / 3600.0;
    const double doy = static_cast<double>(cal.day_of_year) + hour / 24.0;
    const bool weekend = weekend_of(ts) > 0.5;

    weather_ar = cfg.weather_ar * weather_ar + cfg.weather_noise * normal(rng);
    cloud_ar = 0.995 * cloud_ar + 0.1 * normal(rng);
    rh_ar = 0.99 * rh_ar + 0.5 * normal(rng);
    wind_ar = 0.97 * wind_ar + 0.3 * normal(rng);

    const double t_out = cfg.t_mean - cfg.t_annual_amplitude * std::cos(two_pi * (doy - 20.0) / 365.0) -
                         cfg.t_diurnal_amplitude * std::cos(two_pi * (hour - 3.0) / 24.0) + weather_ar;
    const double seasonal = std::sin(two_pi * (doy - 80.0) / 365.0);
    const double day_len = 12.0 + 4.0 * seasonal;
    const double sunrise = 12.0 - day_len / 2.0;
    const double elevation = std::max(0.0, std::sin(std::numbers::pi * (hour - sunrise) / day_len));
    const double peak = cfg.solar_peak * (0.6 + 0.4 * seasonal);
    const double cloud = 1.0 / (1.0 + std::exp(-cloud_ar * 3.0));
    const double direct = peak * elevation * (1.0 - 0.8 * cloud);
    const double diffuse = peak * elevation * (0.1 + 0.25 * cloud);

    t_out_smooth += (t_out - t_out_smooth) / 96.0;
    const bool heating = t_out_smooth < 15.0;
    const double t_supply = heating ? std::clamp(30.0 + 0.5 * (15.0 - t_out_smooth), 28.0, 40.0) : detail::kCoolingSupply;

    ds.exog(i, c_season) = season_of(ts);
    ds.exog(i, c_weekend) = weekend ? 1.0 : 0.0;
    ds.exog(i, c_daytime) = daytime_of(ts);
    ds.exog(i, c_tout) = t_out;
    ds.exog(i, c_tdew) = t_out - 3.0 - 2.0 * std::abs(std::tanh(rh_ar));
    ds.exog(i, c_dir) = direct;
    ds.exog(i, c_dif) = diffuse;
    ds.exog(i, c_rh) = std::clamp(70.0 + 15.0 * std::tanh(rh_ar / 3.0) - 10.0 * elevation, 15.0, 100.0);
    ds.exog(i, c_wdir) = std::fmod(std::abs(180.0 + 90.0 * wind_ar), 360.0);
    ds.exog(i, c_wspd) = std::max(0.0, 3.0 + 1.5 * wind_ar);
    ds.exog(i, c_tsup) = t_supply;
    ds.exog(i, c_mode) = heating ? 1.0 : 0.0;

    double heat_total = 0.0, cool_total = 0.0;
    bool any_long = false;
    for (std::size_t r = 0; r < k; ++r) {
      const RoomType type = room_type_at(r);
      const auto prof = detail::profile(type);
      const int h = static_cast<int>(hour);
      // Presence refreshes hourly; bathrooms every bin.
      if (type == RoomType::Bathroom || i % 4 == 0) {
        present[r] = 0;
        const double p = prof.probability(h, weekend);
        for (int c = 0; c < prof.capacity; ++c) present[r] += unif(rng) < p ? 1 : 0;
      }
      const double occupants = present[r];

      if (short_open_left[r] > 0) {
        --short_open_left[r];
      } else if (unif(rng) < cfg.window_rate / static_cast<double>(kStepsPerDay)) {
        const double minutes = 15.0 + unif(rng) * std::max(0.0, cfg.window_max_minutes - 15.0);
        short_open_left[r] = static_cast<Index>(std::ceil(minutes / 15.0));
      }
      const bool long_window = long_open[r][static_cast<std::size_t>(i)] != 0;
      any_long = any_long || long_window;
      const double window = (short_open_left[r] > 0 || long_window) ? 1.0 : 0.0;

      const double night_setback = (type == RoomType::Bedroom && (h >= 23 || h < 6)) ? 1.0 : 0.0;
      const double setpoint = heating ? 21.0 - night_setback : 24.5;
      double flow = 0.0;
      if (heating) {
        flow = std::clamp(detail::kFlowGain * (setpoint - temp[r]), 0.0, detail::kMaxMassFlow);
        heat_total += flow;
      } else {
        flow = std::clamp(detail::kFlowGain * (temp[r] - setpoint), 0.0, detail::kMaxMassFlow);
        cool_total += flow;
      }
      const bool blinds = direct > 300.0 && temp[r] > 23.0;

      ds.exog(i, c_flow[r]) = flow;
      ds.exog(i, c_sp[r]) = setpoint;
      ds.exog(i, c_occ[r]) = occupants;
      ds.exog(i, c_win[r]) = window;
      ds.exog(i, c_blind[r]) = blinds ? 1.0 : 0.0;

      const double sigma = cfg.noise_scale * (1.0 + 0.5 * occupants);
      ds.temps(i, static_cast<Index>(r)) = temp[r] + sigma * normal(rng);

      heat_noise[r] = 0.95 * heat_noise[r] + std::sqrt(1.0 - 0.95 * 0.95) * normal(rng);
      double extra = cfg.unmodeled_scale * occupants * 0.8 * truth[r].occupant_gain * heat_noise[r];
      if (type == RoomType::Bathroom && occupants > 0.0) extra += cfg.unmodeled_scale * 350.0 * (1.0 + 0.5 * heat_noise[r]);
      const double shading = blinds ? 1.0 - 0.65 * std::min(1.0, cfg.unmodeled_scale) : 1.0;

      const RoomDrivers drivers{t_out, (direct + diffuse) * shading, occupants, flow, t_supply, window};
      temp[r] = advance_room(truth[r], temp[r], drivers, dt, sub, extra, i);
    }
    ds.exog(i, c_hflow) = heat_total;
    ds.exog(i, c_cflow) = cool_total;
    out.extended_window[static_cast<std::size_t>(i)] = any_long ? 1 : 0;
  }

  // Misspecified physics model.
  std::mt19937_64 brng(seed ^ 0xd1b54a32d192ed03ULL);
  RcParams biased = truth;
  for (auto& p : biased) {
    auto a = p.to_array();
    for (double& v : a) v *= 1.0 + cfg.bias * (unif(brng) < 0.5 ? -1.0 : 1.0);
    p = RoomRc::from_array(a);
  }
  PhysicsModel physics{biased, dt, std::vector<double>(k, cfg.initial_temperature)};
  if (cfg.calibration_days > 0) {
    CalibrationOptions opts;
    opts.budget = cfg.calibration_budget;
    opts.rows = std::min(n, cfg.calibration_days * kStepsPerDay);
    if (opts.rows >= kStepsPerDay) physics.params = calibrate(physics, ds, RcBounds{}, opts);
  }
  out.physics = physics.params;
  Matrix ep = simulate(physics, ds);
  if (cfg.physics_offset != 0.0) ep.array() += cfg.physics_offset;
  ds.physics = std::move(ep);

  for (std::size_t r = 0; r < k; ++r) {
    const auto c = static_cast<Index>(r);
    out.physics_rmse.push_back(std::sqrt((ds.physics->col(c) - ds.temps.col(c)).squaredNorm() / static_cast<double>(n)));
  }

  if (cfg.iid) {
    std::mt19937_64 prng(seed ^ 0x94d049bb133111ebULL);
    std::vector<Index> perm(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
    for (Index i = n - 1; i > 0; --i) {
      const auto j = static_cast<Index>(prng() % static_cast<std::uint64_t>(i + 1));
      std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
    }
    Matrix exog(n, ds.exog.cols()), temps(n, ds.temps.cols()), phys(n, ds.temps.cols());
    std::vector<std::uint8_t> ext(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) {
      const Index src = perm[static_cast<std::size_t>(i)];
      exog.row(i) = ds.exog.row(src);
      temps.row(i) = ds.temps.row(src);
      phys.row(i) = ds.physics->row(src);
      ext[static_cast<std::size_t>(i)] = out.extended_window[static_cast<std::size_t>(src)];
    }
    ds.exog = std::move(exog);
    ds.temps = std::move(temps);
    ds.physics = std::move(phys);
    out.extended_window = std::move(ext);
  }

  ds.validate();
  out.dataset = std::move(ds);
  return out;
}

}  // namespace hybridq
