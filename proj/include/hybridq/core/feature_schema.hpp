#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "hybridq/core/timestamp.hpp"
#include "hybridq/error.hpp"

namespace hybridq {

enum class FeatureGroup { Datetime, Weather, Building, Room };

// How a channel is aggregated into a 15-minute bin.
enum class ChannelKind {
  Real,         // bin mean
  Boolean,      // majority vote, thresholded at 0.5
  Categorical,  // most frequent value
};

struct Feature {
  std::string name;
  FeatureGroup group;
  ChannelKind kind;
};

inline std::string_view to_string(FeatureGroup g) {
  switch (g) {
    case FeatureGroup::Datetime: return "datetime";
    case FeatureGroup::Weather: return "weather";
    case FeatureGroup::Building: return "building";
    case FeatureGroup::Room: return "room";
  }
  return "?";
}

/// Exogenous feature names grouped into datetime, weather, building and
/// per-room flags. Names are unique; every feature belongs to one group.
class FeatureSchema {
 public:
  FeatureSchema() = default;

  explicit FeatureSchema(std::vector<Feature> features) : features_(std::move(features)) {
    for (std::size_t i = 0; i < features_.size(); ++i) {
      if (!index_.emplace(features_[i].name, i).second) {
        throw InputError("duplicate feature name '" + features_[i].name + "'");
      }
    }
  }

  // Feature layout used by the simulator, the synthetic generator and CSV
  // ingestion. Room channels are suffixed with the room id.
  static FeatureSchema standard(const std::vector<std::string>& rooms) {
    using G = FeatureGroup;
    using K = ChannelKind;
    std::vector<Feature> f = {
        {"season", G::Datetime, K::Categorical},
        {"weekend", G::Datetime, K::Boolean},
        {"daytime", G::Datetime, K::Categorical},
        {"t_out", G::Weather, K::Real},
        {"t_dew", G::Weather, K::Real},
        {"sol_direct", G::Weather, K::Real},
        {"sol_diffuse", G::Weather, K::Real},
        {"rel_humidity", G::Weather, K::Real},
        {"wind_dir", G::Weather, K::Real},
        {"wind_speed", G::Weather, K::Real},
        {"mflow_heat_total", G::Building, K::Real},
        {"mflow_cool_total", G::Building, K::Real},
        {"t_supply", G::Building, K::Real},
        {"ac_mode", G::Building, K::Boolean},
    };
    for (const auto& r : rooms) {
      f.push_back({"mflow_" + r, G::Room, K::Real});
      f.push_back({"setpoint_" + r, G::Room, K::Real});
      f.push_back({"occ_" + r, G::Room, K::Real});
      f.push_back({"window_" + r, G::Room, K::Boolean});
      f.push_back({"blinds_" + r, G::Room, K::Boolean});
    }
    return FeatureSchema(std::move(f));
  }

  std::size_t size() const { return features_.size(); }
  const Feature& operator[](std::size_t i) const { return features_[i]; }
  const std::vector<Feature>& features() const { return features_; }

  std::optional<std::size_t> find(std::string_view name) const {
    auto it = index_.find(std::string(name));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  std::size_t index_of(std::string_view name) const {
    if (auto i = find(name)) return *i;
    throw InputError("missing required channel '" + std::string(name) + "'");
  }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    out.reserve(features_.size());
    for (const auto& f : features_) out.push_back(f.name);
    return out;
  }

  bool operator==(const FeatureSchema& o) const { return names() == o.names(); }

 private:
  std::vector<Feature> features_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Datetime features derived from a bin timestamp.
// season: 0 winter (Dec-Feb), 1 spring, 2 summer, 3 autumn.
// daytime: 0 night, 1 morning, 2 afternoon, 3 evening.
inline double season_of(EpochSeconds t) { return static_cast<double>((calendar(t).month % 12) / 3); }
inline double weekend_of(EpochSeconds t) {
  const int wd = calendar(t).weekday;
  return (wd == 0 || wd == 6) ? 1.0 : 0.0;
}
inline double daytime_of(EpochSeconds t) { return static_cast<double>(calendar(t).hour / 6); }

}  // namespace hybridq
