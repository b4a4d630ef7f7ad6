#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "hybridq/core/feature_schema.hpp"
#include "hybridq/core/timestamp.hpp"
#include "hybridq/core/types.hpp"
#include "hybridq/error.hpp"

namespace hybridq {

inline constexpr std::string_view kTempPrefix = "temp_";
inline constexpr std::string_view kPhysicsPrefix = "ep_";

/// Aligned exogenous features, measured room temperatures and an optional
/// physics channel on a uniform 15-minute grid. No missing values.
struct TimeSeriesDataset {
  std::vector<EpochSeconds> timestamps;
  FeatureSchema schema;
  std::vector<std::string> rooms;
  Matrix exog;                    // N x D
  Matrix temps;                   // N x K, degC
  std::optional<Matrix> physics;  // N x K, degC

  Index rows() const { return static_cast<Index>(timestamps.size()); }
  Index rooms_count() const { return static_cast<Index>(rooms.size()); }
  bool has_physics() const { return physics.has_value(); }

  const Matrix& physics_or_throw() const {
    if (!physics) throw InputError("dataset has no physics channel");
    return *physics;
  }

  void validate(EpochSeconds step = kQuarterHour) const {
    const Index n = rows();
    if (rooms.empty()) throw InputError("dataset needs at least one room column");
    if (exog.rows() != n || static_cast<std::size_t>(exog.cols()) != schema.size()) {
      throw InputError("exogenous matrix shape does not match timestamps and schema");
    }
    if (temps.rows() != n || temps.cols() != rooms_count()) {
      throw InputError("temperature matrix shape does not match timestamps and rooms");
    }
    if (physics && (physics->rows() != n || physics->cols() != rooms_count())) {
      throw InputError("physics channel shape differs from temperatures");
    }
    for (Index i = 1; i < n; ++i) {
      if (timestamps[i] - timestamps[i - 1] != step) {
        throw InputError("timestamps are not on a constant " + std::to_string(step) + " s grid at row " +
                         std::to_string(i));
      }
    }
    if (!exog.allFinite() || !temps.allFinite() || (physics && !physics->allFinite())) {
      throw InputError("dataset contains missing or non-finite values");
    }
  }
};

/// Raw channels at arbitrary cadence; NaN marks a missing reading.
struct RawSeries {
  std::vector<EpochSeconds> timestamps;
  std::vector<std::string> channels;
  std::vector<ChannelKind> kinds;
  Matrix values;  // rows = timestamps, cols = channels
};

namespace detail {

// Linear interpolation over the raw time axis; endpoints held constant.
inline std::vector<double> fill_channel(const std::vector<EpochSeconds>& t, const Matrix& values, Index col,
                                        const std::string& name) {
  const Index n = values.rows();
  std::vector<double> out(static_cast<std::size_t>(n));
  std::vector<Index> valid;
  for (Index i = 0; i < n; ++i) {
    if (std::isfinite(values(i, col))) valid.push_back(i);
  }
  if (valid.empty()) throw InputError("channel '" + name + "' is entirely missing");
  if (static_cast<double>(n - static_cast<Index>(valid.size())) >= 0.5 * static_cast<double>(n)) {
    throw InputError("channel '" + name + "' has 50% or more missing readings");
  }
  for (Index i = 0; i <= valid.front(); ++i) out[i] = values(valid.front(), col);
  for (Index i = valid.back(); i < n; ++i) out[i] = values(valid.back(), col);
  for (std::size_t v = 0; v + 1 < valid.size(); ++v) {
    const Index a = valid[v], b = valid[v + 1];
    out[a] = values(a, col);
    const double ya = values(a, col), yb = values(b, col);
    const double span = static_cast<double>(t[b] - t[a]);
    for (Index i = a + 1; i < b; ++i) {
      const double w = static_cast<double>(t[i] - t[a]) / span;
      out[i] = ya + w * (yb - ya);
    }
  }
  return out;
}

inline double evaluate_at(const std::vector<EpochSeconds>& t, const std::vector<double>& y, double when,
                          ChannelKind kind) {
  const auto it = std::lower_bound(t.begin(), t.end(), when, [](EpochSeconds a, double b) {
    return static_cast<double>(a) < b;
  });
  if (it == t.begin()) return y.front();
  if (it == t.end()) return y.back();
  const std::size_t hi = static_cast<std::size_t>(it - t.begin());
  const std::size_t lo = hi - 1;
  const double w = (when - static_cast<double>(t[lo])) / static_cast<double>(t[hi] - t[lo]);
  if (kind == ChannelKind::Categorical) return w < 0.5 ? y[lo] : y[hi];
  return y[lo] + w * (y[hi] - y[lo]);
}

inline double aggregate(std::vector<double>& bin, ChannelKind kind) {
  switch (kind) {
    case ChannelKind::Real: {
      double s = 0.0;
      for (double v : bin) s += v;
      return s / static_cast<double>(bin.size());
    }
    case ChannelKind::Boolean: {
      double s = 0.0;
      for (double v : bin) s += v;
      return (s / static_cast<double>(bin.size())) >= 0.5 ? 1.0 : 0.0;
    }
    case ChannelKind::Categorical: {
      std::sort(bin.begin(), bin.end());
      double best = bin.front();
      std::size_t best_count = 0;
      for (std::size_t i = 0; i < bin.size();) {
        std::size_t j = i;
        while (j < bin.size() && bin[j] == bin[i]) ++j;
        if (j - i > best_count) {
          best_count = j - i;
          best = bin[i];
        }
        i = j;
      }
      return best;
    }
  }
  return 0.0;
}

}  // namespace detail

/// Fills gaps by linear interpolation on the raw grid, then aggregates into
/// bins of `step` seconds aligned to multiples of `step`. Bins without a raw
/// reading take the interpolant at the bin centre.
inline RawSeries resample_and_impute(const RawSeries& raw, EpochSeconds step = kQuarterHour) {
  const Index n = static_cast<Index>(raw.timestamps.size());
  if (n == 0) throw InputError("raw series is empty");
  if (raw.values.rows() != n || raw.values.cols() != static_cast<Index>(raw.channels.size()) ||
      raw.kinds.size() != raw.channels.size()) {
    throw InputError("raw series shape does not match its channel list");
  }
  for (Index i = 1; i < n; ++i) {
    if (raw.timestamps[i] <= raw.timestamps[i - 1]) {
      throw InputError("raw timestamps are not strictly increasing at row " + std::to_string(i));
    }
  }
  auto floor_div = [](EpochSeconds a, EpochSeconds b) { return (a >= 0 ? a / b : -((-a + b - 1) / b)); };
  const EpochSeconds first_bin = floor_div(raw.timestamps.front(), step);
  const EpochSeconds last_bin = floor_div(raw.timestamps.back(), step);
  const Index bins = static_cast<Index>(last_bin - first_bin + 1);

  RawSeries out;
  out.channels = raw.channels;
  out.kinds = raw.kinds;
  out.timestamps.resize(static_cast<std::size_t>(bins));
  for (Index b = 0; b < bins; ++b) out.timestamps[b] = (first_bin + b) * step;
  out.values.resize(bins, raw.values.cols());

  for (Index c = 0; c < raw.values.cols(); ++c) {
    const auto filled = detail::fill_channel(raw.timestamps, raw.values, c, raw.channels[c]);
    const ChannelKind kind = raw.kinds[c];
    std::vector<double> bin;
    Index i = 0;
    for (Index b = 0; b < bins; ++b) {
      bin.clear();
      const EpochSeconds end = out.timestamps[b] + step;
      while (i < n && raw.timestamps[i] < end) bin.push_back(filled[i++]);
      if (bin.empty()) {
        const double centre = static_cast<double>(out.timestamps[b]) + 0.5 * static_cast<double>(step);
        double v = detail::evaluate_at(raw.timestamps, filled, centre, kind);
        if (kind == ChannelKind::Boolean) v = v >= 0.5 ? 1.0 : 0.0;
        out.values(b, c) = v;
      } else {
        out.values(b, c) = detail::aggregate(bin, kind);
      }
    }
  }
  return out;
}

inline ChannelKind channel_kind(const std::string& name, const FeatureSchema& schema) {
  if (auto i = schema.find(name)) return schema[*i].kind;
  return ChannelKind::Real;
}

/// Maps named channels of a uniform series onto a dataset. `temp_<room>`
/// columns are targets, `ep_<room>` columns the physics channel, the rest must
/// match the standard schema. Datetime features absent from the series are
/// derived from the timestamps.
inline TimeSeriesDataset assemble_dataset(const RawSeries& series) {
  std::vector<std::string> rooms;
  std::map<std::string, Index> temp_col, ep_col, feat_col;
  for (Index c = 0; c < static_cast<Index>(series.channels.size()); ++c) {
    const std::string& name = series.channels[c];
    if (name.starts_with(kTempPrefix)) {
      rooms.push_back(name.substr(kTempPrefix.size()));
      temp_col[rooms.back()] = c;
    } else if (name.starts_with(kPhysicsPrefix)) {
      ep_col[name.substr(kPhysicsPrefix.size())] = c;
    } else {
      feat_col[name] = c;
    }
  }
  if (rooms.empty()) throw InputError("no temp_<room> target columns found");
  if (!ep_col.empty()) {
    for (const auto& r : rooms) {
      if (!ep_col.count(r)) throw InputError("physics column 'ep_" + r + "' missing while others present");
    }
    if (ep_col.size() != rooms.size()) throw InputError("physics column without matching temp_ column");
  }
  TimeSeriesDataset ds;
  ds.timestamps = series.timestamps;
  ds.rooms = rooms;
  ds.schema = FeatureSchema::standard(rooms);
  for (const auto& [name, col] : feat_col) {
    if (!ds.schema.find(name)) throw InputError("unknown feature column '" + name + "'");
  }
  const Index n = static_cast<Index>(series.timestamps.size());
  const Index k = static_cast<Index>(rooms.size());
  ds.exog.resize(n, static_cast<Index>(ds.schema.size()));
  for (std::size_t f = 0; f < ds.schema.size(); ++f) {
    const Feature& feat = ds.schema[f];
    auto it = feat_col.find(feat.name);
    if (it != feat_col.end()) {
      ds.exog.col(static_cast<Index>(f)) = series.values.col(it->second);
    } else if (feat.group == FeatureGroup::Datetime) {
      for (Index i = 0; i < n; ++i) {
        const EpochSeconds t = ds.timestamps[i];
        ds.exog(i, static_cast<Index>(f)) =
            feat.name == "season" ? season_of(t) : feat.name == "weekend" ? weekend_of(t) : daytime_of(t);
      }
    } else {
      throw InputError("missing required channel '" + feat.name + "'");
    }
  }
  ds.temps.resize(n, k);
  for (Index r = 0; r < k; ++r) ds.temps.col(r) = series.values.col(temp_col[rooms[r]]);
  if (!ep_col.empty()) {
    ds.physics = Matrix(n, k);
    for (Index r = 0; r < k; ++r) ds.physics->col(r) = series.values.col(ep_col[rooms[r]]);
  }
  ds.validate();
  return ds;
}

namespace detail {

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  for (auto& f : out) {
    while (!f.empty() && (f.front() == ' ' || f.front() == '"')) f.remove_prefix(1);
    while (!f.empty() && (f.back() == ' ' || f.back() == '"' || f.back() == '\r')) f.remove_suffix(1);
  }
  return out;
}

inline double parse_number(std::string_view field, std::size_t line_no) {
  if (field.empty() || field == "NaN" || field == "nan" || field == "NA") {
    return std::numeric_limits<double>::quiet_NaN();
  }
  if (field.front() == '+') field.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc{} || ptr != field.data() + field.size()) {
    throw InputError("line " + std::to_string(line_no) + ": cannot parse number '" + std::string(field) + "'");
  }
  return v;
}

inline void append_number(std::string& out, double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, ptr);
}

}  // namespace detail

inline RawSeries read_raw_csv(std::istream& in) {
  RawSeries raw;
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) throw InputError("CSV input is empty");
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);  // UTF-8 BOM
  const auto header = detail::split_fields(line);
  if (header.size() < 2) throw InputError("CSV header needs a timestamp column and at least one channel");
  const FeatureSchema probe = FeatureSchema::standard({});
  for (std::size_t c = 1; c < header.size(); ++c) {
    raw.channels.emplace_back(header[c]);
    ChannelKind kind = channel_kind(raw.channels.back(), probe);
    for (std::string_view prefix : {"window_", "blinds_"}) {
      if (raw.channels.back().starts_with(prefix)) kind = ChannelKind::Boolean;
    }
    raw.kinds.push_back(kind);
  }
  std::vector<double> flat;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = detail::split_fields(line);
    if (fields.size() != header.size()) {
      throw InputError("line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                       " fields, got " + std::to_string(fields.size()));
    }
    raw.timestamps.push_back(parse_iso8601(fields[0]));
    for (std::size_t c = 1; c < fields.size(); ++c) flat.push_back(detail::parse_number(fields[c], line_no));
  }
  const Index cols = static_cast<Index>(raw.channels.size());
  raw.values = Eigen::Map<Matrix>(flat.data(), static_cast<Index>(raw.timestamps.size()), cols);
  return raw;
}

/// Reads a delimited file at any cadence, imputes and aggregates to 15 min.
inline TimeSeriesDataset ingest_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  return assemble_dataset(resample_and_impute(read_raw_csv(in)));
}

inline void write_csv(std::ostream& out, const TimeSeriesDataset& ds) {
  std::string buf = "timestamp";
  for (const auto& f : ds.schema.features()) buf += "," + f.name;
  for (const auto& r : ds.rooms) buf += "," + std::string(kTempPrefix) + r;
  if (ds.physics) {
    for (const auto& r : ds.rooms) buf += "," + std::string(kPhysicsPrefix) + r;
  }
  buf += '\n';
  for (Index i = 0; i < ds.rows(); ++i) {
    buf += format_iso8601(ds.timestamps[i]);
    for (Index c = 0; c < ds.exog.cols(); ++c) {
      buf += ',';
      detail::append_number(buf, ds.exog(i, c));
    }
    for (Index c = 0; c < ds.temps.cols(); ++c) {
      buf += ',';
      detail::append_number(buf, ds.temps(i, c));
    }
    if (ds.physics) {
      for (Index c = 0; c < ds.physics->cols(); ++c) {
        buf += ',';
        detail::append_number(buf, (*ds.physics)(i, c));
      }
    }
    buf += '\n';
    if (buf.size() > (1u << 20)) {
      out << buf;
      buf.clear();
    }
  }
  out << buf;
}

}  // namespace hybridq
