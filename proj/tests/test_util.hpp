#pragma once

#include <random>
#include <string>
#include <vector>

#include "hybridq/core/dataset.hpp"
#include "hybridq/core/timestamp.hpp"

namespace hybridq::fixtures {

// All-zero features on the standard schema at 15-minute cadence.
inline TimeSeriesDataset blank_dataset(Index rows, const std::vector<std::string>& rooms) {
  TimeSeriesDataset ds;
  ds.rooms = rooms;
  ds.schema = FeatureSchema::standard(rooms);
  ds.exog = Matrix::Zero(rows, static_cast<Index>(ds.schema.size()));
  ds.temps = Matrix::Zero(rows, static_cast<Index>(rooms.size()));
  const EpochSeconds t0 = parse_iso8601("2021-03-01T00:00:00");
  for (Index i = 0; i < rows; ++i) ds.timestamps.push_back(t0 + i * kQuarterHour);
  return ds;
}

inline Index column(const TimeSeriesDataset& ds, const std::string& name) {
  return static_cast<Index>(ds.schema.index_of(name));
}

inline Matrix random_matrix(Index rows, Index cols, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

}  // namespace hybridq::fixtures
