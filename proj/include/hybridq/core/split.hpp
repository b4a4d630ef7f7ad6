#pragma once

#include <cmath>
#include <string>

#include "hybridq/core/types.hpp"
#include "hybridq/error.hpp"

namespace hybridq {

// Half-open row range [begin, end).
struct RowRange {
  Index begin = 0;
  Index end = 0;

  Index size() const { return end - begin; }
  bool empty() const { return end <= begin; }
  bool contains(Index i) const { return i >= begin && i < end; }
  bool operator==(const RowRange&) const = default;
};

/// Train / calibration / test rows. The first block (training year) feeds
/// train and, in conformal mode, its final 20% becomes the calibration set;
/// everything after the first block is the test set.
struct DatasetSplit {
  RowRange train;
  RowRange calibration;
  RowRange test;
};

inline constexpr double kCalibrationFraction = 0.2;

inline DatasetSplit split_dataset(Index total_rows, Index train_block_rows, bool conformal,
                                  double calibration_fraction = kCalibrationFraction) {
  if (train_block_rows <= 0 || total_rows <= train_block_rows) {
    throw InputError("dataset of " + std::to_string(total_rows) + " rows does not span a training block of " +
                     std::to_string(train_block_rows) + " rows plus a test block");
  }
  if (!(calibration_fraction > 0.0 && calibration_fraction < 1.0)) {
    throw InputError("calibration fraction must lie in (0, 1)");
  }
  DatasetSplit s;
  s.test = {train_block_rows, total_rows};
  if (!conformal) {
    s.train = {0, train_block_rows};
    s.calibration = {train_block_rows, train_block_rows};
    return s;
  }
  const auto fit_rows =
      static_cast<Index>(std::llround((1.0 - calibration_fraction) * static_cast<double>(train_block_rows)));
  if (fit_rows <= 0 || fit_rows >= train_block_rows) {
    throw InputError("training block too short for a calibration split");
  }
  s.train = {0, fit_rows};
  s.calibration = {fit_rows, train_block_rows};
  return s;
}

template <typename Derived>
auto rows_of(const Eigen::MatrixBase<Derived>& m, RowRange r) {
  return m.middleRows(r.begin, r.size());
}

}  // namespace hybridq
