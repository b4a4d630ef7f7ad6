#pragma once

#include <cmath>

#include "hybridq/core/types.hpp"
#include "hybridq/error.hpp"

namespace hybridq {

/// Per-column z-score parameters. Population convention (divide by N);
/// constant columns keep std = 1 so they map to zero.
struct StandardizationParams {
  Vector mean;
  Vector stddev;

  Index size() const { return mean.size(); }

  Matrix apply(const Matrix& x) const {
    if (x.cols() != mean.size()) {
      throw InputError("standardizer expects " + std::to_string(mean.size()) + " columns, got " +
                       std::to_string(x.cols()));
    }
    return ((x.rowwise() - mean.transpose()).array().rowwise() / stddev.transpose().array()).matrix();
  }

  Matrix invert(const Matrix& z) const {
    if (z.cols() != mean.size()) throw InputError("standardizer column count mismatch");
    return ((z.array().rowwise() * stddev.transpose().array()).rowwise() + mean.transpose().array()).matrix();
  }
};

inline StandardizationParams fit_standardizer(const Matrix& train) {
  if (train.rows() == 0) throw InputError("cannot fit a standardizer on an empty training set");
  StandardizationParams p;
  const double n = static_cast<double>(train.rows());
  p.mean = train.colwise().sum().transpose() / n;
  p.stddev.resize(train.cols());
  for (Index c = 0; c < train.cols(); ++c) {
    const double var = (train.col(c).array() - p.mean(c)).square().sum() / n;
    const double sd = std::sqrt(var);
    // Relative threshold: columns identical up to rounding count as constant.
    p.stddev(c) = (sd > 1e-12 * std::max(1.0, std::abs(p.mean(c)))) ? sd : 1.0;
  }
  return p;
}

}  // namespace hybridq
