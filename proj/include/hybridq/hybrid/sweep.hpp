#pragma once

#include <vector>

#include "hybridq/hybrid/pipeline.hpp"
#include "hybridq/metrics/scores.hpp"

namespace hybridq {

inline const std::vector<double> kDefaultSweepLambdas{0.0, 0.1, 0.5, 1.0, 5.0};

struct SweepRow {
  double lambda = 0.0;
  std::vector<double> pbl;  // per room, test rows
  double mean = 0.0;
};

// Test-set PBL of one constrained pipeline.
inline SweepRow sweep_point(double lambda, const HybridData& data, RowRange train, RowRange test, ModelKind kind,
                            const TrainConfig& cfg, const QuantileGrid& grid = QuantileGrid()) {
  const auto p = train_hybrid(HybridStrategy::constrained(lambda), data, train, kind, cfg, {}, grid);
  const Matrix exog = rows_of(*data.exog, test);
  const auto f = predict_hybrid(p, exog, nullptr);
  SweepRow row{lambda, pbl(f, rows_of(*data.temps, test)).mean, 0.0};
  row.mean = EvaluationReport::mean_of(row.pbl);
  return row;
}

/// One constrained pipeline per regularization constant, scored by per-room
/// test PBL.
inline std::vector<SweepRow> sensitivity_sweep(const std::vector<double>& lambdas, const HybridData& data,
                                               RowRange train, RowRange test, ModelKind kind, const TrainConfig& cfg,
                                               const QuantileGrid& grid = QuantileGrid()) {
  if (lambdas.empty()) throw InputError("sensitivity sweep needs at least one regularization constant");
  for (double l : lambdas) {
    if (!(l >= 0.0)) throw InputError("regularization constants must be non-negative");
  }
  std::vector<SweepRow> rows;
  for (double l : lambdas) rows.push_back(sweep_point(l, data, train, test, kind, cfg, grid));
  return rows;
}

}  // namespace hybridq
