#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "hybridq/harness/config.hpp"
#include "hybridq/harness/worker_pool.hpp"
#include "hybridq/io/pipeline_io.hpp"

namespace hybridq {

/// Dataset of a run with its split and the optional generator metadata.
struct ExperimentData {
  TimeSeriesDataset dataset;
  Index train_block_rows = 0;
  std::vector<double> physics_rmse;           // synthetic only
  std::vector<std::uint8_t> extended_window;  // synthetic only, per row
};

inline TimeSeriesDataset select_rooms(const TimeSeriesDataset& ds, const std::vector<std::string>& rooms) {
  std::vector<Index> idx;
  for (const auto& r : rooms) {
    const auto it = std::find(ds.rooms.begin(), ds.rooms.end(), r);
    if (it == ds.rooms.end()) throw ConfigError("room '" + r + "' not present in the data");
    idx.push_back(static_cast<Index>(it - ds.rooms.begin()));
  }
  TimeSeriesDataset out;
  out.timestamps = ds.timestamps;
  out.rooms = rooms;
  out.schema = FeatureSchema::standard(rooms);
  out.exog.resize(ds.rows(), static_cast<Index>(out.schema.size()));
  for (std::size_t f = 0; f < out.schema.size(); ++f) {
    out.exog.col(static_cast<Index>(f)) = ds.exog.col(static_cast<Index>(ds.schema.index_of(out.schema[f].name)));
  }
  out.temps.resize(ds.rows(), static_cast<Index>(rooms.size()));
  if (ds.physics) out.physics = Matrix(ds.rows(), static_cast<Index>(rooms.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) {
    out.temps.col(static_cast<Index>(k)) = ds.temps.col(idx[k]);
    if (ds.physics) out.physics->col(static_cast<Index>(k)) = ds.physics->col(idx[k]);
  }
  return out;
}

inline ExperimentData load_experiment_data(const ExperimentConfig& cfg) {
  ExperimentData d;
  if (cfg.source == DataSource::Synthetic) {
    auto g = generate_synthetic_dataset(default_true_params(cfg.scenario.rooms), cfg.scenario, cfg.seed);
    d.dataset = std::move(g.dataset);
    d.physics_rmse = std::move(g.physics_rmse);
    d.extended_window = std::move(g.extended_window);
    d.train_block_rows = cfg.scenario.train_days * kStepsPerDay;
  } else {
    d.dataset = ingest_csv(cfg.csv_path.string());
    if (cfg.rooms) d.dataset = select_rooms(d.dataset, *cfg.rooms);
    d.train_block_rows = cfg.train_days * kStepsPerDay;
  }
  if (d.dataset.rows() <= d.train_block_rows) {
    throw InputError("data has " + std::to_string(d.dataset.rows()) + " rows, not enough for a " +
                     std::to_string(d.train_block_rows) + "-row training block plus a test block");
  }
  return d;
}

// Sub-seed per model kind; every strategy of one kind shares it, so
// strategies differ only through their targets and inputs.
inline std::uint64_t combination_seed(std::uint64_t seed, ModelKind kind) {
  return detail::tree_seed(seed, 0x100 + static_cast<std::uint64_t>(kind));
}

struct Combination {
  HybridStrategy strategy = HybridStrategy::make(StrategyTag::DataDrivenOnly);
  ModelKind kind = ModelKind::Mlp;

  std::string label() const {
    std::string s = std::string(to_string(strategy.tag())) + "_" + std::string(to_string(kind));
    return s;
  }
};

inline std::vector<Combination> combinations(const ExperimentConfig& cfg) {
  std::vector<Combination> out;
  for (auto kind : cfg.models) {
    for (auto tag : cfg.strategies) {
      out.push_back({tag == StrategyTag::Constrained ? HybridStrategy::constrained(cfg.lambda) : HybridStrategy::make(tag),
                     kind});
    }
  }
  return out;
}

struct CombinationResult {
  Combination combo;
  bool ok = false;
  std::string error;
  EvaluationReport metrics;                  // final forecast (conformalized when enabled)
  std::optional<EvaluationReport> raw;       // before conformal correction
  std::optional<ConformalCalibrator> calibrator;
  std::vector<double> window_open_pbl;       // per room; NaN without open steps
  std::vector<double> extended_window_pbl;   // per room; synthetic data only
  bool monotone = false;
  std::string pipeline_bytes;
  QuantileForecast trace;                    // final forecast over the trace window
  RowRange trace_rows;
};

namespace detail {

// Mean PBL of room k over the rows where mask(row) holds, or NaN.
template <typename Mask>
double masked_pbl(const QuantileForecast& f, const Matrix& y, Index k, Mask mask) {
  double s = 0.0;
  Index rows = 0;
  for (Index n = 0; n < f.steps(); ++n) {
    if (!mask(n)) continue;
    ++rows;
    const auto v = f.levels_at(n, k);
    for (Index q = 0; q < f.levels(); ++q) s += pinball_unchecked(f.grid()[static_cast<std::size_t>(q)], y(n, k), v[q]);
  }
  return rows == 0 ? std::numeric_limits<double>::quiet_NaN() : s / static_cast<double>(rows * f.levels());
}

inline RowRange trace_window(const ExperimentConfig& cfg, RowRange test) {
  const Index b = std::min(test.end, test.begin + cfg.trace_start_day * kStepsPerDay);
  return {b, std::min(test.end, b + cfg.trace_days * kStepsPerDay)};
}

}  // namespace detail

/// Final and raw test forecasts of a trained pipeline together with the
/// calibrator fitted on the calibration rows (conformal runs only).
struct PipelineForecasts {
  QuantileForecast raw;
  QuantileForecast final;
  std::optional<ConformalCalibrator> calibrator;
};

inline PipelineForecasts forecast_test(const HybridPipeline& p, const ExperimentConfig& cfg, const ExperimentData& data,
                                       const DatasetSplit& split, bool conformal) {
  PipelineForecasts out;
  out.raw = predict_hybrid(p, data.dataset, split.test);
  if (!conformal) {
    out.final = out.raw;
    return out;
  }
  const auto cal = predict_hybrid(p, data.dataset, split.calibration);
  out.calibrator = fit_calibrator(cal, rows_of(data.dataset.temps, split.calibration), cfg.alphas,
                                  cfg.conformal_mode, cfg.conformal_full_grid);
  out.final = conformalize_all(out.raw, *out.calibrator);
  return out;
}

/// Trains, calibrates and scores one (strategy, model) combination. Errors
/// are captured with the combination's context instead of propagating.
inline CombinationResult run_combination(const Combination& combo, const ExperimentConfig& cfg,
                                         const ExperimentData& data, const DatasetSplit& split, bool conformal) {
  CombinationResult r;
  r.combo = combo;
  try {
    TrainConfig tc = cfg.train;
    tc.seed = combination_seed(cfg.seed, combo.kind);
    const auto grid = cfg.grid();
    const HybridPipeline p = train_hybrid(combo.strategy, data.dataset, split.train, combo.kind, tc, cfg.hybrid, grid);
    auto fc = forecast_test(p, cfg, data, split, conformal);
    const Matrix y = rows_of(data.dataset.temps, split.test);
    r.metrics = evaluate(fc.final, y, cfg.alphas, cfg.confidences);
    if (conformal) r.raw = evaluate(fc.raw, y, cfg.alphas, cfg.confidences);
    r.calibrator = fc.calibrator;
    r.monotone = fc.final.is_monotone() && fc.raw.is_monotone();
    const FeatureSchema& schema = data.dataset.schema;
    for (Index k = 0; k < fc.final.rooms_count(); ++k) {
      const Index wcol = static_cast<Index>(schema.index_of("window_" + data.dataset.rooms[static_cast<std::size_t>(k)]));
      r.window_open_pbl.push_back(detail::masked_pbl(
          fc.final, y, k, [&](Index n) { return data.dataset.exog(split.test.begin + n, wcol) >= 0.5; }));
      if (!data.extended_window.empty()) {
        r.extended_window_pbl.push_back(detail::masked_pbl(fc.final, y, k, [&](Index n) {
          return data.extended_window[static_cast<std::size_t>(split.test.begin + n)] != 0;
        }));
      }
    }
    r.trace_rows = detail::trace_window(cfg, split.test);
    r.trace = fc.final.slice(r.trace_rows.begin - split.test.begin, r.trace_rows.size());
    r.pipeline_bytes = io::serialize({p, fc.calibrator});
    r.ok = true;
  } catch (const std::exception& e) {
    r.ok = false;
    r.error = "strategy=" + std::string(to_string(combo.strategy.tag())) + " model=" +
              std::string(to_string(combo.kind)) + ": " + e.what();
  }
  return r;
}

struct ExperimentResult {
  DatasetSplit split;
  std::vector<CombinationResult> results;

  bool any_failed() const {
    return std::any_of(results.begin(), results.end(), [](const auto& r) { return !r.ok; });
  }
};

inline ExperimentResult run_experiment(const ExperimentConfig& cfg, const ExperimentData& data) {
  ExperimentResult out;
  out.split = split_dataset(data.dataset.rows(), data.train_block_rows, cfg.conformal);
  const auto combos = combinations(cfg);
  out.results.resize(combos.size());
  run_indexed(combos.size(), effective_workers(cfg), [&](std::size_t i) {
    out.results[i] = run_combination(combos[i], cfg, data, out.split, cfg.conformal);
  });
  return out;
}

struct AblationEntry {
  Combination combo;
  bool ok = false;
  std::string error;
  std::vector<std::vector<double>> ace_without, ace_with;      // [alpha][room]
  std::vector<std::vector<double>> width_without, width_with;  // [alpha][room]
  std::vector<std::vector<double>> delta_q;                    // [alpha][room]
  std::vector<double> pbl_without, pbl_with;
};

struct AblationResult {
  DatasetSplit split_without, split_with;
  std::vector<AblationEntry> entries;
  std::vector<double> ecdf_distance;  // per room, calibration vs test targets

  bool any_failed() const {
    return std::any_of(entries.begin(), entries.end(), [](const auto& e) { return !e.ok; });
  }
};

/// Each combination trained twice with the same seed: on the full training
/// block without correction, and on its leading part with conformal
/// correction fitted on the remainder.
inline AblationResult conformal_ablation(const ExperimentConfig& cfg_in, const ExperimentData& data) {
  if (cfg_in.alphas.empty()) throw ConfigError("conformal ablation needs at least one alpha");
  AblationResult out;
  out.split_without = split_dataset(data.dataset.rows(), data.train_block_rows, false);
  out.split_with = split_dataset(data.dataset.rows(), data.train_block_rows, true);
  const auto combos = combinations(cfg_in);
  std::vector<CombinationResult> without(combos.size()), with(combos.size());
  run_indexed(2 * combos.size(), effective_workers(cfg_in), [&](std::size_t i) {
    const std::size_t c = i / 2;
    if (i % 2 == 0) without[c] = run_combination(combos[c], cfg_in, data, out.split_without, false);
    else with[c] = run_combination(combos[c], cfg_in, data, out.split_with, true);
  });
  for (std::size_t c = 0; c < combos.size(); ++c) {
    AblationEntry e;
    e.combo = combos[c];
    e.ok = without[c].ok && with[c].ok;
    e.error = !without[c].ok ? without[c].error : with[c].error;
    if (e.ok) {
      e.ace_without = without[c].metrics.ace;
      e.ace_with = with[c].metrics.ace;
      e.width_without = without[c].metrics.width;
      e.width_with = with[c].metrics.width;
      e.pbl_without = without[c].metrics.pbl;
      e.pbl_with = with[c].metrics.pbl;
      for (double a : cfg_in.alphas) {
        std::vector<double> dq;
        for (Index k = 0; k < data.dataset.rooms_count(); ++k) dq.push_back(with[c].calibrator->at(k, a).delta_q);
        e.delta_q.push_back(std::move(dq));
      }
    }
    out.entries.push_back(std::move(e));
  }
  for (Index k = 0; k < data.dataset.rooms_count(); ++k) {
    const Matrix& t = data.dataset.temps;
    std::vector<double> cal, test;
    for (Index i = out.split_with.calibration.begin; i < out.split_with.calibration.end; ++i) cal.push_back(t(i, k));
    for (Index i = out.split_with.test.begin; i < out.split_with.test.end; ++i) test.push_back(t(i, k));
    out.ecdf_distance.push_back(ecdf_distance(cal, test));
  }
  return out;
}

struct SweepEntry {
  ModelKind kind = ModelKind::Mlp;
  double lambda = 0.0;
  bool ok = false;
  std::string error;
  std::vector<double> pbl;
  double mean = 0.0;
};

struct SweepResult {
  DatasetSplit split;
  std::vector<SweepEntry> entries;

  bool any_failed() const {
    return std::any_of(entries.begin(), entries.end(), [](const auto& e) { return !e.ok; });
  }
};

/// Constrained pipelines for every (model, lambda), trained on the full
/// training block and scored by test PBL.
inline SweepResult run_sweep(const ExperimentConfig& cfg, const ExperimentData& data) {
  SweepResult out;
  out.split = split_dataset(data.dataset.rows(), data.train_block_rows, false);
  std::vector<std::pair<ModelKind, double>> points;
  for (auto kind : cfg.sweep_models) {
    for (double l : cfg.sweep_lambdas) points.emplace_back(kind, l);
  }
  out.entries.resize(points.size());
  const auto grid = cfg.grid();
  run_indexed(points.size(), effective_workers(cfg), [&](std::size_t i) {
    auto& e = out.entries[i];
    e.kind = points[i].first;
    e.lambda = points[i].second;
    try {
      TrainConfig tc = cfg.train;
      tc.seed = combination_seed(cfg.seed, e.kind);
      const auto row = sweep_point(e.lambda, HybridData::of(data.dataset), out.split.train, out.split.test, e.kind, tc,
                                   grid);
      e.pbl = row.pbl;
      e.mean = row.mean;
      e.ok = true;
    } catch (const std::exception& ex) {
      e.error = "strategy=constrained model=" + std::string(to_string(e.kind)) + " lambda=" + std::to_string(e.lambda) +
                ": " + ex.what();
    }
  });
  return out;
}

}  // namespace hybridq
