#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hybridq/core/dataset.hpp"
#include "hybridq/core/split.hpp"
#include "hybridq/core/standardizer.hpp"
#include "hybridq/hybrid/strategy.hpp"
#include "hybridq/models/model.hpp"

namespace hybridq {

struct HybridOptions {
  // Feed the physics trajectory to the residual learner as extra inputs.
  bool residual_physics_input = true;
};

/// A trained hybrid predictor: strategy, feature wiring, fitted model and
/// the input standardizer (absent for the forest).
struct HybridPipeline {
  HybridStrategy strategy = HybridStrategy::make(StrategyTag::DataDrivenOnly);
  QuantileModel model;
  std::optional<StandardizationParams> standardizer;
  std::vector<std::string> rooms;
  FeatureSchema schema;
  bool physics_input = false;  // physics columns appended as the last K inputs

  ModelKind kind() const { return kind_of(model); }
  const QuantileGrid& grid() const { return model_grid(model); }
  Index exogenous_inputs() const { return static_cast<Index>(schema.size()); }
  Index input_dimension() const {
    return exogenous_inputs() + (physics_input ? static_cast<Index>(rooms.size()) : 0);
  }
  bool needs_physics_at_inference() const {
    return physics_input || strategy.tag() == StrategyTag::Residual;
  }
};

namespace detail {

inline bool strategy_uses_physics_input(StrategyTag tag, const HybridOptions& opts) {
  return tag == StrategyTag::Assistant || (tag == StrategyTag::Residual && opts.residual_physics_input);
}

inline Matrix design_matrix(const Matrix& exog, const Matrix* physics, bool physics_input) {
  if (!physics_input) return exog;
  if (physics == nullptr) throw InputError("physics channel required as model input");
  if (physics->rows() != exog.rows()) throw InputError("physics channel and features differ in row count");
  Matrix x(exog.rows(), exog.cols() + physics->cols());
  x << exog, *physics;
  return x;
}

inline Matrix prepare_inputs(const HybridPipeline& p, const Matrix& raw) {
  return p.standardizer ? p.standardizer->apply(raw) : raw;
}

// Fits the pipeline's model on (x, targets) for kinds that optimize a
// pinball objective, or grows a forest with the equivalent targets.
inline QuantileModel fit_model(ModelKind kind, const Matrix& x, const Matrix& y, const Matrix* physics, double lambda,
                               const QuantileGrid& grid, const TrainConfig& cfg) {
  const QuantileTargets targets{&y, physics, lambda};
  switch (kind) {
    case ModelKind::Linear: return fit_linear(x, targets, grid, cfg).model;
    case ModelKind::Mlp: return fit_mlp<float>(x, targets, grid, cfg).model;
    case ModelKind::Forest:
      if (physics != nullptr && lambda != 0.0) return fit_forest_guided(x, y, *physics, lambda, grid, cfg);
      return fit_forest(x, y, grid, cfg);
  }
  throw UsageError("unknown model kind");
}

}  // namespace detail

/// Rows of the measured temperatures, physics channel and features used by
/// a pipeline. Channels a strategy does not declare are never read.
struct HybridData {
  const Matrix* exog = nullptr;
  const Matrix* temps = nullptr;
  const Matrix* physics = nullptr;
  std::vector<std::string> rooms;
  FeatureSchema schema;

  static HybridData of(const TimeSeriesDataset& ds) {
    return HybridData{&ds.exog, &ds.temps, ds.physics ? &*ds.physics : nullptr, ds.rooms, ds.schema};
  }
};

/// Continues a surrogate pipeline on measured data: gradient models resume
/// with the fine-tuning patience, forests keep their trees and add new ones
/// grown on the measurements.
inline HybridPipeline fine_tune(HybridPipeline surrogate, const HybridData& data, RowRange rows,
                                const TrainConfig& cfg) {
  if (surrogate.strategy.tag() != StrategyTag::Surrogate) {
    throw UsageError(std::string("only surrogate pipelines can be fine-tuned, got ") +
                     std::string(to_string(surrogate.strategy.tag())));
  }
  if (data.temps == nullptr) throw InputError("measured temperatures required for fine-tuning");
  const Matrix exog = rows_of(*data.exog, rows);
  const Matrix y = rows_of(*data.temps, rows);
  const Matrix x = detail::prepare_inputs(surrogate, exog);
  std::visit(
      [&](auto& m) {
        using M = std::decay_t<decltype(m)>;
        const QuantileTargets targets{&y, nullptr, 0.0};
        if constexpr (std::is_same_v<M, LinearQuantileModel>) {
          m = fine_tune_linear(std::move(m), x, targets, cfg).model;
        } else if constexpr (std::is_same_v<M, QuantileMlp>) {
          m = fine_tune_mlp(std::move(m), x, targets, cfg).model;
        } else {
          auto store = std::make_shared<const Matrix>(y);
          grow_trees(m, x, SplitTargets{store.get(), {}}, store, cfg.finetune_trees, cfg);
        }
      },
      surrogate.model);
  surrogate.strategy = HybridStrategy::make(StrategyTag::Augmentation);
  return surrogate;
}

/// Trains one hybrid formulation on `rows`.
inline HybridPipeline train_hybrid(const HybridStrategy& strategy, const HybridData& data, RowRange rows,
                                   ModelKind kind, const TrainConfig& cfg, const HybridOptions& opts = {},
                                   const QuantileGrid& grid = QuantileGrid()) {
  cfg.validate();
  if (data.exog == nullptr) throw InputError("features missing");
  if (rows.empty() || rows.begin < 0 || rows.end > data.exog->rows()) throw InputError("training rows out of range");
  const StrategyTag tag = strategy.tag();
  if (strategy.needs_physics_for_training() && data.physics == nullptr) {
    throw InputError(std::string("strategy '") + std::string(to_string(tag)) + "' needs a physics channel");
  }
  if (strategy.reads_measurements() && data.temps == nullptr) throw InputError("measured temperatures missing");

  HybridPipeline p;
  p.strategy = strategy;
  p.rooms = data.rooms;
  p.schema = data.schema;
  p.physics_input = detail::strategy_uses_physics_input(tag, opts);

  const Matrix exog = rows_of(*data.exog, rows);
  std::optional<Matrix> phys;
  if (strategy.needs_physics_for_training()) phys = rows_of(*data.physics, rows);
  const Matrix raw = detail::design_matrix(exog, phys ? &*phys : nullptr, p.physics_input);
  if (uses_standardized_inputs(kind)) p.standardizer = fit_standardizer(raw);
  const Matrix x = detail::prepare_inputs(p, raw);

  switch (tag) {
    case StrategyTag::DataDrivenOnly:
    case StrategyTag::Assistant:
      p.model = detail::fit_model(kind, x, rows_of(*data.temps, rows), nullptr, 0.0, grid, cfg);
      break;
    case StrategyTag::Residual:
      p.model = detail::fit_model(kind, x, rows_of(*data.temps, rows) - *phys, nullptr, 0.0, grid, cfg);
      break;
    case StrategyTag::Surrogate:
    case StrategyTag::Augmentation:
      p.model = detail::fit_model(kind, x, *phys, nullptr, 0.0, grid, cfg);
      break;
    case StrategyTag::Constrained:
      p.model = detail::fit_model(kind, x, rows_of(*data.temps, rows), &*phys, strategy.lambda_or_zero(), grid, cfg);
      break;
  }
  if (tag == StrategyTag::Augmentation) {
    p.strategy = HybridStrategy::make(StrategyTag::Surrogate);
    p = fine_tune(std::move(p), data, rows, cfg);
  }
  return p;
}

inline HybridPipeline train_hybrid(const HybridStrategy& strategy, const TimeSeriesDataset& ds, RowRange rows,
                                   ModelKind kind, const TrainConfig& cfg, const HybridOptions& opts = {},
                                   const QuantileGrid& grid = QuantileGrid()) {
  return train_hybrid(strategy, HybridData::of(ds), rows, kind, cfg, opts, grid);
}

/// Raw model output before any recomposition or sorting.
inline Matrix predict_pipeline_raw(const HybridPipeline& p, const Matrix& exog, const Matrix* physics) {
  if (exog.cols() != p.exogenous_inputs()) {
    throw InputError("pipeline expects " + std::to_string(p.exogenous_inputs()) + " feature columns, got " +
                     std::to_string(exog.cols()));
  }
  if (p.needs_physics_at_inference()) {
    if (physics == nullptr) {
      throw InputError(std::string("strategy '") + std::string(to_string(p.strategy.tag())) +
                       "' needs the physics channel at inference");
    }
    if (physics->rows() != exog.rows() || physics->cols() != static_cast<Index>(p.rooms.size())) {
      throw InputError("physics channel shape does not match the features");
    }
  }
  const Matrix raw = detail::design_matrix(exog, physics, p.physics_input);
  return predict_raw(p.model, detail::prepare_inputs(p, raw));
}

/// Sorted quantile forecast; residual pipelines add the physics trajectory
/// back to every residual quantile.
inline QuantileForecast predict_hybrid(const HybridPipeline& p, const Matrix& exog, const Matrix* physics) {
  Matrix out = predict_pipeline_raw(p, exog, physics);
  if (p.strategy.tag() == StrategyTag::Residual) {
    const Index q = static_cast<Index>(p.grid().size());
    for (Index k = 0; k < static_cast<Index>(p.rooms.size()); ++k) {
      out.middleCols(k * q, q).colwise() += physics->col(k);
    }
  }
  return sort_quantiles(QuantileForecast::from_matrix(out, p.rooms, p.grid()));
}

inline QuantileForecast predict_hybrid(const HybridPipeline& p, const TimeSeriesDataset& ds, RowRange rows) {
  const Matrix exog = rows_of(ds.exog, rows);
  std::optional<Matrix> phys;
  if (p.needs_physics_at_inference()) phys = rows_of(ds.physics_or_throw(), rows);
  return predict_hybrid(p, exog, phys ? &*phys : nullptr);
}

}  // namespace hybridq
