#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "hybridq/hybrid/pipeline.hpp"
#include "hybridq/hybrid/sweep.hpp"
#include "hybridq/io/pipeline_io.hpp"
#include "hybridq/metrics/scores.hpp"
#include "hybridq/physics/synthetic.hpp"
#include "test_util.hpp"

using namespace hybridq;

namespace {

const TimeSeriesDataset& small_scenario() {
  static const TimeSeriesDataset ds = [] {
    ScenarioConfig cfg;
    cfg.rooms = {"bed1", "living"};
    cfg.days = 24;
    cfg.train_days = 16;
    cfg.extended_windows = 1;
    cfg.extended_window_days = 6;
    cfg.calibration_days = 8;
    return generate_synthetic_dataset(default_true_params(cfg.rooms), cfg, 5).dataset;
  }();
  return ds;
}

constexpr RowRange kTrain{0, 16 * 96};
constexpr RowRange kTest{16 * 96, 24 * 96};

TrainConfig quick_config() {
  TrainConfig cfg;
  cfg.hidden = {16};
  cfg.max_epochs = 15;
  cfg.patience = 4;
  cfg.trees = 8;
  cfg.finetune_epochs = 5;
  cfg.finetune_trees = 3;
  cfg.seed = 3;
  return cfg;
}

const QuantileGrid kGrid({0.05, 0.25, 0.5, 0.75, 0.95});

std::string bytes_of(const HybridPipeline& p) { return io::serialize({p, std::nullopt}); }

}  // namespace

TEST(Strategy, NamesRoundTrip) {
  for (auto tag : {StrategyTag::DataDrivenOnly, StrategyTag::Assistant, StrategyTag::Residual, StrategyTag::Surrogate,
                   StrategyTag::Augmentation, StrategyTag::Constrained}) {
    EXPECT_EQ(parse_strategy(to_string(tag)), tag);
  }
  EXPECT_EQ(to_string(StrategyTag::DataDrivenOnly), "data_driven");
  EXPECT_THROW(parse_strategy("physics_only"), InputError);
}

TEST(Strategy, LambdaPresentOnlyForConstrained) {
  EXPECT_FALSE(HybridStrategy::make(StrategyTag::Residual).lambda().has_value());
  EXPECT_EQ(HybridStrategy::make(StrategyTag::Constrained).lambda(), kDefaultLambda);
  EXPECT_EQ(HybridStrategy::constrained(2.5).lambda(), 2.5);
  EXPECT_THROW(HybridStrategy::constrained(-1.0), InputError);
  EXPECT_THROW(HybridStrategy::constrained(std::numeric_limits<double>::infinity()), InputError);
}

TEST(Pipeline, InputDimensionsFollowStrategy) {
  const auto& ds = small_scenario();
  const Index d = static_cast<Index>(ds.schema.size()), k = ds.rooms_count();
  for (auto tag : {StrategyTag::DataDrivenOnly, StrategyTag::Assistant, StrategyTag::Residual, StrategyTag::Surrogate}) {
    const auto p = train_hybrid(HybridStrategy::make(tag), ds, kTrain, ModelKind::Linear, quick_config(), {}, kGrid);
    const Index expected = tag == StrategyTag::Assistant || tag == StrategyTag::Residual ? d + k : d;
    EXPECT_EQ(p.input_dimension(), expected) << to_string(tag);
    EXPECT_EQ(model_inputs(p.model), expected);
  }
  HybridOptions exog_only;
  exog_only.residual_physics_input = false;
  const auto r = train_hybrid(HybridStrategy::make(StrategyTag::Residual), ds, kTrain, ModelKind::Linear,
                              quick_config(), exog_only, kGrid);
  EXPECT_EQ(r.input_dimension(), d);
  EXPECT_TRUE(r.needs_physics_at_inference());
}

TEST(Pipeline, ResidualRecomposesPhysicsExactly) {
  const auto& ds = small_scenario();
  for (auto kind : {ModelKind::Linear, ModelKind::Mlp, ModelKind::Forest}) {
    const auto p = train_hybrid(HybridStrategy::make(StrategyTag::Residual), ds, kTest, kind, quick_config(), {}, kGrid);
    const Matrix exog = rows_of(ds.exog, kTest), phys = rows_of(*ds.physics, kTest);
    const Matrix raw = predict_pipeline_raw(p, exog, &phys);
    const auto f = predict_hybrid(p, exog, &phys);
    const Index q = static_cast<Index>(kGrid.size());
    for (Index n = 0; n < f.steps(); ++n) {
      for (Index k = 0; k < f.rooms_count(); ++k) {
        std::vector<double> expected(static_cast<std::size_t>(q));
        for (Index j = 0; j < q; ++j) expected[static_cast<std::size_t>(j)] = phys(n, k) + raw(n, k * q + j);
        std::sort(expected.begin(), expected.end());
        for (Index j = 0; j < q; ++j) ASSERT_EQ(f.at(n, k, j), expected[static_cast<std::size_t>(j)]);
      }
    }
  }
}

TEST(Pipeline, ZeroResidualModelReturnsPhysics) {
  const auto& ds = small_scenario();
  auto p = train_hybrid(HybridStrategy::make(StrategyTag::Residual), ds, kTrain, ModelKind::Linear, quick_config(), {},
                        kGrid);
  std::get<LinearQuantileModel>(p.model).weights.setZero();
  const Matrix exog = rows_of(ds.exog, kTest), phys = rows_of(*ds.physics, kTest);
  const auto f = predict_hybrid(p, exog, &phys);
  for (Index n = 0; n < f.steps(); ++n) {
    for (Index k = 0; k < f.rooms_count(); ++k) {
      for (Index j = 0; j < f.levels(); ++j) ASSERT_EQ(f.at(n, k, j), phys(n, k));
    }
  }
}

TEST(Pipeline, ResidualWithPerfectPhysicsTracksTruth) {
  auto ds = small_scenario();
  ds.physics = ds.temps;
  const auto p =
      train_hybrid(HybridStrategy::make(StrategyTag::Residual), ds, kTrain, ModelKind::Forest, quick_config(), {}, kGrid);
  const auto f = predict_hybrid(p, ds, kTest);
  const Matrix y = rows_of(ds.temps, kTest);
  for (Index n = 0; n < f.steps(); ++n) {
    for (Index k = 0; k < f.rooms_count(); ++k) ASSERT_NEAR(f.at(n, k, 2), y(n, k), 1e-2);
  }
}

TEST(Pipeline, ConstrainedWithZeroLambdaEqualsDataDriven) {
  const auto& ds = small_scenario();
  for (auto kind : {ModelKind::Linear, ModelKind::Mlp, ModelKind::Forest}) {
    const auto dd = train_hybrid(HybridStrategy::make(StrategyTag::DataDrivenOnly), ds, kTrain, kind, quick_config(),
                                 {}, kGrid);
    const auto c0 = train_hybrid(HybridStrategy::constrained(0.0), ds, kTrain, kind, quick_config(), {}, kGrid);
    EXPECT_EQ(dd.model, c0.model) << to_string(kind);
    EXPECT_EQ(predict_hybrid(dd, ds, kTest), predict_hybrid(c0, ds, kTest));
  }
}

TEST(Pipeline, ConstrainedTrainingLogMatchesDataDrivenAtZeroLambda) {
  const auto& ds = small_scenario();
  const Matrix x = rows_of(ds.exog, kTrain), y = rows_of(ds.temps, kTrain), phys = rows_of(*ds.physics, kTrain);
  const Matrix z = fit_standardizer(x).apply(x);
  const auto a = fit_mlp(z, {&y}, kGrid, quick_config());
  const auto b = fit_mlp(z, {&y, &phys, 0.0}, kGrid, quick_config());
  ASSERT_EQ(a.log.size(), b.log.size());
  for (std::size_t i = 0; i < a.log.size(); ++i) {
    EXPECT_EQ(a.log[i].train.data, b.log[i].train.data);
    EXPECT_EQ(a.log[i].validation, b.log[i].validation);
  }
  EXPECT_EQ(a.model, b.model);
}

TEST(Pipeline, LargeLambdaPullsTowardPhysics) {
  auto ds = small_scenario();
  *ds.physics = ds.temps.array() + 1.5;  // physics differs from y by 1.5 degC everywhere
  auto cfg = quick_config();
  cfg.max_epochs = 300;
  cfg.patience = 300;
  const auto p = train_hybrid(HybridStrategy::constrained(1e6), ds, kTrain, ModelKind::Linear, cfg, {}, kGrid);
  const auto f = predict_hybrid(p, ds, kTest);
  const Matrix y = rows_of(ds.temps, kTest), phys = rows_of(*ds.physics, kTest);
  double to_phys = 0.0, to_y = 0.0;
  for (Index n = 0; n < f.steps(); ++n) {
    for (Index k = 0; k < f.rooms_count(); ++k) {
      to_phys += std::abs(f.at(n, k, 2) - phys(n, k));
      to_y += std::abs(f.at(n, k, 2) - y(n, k));
    }
  }
  EXPECT_LT(to_phys, to_y);
}

TEST(Pipeline, SurrogateNeverReadsMeasurements) {
  auto clean = small_scenario();
  auto poisoned = clean;
  poisoned.temps.setConstant(std::numeric_limits<double>::quiet_NaN());
  for (auto kind : {ModelKind::Linear, ModelKind::Mlp, ModelKind::Forest}) {
    const auto a =
        train_hybrid(HybridStrategy::make(StrategyTag::Surrogate), clean, kTrain, kind, quick_config(), {}, kGrid);
    const auto b =
        train_hybrid(HybridStrategy::make(StrategyTag::Surrogate), poisoned, kTrain, kind, quick_config(), {}, kGrid);
    EXPECT_EQ(bytes_of(a), bytes_of(b)) << to_string(kind);
    HybridData no_y = HybridData::of(clean);
    no_y.temps = nullptr;
    const auto c = train_hybrid(HybridStrategy::make(StrategyTag::Surrogate), no_y, kTrain, kind, quick_config(), {}, kGrid);
    EXPECT_EQ(bytes_of(a), bytes_of(c));
  }
}

TEST(Pipeline, DataDrivenNeverReadsPhysics) {
  auto ds = small_scenario();
  HybridData d = HybridData::of(ds);
  d.physics = nullptr;
  const auto p = train_hybrid(HybridStrategy::make(StrategyTag::DataDrivenOnly), d, kTrain, ModelKind::Linear,
                              quick_config(), {}, kGrid);
  EXPECT_FALSE(p.needs_physics_at_inference());
  EXPECT_THROW(train_hybrid(HybridStrategy::make(StrategyTag::Residual), d, kTrain, ModelKind::Linear, quick_config(),
                            {}, kGrid),
               InputError);
}

TEST(Pipeline, SurrogateFitsPhysicsOnTrainingRows) {
  const auto& ds = small_scenario();
  auto cfg = quick_config();
  cfg.max_epochs = 200;
  const auto p = train_hybrid(HybridStrategy::make(StrategyTag::Surrogate), ds, kTrain, ModelKind::Linear, cfg, {}, kGrid);
  const auto f = predict_hybrid(p, ds, kTrain);
  const double fit = EvaluationReport::mean_of(pbl(f, rows_of(*ds.physics, kTrain)).mean);
  EXPECT_LT(fit, 0.25);
}

TEST(FineTune, ZeroBudgetLeavesModelUnchanged) {
  const auto& ds = small_scenario();
  auto cfg = quick_config();
  cfg.finetune_epochs = 0;
  cfg.finetune_trees = 0;
  for (auto kind : {ModelKind::Linear, ModelKind::Mlp, ModelKind::Forest}) {
    const auto s = train_hybrid(HybridStrategy::make(StrategyTag::Surrogate), ds, kTrain, kind, cfg, {}, kGrid);
    const auto t = fine_tune(s, HybridData::of(ds), kTrain, cfg);
    EXPECT_EQ(t.model, s.model) << to_string(kind);
    EXPECT_EQ(t.strategy.tag(), StrategyTag::Augmentation);
  }
}

TEST(FineTune, ForestWarmStartAddsTrees) {
  const auto& ds = small_scenario();
  auto cfg = quick_config();
  cfg.trees = 500;
  cfg.finetune_trees = 100;
  cfg.min_samples_leaf = 40;
  const RowRange rows{0, 400};
  const auto s = train_hybrid(HybridStrategy::make(StrategyTag::Surrogate), ds, rows, ModelKind::Forest, cfg, {}, kGrid);
  const auto t = fine_tune(s, HybridData::of(ds), rows, cfg);
  EXPECT_EQ(std::get<QuantileForest>(t.model).tree_count(), 600u);
}

TEST(FineTune, ImprovesTrainingLossOnMeasurements) {
  const auto& ds = small_scenario();
  auto cfg = quick_config();
  cfg.finetune_epochs = 50;
  cfg.finetune_patience = 50;
  cfg.validation_fraction = 0.0;
  const auto s = train_hybrid(HybridStrategy::make(StrategyTag::Surrogate), ds, kTrain, ModelKind::Mlp, cfg, {}, kGrid);
  const auto t = fine_tune(s, HybridData::of(ds), kTrain, cfg);
  const Matrix y = rows_of(ds.temps, kTrain);
  const double before = EvaluationReport::mean_of(pbl(predict_hybrid(s, ds, kTrain), y).mean);
  const double after = EvaluationReport::mean_of(pbl(predict_hybrid(t, ds, kTrain), y).mean);
  EXPECT_LE(after, before);
}

TEST(FineTune, OnlySurrogatesQualify) {
  const auto& ds = small_scenario();
  const auto p = train_hybrid(HybridStrategy::make(StrategyTag::DataDrivenOnly), ds, kTrain, ModelKind::Linear,
                              quick_config(), {}, kGrid);
  EXPECT_THROW(fine_tune(p, HybridData::of(ds), kTrain, quick_config()), UsageError);
}

TEST(Pipeline, MonotoneForEveryStrategyAndKind) {
  const auto& ds = small_scenario();
  for (auto tag : {StrategyTag::DataDrivenOnly, StrategyTag::Assistant, StrategyTag::Residual, StrategyTag::Surrogate,
                   StrategyTag::Augmentation, StrategyTag::Constrained}) {
    for (auto kind : {ModelKind::Linear, ModelKind::Mlp, ModelKind::Forest}) {
      const auto p = train_hybrid(HybridStrategy::make(tag), ds, kTrain, kind, quick_config(), {}, kGrid);
      EXPECT_TRUE(predict_hybrid(p, ds, kTest).is_monotone()) << to_string(tag) << "/" << to_string(kind);
    }
  }
}

TEST(Pipeline, BundleRoundTripIsExact) {
  const auto& ds = small_scenario();
  for (auto kind : {ModelKind::Linear, ModelKind::Mlp, ModelKind::Forest}) {
    const auto p = train_hybrid(HybridStrategy::constrained(0.5), ds, kTrain, kind, quick_config(), {}, kGrid);
    const std::string bytes = bytes_of(p);
    const auto back = io::deserialize(bytes).pipeline;
    EXPECT_EQ(io::serialize({back, std::nullopt}), bytes);
    EXPECT_EQ(predict_hybrid(back, ds, kTest), predict_hybrid(p, ds, kTest));
    EXPECT_EQ(back.strategy, p.strategy);
    EXPECT_THROW(io::deserialize(bytes + "x"), InputError);
  }
}

TEST(Sweep, ZeroLambdaRowDuplicatesDataDriven) {
  const auto& ds = small_scenario();
  const auto data = HybridData::of(ds);
  const auto rows = sensitivity_sweep({0.0, 1.0}, data, kTrain, kTest, ModelKind::Linear, quick_config(), kGrid);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].pbl.size(), 2u);
  const auto dd = train_hybrid(HybridStrategy::make(StrategyTag::DataDrivenOnly), ds, kTrain, ModelKind::Linear,
                               quick_config(), {}, kGrid);
  EXPECT_EQ(rows[0].pbl, pbl(predict_hybrid(dd, ds, kTest), rows_of(ds.temps, kTest)).mean);
  EXPECT_DOUBLE_EQ(rows[0].mean, EvaluationReport::mean_of(rows[0].pbl));
  EXPECT_THROW(sensitivity_sweep({}, data, kTrain, kTest, ModelKind::Linear, quick_config(), kGrid), InputError);
}

TEST(Sweep, BiasedPhysicsDegradesWithLargeLambda) {
  auto ds = small_scenario();
  *ds.physics = ds.temps.array() + 2.0;
  auto cfg = quick_config();
  cfg.max_epochs = 200;
  const auto rows = sensitivity_sweep({0.1, 1.0, 5.0}, HybridData::of(ds), kTrain, kTest, ModelKind::Linear, cfg, kGrid);
  EXPECT_LE(rows[0].mean, rows[1].mean);
  EXPECT_LE(rows[1].mean, rows[2].mean);
}
