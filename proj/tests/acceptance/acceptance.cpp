// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// nonzero when any criterion fails. Pass criterion numbers as arguments to
// run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "hybridq/harness/report.hpp"
#include "hybridq/models/forest.hpp"
#include "hybridq/models/linear.hpp"
#include "hybridq/models/mlp.hpp"
#include "hybridq/physics/rc_model.hpp"

using namespace hybridq;
namespace fs = std::filesystem;

namespace {

// Tolerances and budgets.
constexpr double kFormulaTol = 1e-12;
constexpr double kGradientRelTol = 1e-4;
constexpr double kGradientScaleFloor = 1e-6;  // gradients smaller than this are compared absolutely
constexpr double kKinkMargin = 1e-3;
constexpr std::size_t kGradientProbes = 100;
constexpr Index kQuantileSamples = 10000;
constexpr double kQuantileFractionTol = 0.02;
constexpr Index kCalibrationRows = 2000;
constexpr int kCoverageSeeds = 20;
constexpr double kCoverageLow = 0.885, kCoverageHigh = 0.925;
constexpr double kAblationSlack = 0.005;
constexpr double kDecayTol = 0.01;
constexpr double kSteadyTol = 0.001;
constexpr int kDirectionalSeeds = 3;

// Collects failed checks with a readable description.
class Checks {
 public:
  void expect(bool ok, const std::string& what) {
    ++count_;
    if (!ok && failures_.size() < 8) failures_.push_back(what);
    if (!ok) ++failed_;
  }
  void near(double got, double want, double tol, const std::string& what) {
    std::ostringstream s;
    s << what << ": got " << got << ", want " << want << " +- " << tol;
    expect(std::abs(got - want) <= tol, s.str());
  }
  void note(const std::string& n) { notes_.push_back(n); }
  bool ok() const { return failed_ == 0; }
  std::string summary() const {
    std::ostringstream s;
    s << count_ - failed_ << "/" << count_ << " checks";
    for (const auto& n : notes_) s << "; " << n;
    for (const auto& f : failures_) s << "\n      failed: " << f;
    return s.str();
  }

 private:
  std::size_t count_ = 0, failed_ = 0;
  std::vector<std::string> failures_, notes_;
};

std::string fmt(double v, int digits = 4) {
  std::ostringstream s;
  s.precision(digits);
  s << std::fixed << v;
  return s.str();
}

Matrix random_matrix(Index rows, Index cols, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) m(i, j) = u(rng);
  }
  return m;
}

QuantileForecast interval(double lo, double hi, Index steps = 1) {
  QuantileForecast f(steps, {"r"}, QuantileGrid({0.05, 0.5, 0.95}));
  for (Index n = 0; n < steps; ++n) {
    f.at(n, 0, 0) = lo;
    f.at(n, 0, 1) = 0.5 * (lo + hi);
    f.at(n, 0, 2) = hi;
  }
  return f;
}

QuantileForecast flat(const std::vector<double>& values, const QuantileGrid& grid) {
  QuantileForecast f(static_cast<Index>(values.size()), {"r"}, grid);
  for (Index n = 0; n < f.steps(); ++n) {
    for (Index q = 0; q < f.levels(); ++q) f.at(n, 0, q) = values[static_cast<std::size_t>(n)];
  }
  return f;
}

// 1. Formula examples.
void formula_exactness(Checks& c) {
  c.near(pinball_loss(0.9, 10, 8), 1.8, kFormulaTol, "pinball q=0.9 y=10 yhat=8");
  c.near(pinball_loss(0.1, 8, 10), 1.8, kFormulaTol, "pinball q=0.1 y=8 yhat=10");
  for (double q : {0.01, 0.5, 0.99}) c.near(pinball_loss(q, 21.7, 21.7), 0.0, kFormulaTol, "pinball y=yhat");

  const QuantileGrid g3({0.1, 0.5, 0.9});
  c.near(pbl(flat({22, 23}, g3), Matrix{{22}, {23}}).mean[0], 0.0, kFormulaTol, "PBL exact forecast");
  c.near(pbl(flat({21, 21}, g3), Matrix::Constant(2, 1, 22)).mean[0], 0.5, kFormulaTol, "PBL constant offset");
  c.near(pbl(flat({22, 22}, QuantileGrid({0.5})), Matrix{{20}, {24}}).mean[0], 1.0, kFormulaTol, "PBL two-point");

  Matrix ninety(100, 1);
  for (Index i = 0; i < 100; ++i) ninety(i, 0) = i < 90 ? 22.0 : 30.0;
  c.near(ace(interval(20, 24, 100), ninety, 0.1)[0], 0.0, kFormulaTol, "ACE 90 of 100 inside");
  c.near(ace(interval(20, 24, 100), Matrix::Constant(100, 1, 21), 0.1)[0], 0.1, kFormulaTol, "ACE all inside");
  c.near(ace(interval(20, 24, 100), Matrix::Constant(100, 1, 40), 0.1)[0], -0.9, kFormulaTol, "ACE none inside");

  c.near(winkler(interval(1, 3), Matrix{{2}}, 0.1)[0], 2.0, kFormulaTol, "Winkler inside");
  c.near(winkler(interval(1, 3), Matrix{{0}}, 0.1)[0], 22.0, kFormulaTol, "Winkler below");
  c.near(winkler(interval(1, 3), Matrix{{4}}, 0.1)[0], 22.0, kFormulaTol, "Winkler above");

  const auto s = nonconformity_scores(std::vector<double>{20, 20, 20}, std::vector<double>{24, 24, 24},
                                      std::vector<double>{22, 25, 19});
  c.near(s[0], -2.0, kFormulaTol, "nonconformity inside");
  c.near(s[1], 1.0, kFormulaTol, "nonconformity above");
  c.near(s[2], 1.0, kFormulaTol, "nonconformity below");
  for (double a : {0.05, 0.1, 0.5}) c.near(compute_delta_q({5.0}, a), 5.0, kFormulaTol, "delta_q single score");

  const auto f = interval(20, 24);
  ConformalCalibrator cal;
  cal.rooms = {"r"};
  cal.grid = f.grid();
  cal.alphas = {0.1};
  cal.entries = {{0, 0.1, 0, 2, 0.5, 10}};
  const auto wide = conformalize(f, cal, 0.1);
  c.near(wide.at(0, 0, 0), 19.5, kFormulaTol, "correction lower bound");
  c.near(wide.at(0, 0, 2), 24.5, kFormulaTol, "correction upper bound");
  cal.entries[0].delta_q = 0.0;
  c.expect(conformalize(f, cal, 0.1) == f, "zero correction leaves the forecast unchanged");
  cal.entries[0].delta_q = -0.75;
  const auto narrow = conformalize(f, cal, 0.1);
  c.near(narrow.at(0, 0, 2) - narrow.at(0, 0, 0), 4.0 - 1.5, kFormulaTol, "negative correction width");
}

// 2. Forest against the pooled-leaf oracle.
std::vector<double> pooled_leaf_oracle(const QuantileForest& f, const Eigen::RowVectorXd& query) {
  std::map<double, double> mass;
  const double b = static_cast<double>(f.tree_count());
  for (const auto& tree : f.trees()) {
    std::size_t node = 0;
    while (tree.nodes[node].feature >= 0) {
      const auto& nd = tree.nodes[node];
      node = static_cast<std::size_t>(query(nd.feature) <= nd.threshold ? nd.left : nd.right);
    }
    const auto& leaf = tree.nodes[node];
    const Matrix& store = *f.stores()[tree.store];
    for (std::uint32_t j = 0; j < leaf.leaf_count; ++j) {
      mass[store(tree.leaf_rows[leaf.leaf_begin + j], 0)] += 1.0 / (b * leaf.leaf_count);
    }
  }
  std::vector<double> out;
  for (double p : f.grid().levels()) {
    double cum = 0.0, chosen = mass.rbegin()->first;
    for (const auto& [v, w] : mass) {
      cum += w;
      if (cum >= p - 1e-9) {
        chosen = v;
        break;
      }
    }
    out.push_back(chosen);
  }
  return out;
}

void forest_oracle(Checks& c) {
  const Matrix x = random_matrix(50, 3, 101);
  const Matrix y = random_matrix(50, 1, 102, 18, 24);
  const Matrix queries = random_matrix(40, 3, 103);
  struct Setting {
    std::size_t trees, leaf;
    bool bootstrap;
    double features;
  };
  std::size_t mismatches = 0, compared = 0;
  for (const Setting& s : {Setting{100, 1, true, 1.0}, Setting{50, 3, true, 0.67}, Setting{20, 5, false, 0.34}}) {
    TrainConfig cfg;
    cfg.trees = s.trees;
    cfg.min_samples_leaf = s.leaf;
    cfg.bootstrap = s.bootstrap;
    cfg.max_features = s.features;
    cfg.seed = 104;
    const auto forest = fit_forest(x, y, QuantileGrid(), cfg);
    const Matrix out = forest.predict(queries);
    for (Index n = 0; n < queries.rows(); ++n) {
      const auto oracle = pooled_leaf_oracle(forest, queries.row(n));
      for (Index q = 0; q < 99; ++q) {
        ++compared;
        if (out(n, q) != oracle[static_cast<std::size_t>(q)]) ++mismatches;
      }
    }
  }
  c.expect(mismatches == 0, std::to_string(mismatches) + " of " + std::to_string(compared) + " predictions differ");
  c.note(std::to_string(compared) + " predictions compared at 99 levels");
}

// 3. Network gradients against central differences.
void gradient_check(Checks& c) {
  using Mlp64 = BasicQuantileMlp<double>;
  const QuantileGrid grid({0.1, 0.3, 0.5, 0.7, 0.9});
  const Activation acts[] = {Activation::Sigmoid, Activation::Tanh};
  double worst = 0.0;
  std::size_t probes = 0, skipped = 0, parameters = 0;
  for (std::uint64_t attempt = 0; probes < kGradientProbes; ++attempt) {
    const Index inputs = 2 + static_cast<Index>(attempt % 3), rooms = 1 + static_cast<Index>(attempt % 2);
    Mlp64 net(inputs, {4, 3}, acts[attempt % 2], rooms, grid, 1000 + attempt);
    const Matrix x = random_matrix(5, inputs, 2000 + attempt);
    const Matrix y = random_matrix(5, rooms, 3000 + attempt, -3, 3);
    const Matrix phys = random_matrix(5, rooms, 4000 + attempt, -3, 3);
    const double lambda = attempt % 3 == 0 ? 0.0 : 0.5 * static_cast<double>(attempt % 5);
    const QuantileTargets t{&y, lambda > 0 ? &phys : nullptr, lambda};

    const Matrix out = net.predict(x);
    const Index q = static_cast<Index>(grid.size());
    double margin = std::numeric_limits<double>::infinity();
    for (Index i = 0; i < out.rows(); ++i) {
      for (Index j = 0; j < out.cols(); ++j) {
        margin = std::min(margin, std::abs(out(i, j) - y(i, j / q)));
        if (t.physics) margin = std::min(margin, std::abs(out(i, j) - phys(i, j / q)));
      }
    }
    if (margin < kKinkMargin) {
      ++skipped;
      continue;
    }
    const auto [terms, g] = net.loss_and_gradient(x, t);
    auto p = net.parameters();
    const double h = 1e-5;
    for (Index i = 0; i < p.size(); ++i) {
      auto plus = p, minus = p;
      plus(i) += h;
      minus(i) -= h;
      net.set_parameters(plus);
      const double lp = net.loss(x, t).total(lambda);
      net.set_parameters(minus);
      const double lm = net.loss(x, t).total(lambda);
      const double fd = (lp - lm) / (2 * h);
      const double rel = std::abs(g(i) - fd) / std::max({std::abs(g(i)), std::abs(fd), kGradientScaleFloor});
      worst = std::max(worst, rel);
      c.expect(rel < kGradientRelTol, "probe " + std::to_string(attempt) + " parameter " + std::to_string(i) +
                                          " relative error " + std::to_string(rel) + " g " + std::to_string(g(i)) + " fd " + std::to_string(fd));
      ++parameters;
    }
    ++probes;
  }
  c.note(std::to_string(probes) + " probes, " + std::to_string(parameters) + " parameters, worst relative error " +
         std::to_string(worst) + ", " + std::to_string(skipped) + " near-kink draws redrawn");
}

// 4. Linear quantile regression leaves each level's share of training
// residuals below its fit.
void quantile_optimality(Checks& c) {
  const QuantileGrid grid({0.1, 0.5, 0.9});
  std::mt19937_64 rng(401);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> e(0.0, 1.0);
  Matrix x(kQuantileSamples, 2), y(kQuantileSamples, 1);
  for (Index i = 0; i < kQuantileSamples; ++i) {
    x(i, 0) = u(rng);
    x(i, 1) = u(rng);
    y(i, 0) = 20.0 + 3.0 * x(i, 0) - x(i, 1) + (0.5 + x(i, 0)) * e(rng);
  }
  TrainConfig cfg;
  const Matrix z = fit_standardizer(x).apply(x);
  const Matrix pred = fit_linear(z, {&y}, grid, cfg).model.predict(z);
  std::ostringstream notes;
  for (Index q = 0; q < 3; ++q) {
    const double level = grid[static_cast<std::size_t>(q)];
    Index below = 0;
    for (Index i = 0; i < kQuantileSamples; ++i) below += y(i, 0) < pred(i, q) ? 1 : 0;
    const double frac = static_cast<double>(below) / static_cast<double>(kQuantileSamples);
    c.near(frac, level, kQuantileFractionTol, "share below level " + fmt(level, 1));
    notes << fmt(level, 1) << ": " << fmt(frac, 4) << " ";
  }

  Matrix ones = Matrix::Constant(kQuantileSamples, 1, 1.0), uy(kQuantileSamples, 1);
  for (Index i = 0; i < kQuantileSamples; ++i) uy(i, 0) = u(rng);
  const QuantileGrid quarter({0.25});
  const double at_quarter = fit_linear(ones, {&uy}, quarter, cfg).model.predict(ones)(0, 0);
  c.near(at_quarter, 0.25, kQuantileFractionTol, "constant input, uniform outcomes, level 0.25");
  c.note("shares below " + notes.str() + "; uniform 0.25-quantile " + fmt(at_quarter));
}

ExperimentConfig iid_config(std::uint64_t seed, Index days, Index train_days) {
  ExperimentConfig cfg;
  cfg.seed = seed;
  cfg.scenario.iid = true;
  cfg.scenario.days = days;
  cfg.scenario.train_days = train_days;
  cfg.scenario.extended_window_days = 0;
  cfg.scenario.extended_windows = 0;
  return cfg;
}

// 5. Conformal coverage on exchangeable data.
void coverage_guarantee(Checks& c) {
  std::vector<double> covs;
  const Index train_block = kCalibrationRows * 5;
  for (int s = 0; s < kCoverageSeeds; ++s) {
    auto cfg = iid_config(static_cast<std::uint64_t>(500 + s), 150, 120);
    cfg.scenario.rooms = {"bed1", "living"};
    cfg.strategies = {StrategyTag::DataDrivenOnly};
    cfg.models = {ModelKind::Linear};
    cfg.alphas = {0.1};
    auto data = load_experiment_data(cfg);
    data.train_block_rows = train_block;
    const auto split = split_dataset(data.dataset.rows(), train_block, true);
    c.expect(split.calibration.size() == kCalibrationRows,
             "calibration rows " + std::to_string(split.calibration.size()));
    const auto r = run_combination(combinations(cfg)[0], cfg, data, split, true);
    c.expect(r.ok, r.error);
    if (!r.ok) continue;
    double cov = 0.0;
    for (double a : r.metrics.ace[0]) cov += a + 0.9;
    covs.push_back(cov / static_cast<double>(r.metrics.ace[0].size()));
  }
  const double mean = covs.empty() ? 0.0 : std::accumulate(covs.begin(), covs.end(), 0.0) / covs.size();
  c.expect(mean >= kCoverageLow && mean <= kCoverageHigh,
           "mean coverage " + fmt(mean) + " outside [" + fmt(kCoverageLow, 3) + ", " + fmt(kCoverageHigh, 3) + "]");
  const auto [lo, hi] = std::minmax_element(covs.begin(), covs.end());
  c.note("mean coverage " + fmt(mean) + " over " + std::to_string(covs.size()) + " seeds (min " + fmt(*lo) + ", max " +
         fmt(*hi) + ")");
}

// 6. Conformal correction never worsens calibration on exchangeable data.
void ablation_direction(Checks& c) {
  auto cfg = iid_config(600, 1000, 800);
  cfg.scenario.rooms = {"bed1", "living"};
  cfg.models = {ModelKind::Mlp};
  cfg.train.hidden = {32, 32};
  cfg.train.batch_size = 128;
  cfg.train.max_epochs = 40;
  cfg.alphas = {0.1};
  const auto data = load_experiment_data(cfg);
  const auto res = conformal_ablation(cfg, data);
  double worst = -std::numeric_limits<double>::infinity();
  std::ostringstream notes;
  for (const auto& e : res.entries) {
    c.expect(e.ok, e.error);
    if (!e.ok) continue;
    double with = 0.0, without = 0.0;
    for (std::size_t k = 0; k < e.ace_with[0].size(); ++k) {
      const double a = std::abs(e.ace_with[0][k]), b = std::abs(e.ace_without[0][k]);
      worst = std::max(worst, a - b);
      c.expect(a <= b + kAblationSlack, e.combo.label() + " room " + data.dataset.rooms[k] + ": |ACE| " + fmt(a) +
                                            " with vs " + fmt(b) + " without");
      with += a;
      without += b;
    }
    const double rooms = static_cast<double>(e.ace_with[0].size());
    notes << e.combo.label() << " " << fmt(without / rooms, 3) << "->" << fmt(with / rooms, 3) << " ";
  }
  c.note("mean |ACE| without->with: " + notes.str() + "; largest increase " + fmt(worst));
}

// 7. Lumped thermal model physics.
void rc_physics(Checks& c) {
  auto blank = [](Index rows) {
    TimeSeriesDataset ds;
    ds.rooms = {"r"};
    ds.schema = FeatureSchema::standard(ds.rooms);
    const std::int64_t t0 = parse_iso8601("2021-03-01T00:00:00");
    for (Index i = 0; i < rows; ++i) ds.timestamps.push_back(t0 + i * kQuarterHour);
    ds.exog = Matrix::Zero(rows, static_cast<Index>(ds.schema.size()));
    ds.temps = Matrix::Zero(rows, 1);
    return ds;
  };
  auto col = [](const TimeSeriesDataset& ds, const std::string& name) {
    return static_cast<Index>(ds.schema.index_of(name));
  };
  const RoomRc p;
  PhysicsModel m;
  m.params = {p};
  m.step_seconds = 60.0;
  c.expect(m.step_seconds <= p.time_constant() / 100.0, "sub-step longer than a hundredth of RC");

  auto decay = blank(500);
  decay.exog.col(col(decay, "t_out")).setConstant(5.0);
  m.initial = {25.0};
  const Matrix a = simulate(m, decay);
  double worst = 0.0;
  for (Index i = 0; i < decay.rows(); ++i) {
    const double t = static_cast<double>(i * kQuarterHour);
    const double analytic = 20.0 * std::exp(-t / p.time_constant());
    worst = std::max(worst, std::abs(a(i, 0) - 5.0 - analytic) / analytic);
  }
  c.expect(worst <= kDecayTol, "decay relative error " + std::to_string(worst));

  auto steady = blank(5000);
  steady.exog.col(col(steady, "t_out")).setConstant(10.0);
  steady.exog.col(col(steady, "occ_r")).setConstant(3.0);
  m.initial = {10.0};
  const Matrix b = simulate(m, steady);
  const double expected = 10.0 + p.resistance * 3.0 * p.occupant_gain;
  const double steady_err = std::abs(b(steady.rows() - 1, 0) - expected) / expected;
  c.expect(steady_err <= kSteadyTol, "steady-state relative error " + std::to_string(steady_err));

  auto closed = blank(80);
  closed.exog.col(col(closed, "t_out")).setConstant(0.0);
  auto opened = closed;
  const Index s = 30;
  for (Index i = s; i < opened.rows(); ++i) opened.exog(i, col(opened, "window_r")) = 1.0;
  m.initial = {22.0};
  const Matrix sc = simulate(m, closed), so = simulate(m, opened);
  bool faster = true;
  for (Index i = s; i + 1 < opened.rows(); ++i) faster = faster && so(i + 1, 0) - so(i, 0) < sc(i + 1, 0) - sc(i, 0);
  c.expect(faster, "open window does not cool faster than a closed one");
  c.expect(so(s + 1, 0) - so(s, 0) < so(s, 0) - so(s - 1, 0), "cooling rate does not jump when the window opens");
  c.note("decay error " + std::to_string(worst) + ", steady error " + std::to_string(steady_err));
}

// 8. Hybrid strategy identities.
void hybrid_identities(Checks& c) {
  ScenarioConfig sc;
  sc.rooms = {"bed1", "living", "office"};
  sc.days = 30;
  sc.train_days = 20;
  sc.extended_windows = 1;
  sc.extended_window_days = 8;
  sc.calibration_days = 10;
  const auto ds = generate_synthetic_dataset(default_true_params(sc.rooms), sc, 800).dataset;
  const RowRange train{0, 20 * kStepsPerDay}, test{20 * kStepsPerDay, 30 * kStepsPerDay};
  TrainConfig tc;
  tc.hidden = {32};
  tc.max_epochs = 30;
  tc.trees = 30;
  tc.finetune_epochs = 5;
  tc.finetune_trees = 5;
  tc.seed = 801;
  const QuantileGrid grid;
  const Matrix exog = rows_of(ds.exog, test), phys = rows_of(*ds.physics, test);
  const Index q = static_cast<Index>(grid.size());
  auto serialized = [](const HybridPipeline& p) { return io::serialize({p, std::nullopt}); };

  for (auto kind : {ModelKind::Linear, ModelKind::Mlp, ModelKind::Forest}) {
    const std::string k(to_string(kind));
    const auto res = train_hybrid(HybridStrategy::make(StrategyTag::Residual), ds, train, kind, tc, {}, grid);
    const Matrix raw = predict_pipeline_raw(res, exog, &phys);
    const auto f = predict_hybrid(res, exog, &phys);
    bool exact = true;
    for (Index n = 0; n < f.steps() && exact; ++n) {
      for (Index r = 0; r < f.rooms_count(); ++r) {
        std::vector<double> expected(static_cast<std::size_t>(q));
        for (Index j = 0; j < q; ++j) expected[static_cast<std::size_t>(j)] = phys(n, r) + raw(n, r * q + j);
        std::sort(expected.begin(), expected.end());
        for (Index j = 0; j < q; ++j) exact = exact && f.at(n, r, j) == expected[static_cast<std::size_t>(j)];
      }
    }
    c.expect(exact, k + ": residual forecast is not physics plus residual quantiles");

    const auto dd = train_hybrid(HybridStrategy::make(StrategyTag::DataDrivenOnly), ds, train, kind, tc, {}, grid);
    const auto c0 = train_hybrid(HybridStrategy::constrained(0.0), ds, train, kind, tc, {}, grid);
    c.expect(dd.model == c0.model, k + ": constrained at zero lambda has different parameters");
    c.expect(predict_hybrid(dd, ds, test) == predict_hybrid(c0, ds, test),
             k + ": constrained at zero lambda predicts differently");

    auto poisoned = ds;
    poisoned.temps.setConstant(std::numeric_limits<double>::quiet_NaN());
    const auto s_clean = train_hybrid(HybridStrategy::make(StrategyTag::Surrogate), ds, train, kind, tc, {}, grid);
    const auto s_poison = train_hybrid(HybridStrategy::make(StrategyTag::Surrogate), poisoned, train, kind, tc, {}, grid);
    HybridData no_y = HybridData::of(ds);
    no_y.temps = nullptr;
    const auto s_none = train_hybrid(HybridStrategy::make(StrategyTag::Surrogate), no_y, train, kind, tc, {}, grid);
    c.expect(serialized(s_clean) == serialized(s_poison), k + ": surrogate changed when measurements were poisoned");
    c.expect(serialized(s_clean) == serialized(s_none), k + ": surrogate changed when measurements were withheld");
  }
}

double mean_of(const std::vector<double>& v) {
  return v.empty() ? std::numeric_limits<double>::quiet_NaN()
                   : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// 9. Residual learning wins on the year-long scenario.
void residual_direction(Checks& c) {
  std::map<std::string, double> total, window;
  std::ostringstream notes;
  for (int s = 0; s < kDirectionalSeeds; ++s) {
    ExperimentConfig cfg;
    cfg.seed = static_cast<std::uint64_t>(s);
    cfg.strategies = {StrategyTag::DataDrivenOnly, StrategyTag::Residual, StrategyTag::Surrogate};
    cfg.models = {ModelKind::Mlp};
    const auto data = load_experiment_data(cfg);
    const auto res = run_experiment(cfg, data);
    notes << "seed " << s << ":";
    for (const auto& r : res.results) {
      c.expect(r.ok, r.error);
      const std::string name(to_string(r.combo.strategy.tag()));
      total[name] += mean_of(r.metrics.pbl) / kDirectionalSeeds;
      window[name] += mean_of(r.window_open_pbl) / kDirectionalSeeds;
      notes << " " << name << " " << fmt(mean_of(r.metrics.pbl), 3) << "/" << fmt(mean_of(r.window_open_pbl), 3);
    }
    notes << "; ";
  }
  c.expect(total["residual"] < total["data_driven"],
           "residual PBL " + fmt(total["residual"]) + " vs data_driven " + fmt(total["data_driven"]));
  c.expect(total["residual"] < total["surrogate"],
           "residual PBL " + fmt(total["residual"]) + " vs surrogate " + fmt(total["surrogate"]));
  c.expect(window["residual"] < window["data_driven"], "window-open residual PBL " + fmt(window["residual"]) +
                                                            " vs data_driven " + fmt(window["data_driven"]));
  c.note(notes.str() + "3-seed mean PBL data_driven " + fmt(total["data_driven"]) + ", residual " +
         fmt(total["residual"]) + ", surrogate " + fmt(total["surrogate"]) + "; window-open data_driven " +
         fmt(window["data_driven"]) + ", residual " + fmt(window["residual"]));
}

// 10. A strong pull toward biased physics hurts.
void lambda_direction(Checks& c) {
  double low = 0.0, high = 0.0;
  std::ostringstream notes;
  for (int s = 0; s < kDirectionalSeeds; ++s) {
    ExperimentConfig cfg;
    cfg.seed = static_cast<std::uint64_t>(s);
    cfg.scenario.physics_offset = 2.0;
    cfg.sweep_lambdas = {0.1, 5.0};
    cfg.sweep_models = {ModelKind::Mlp};
    const auto data = load_experiment_data(cfg);
    const auto res = run_sweep(cfg, data);
    for (const auto& e : res.entries) c.expect(e.ok, e.error);
    if (res.any_failed()) continue;
    low += res.entries[0].mean / kDirectionalSeeds;
    high += res.entries[1].mean / kDirectionalSeeds;
    notes << "seed " << s << ": " << fmt(res.entries[0].mean, 3) << " vs " << fmt(res.entries[1].mean, 3) << "; ";
  }
  c.expect(high > low, "mean PBL at lambda 5 " + fmt(high) + " not above lambda 0.1 " + fmt(low));
  c.note(notes.str() + "3-seed mean " + fmt(low) + " at 0.1, " + fmt(high) + " at 5");
}

// 11. Monotone forecasts and byte-identical reruns.
std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), dir).string()] = io::read_file(e.path());
  }
  return out;
}

void monotone_and_deterministic(Checks& c) {
  ExperimentConfig cfg;
  cfg.seed = 1100;
  cfg.scenario.rooms = {"bed1", "living", "office"};
  cfg.scenario.days = 40;
  cfg.scenario.train_days = 28;
  cfg.scenario.extended_window_days = 10;
  cfg.scenario.calibration_days = 14;
  cfg.train.hidden = {32, 32};
  cfg.train.max_epochs = 25;
  cfg.train.trees = 40;
  cfg.train.finetune_trees = 10;
  cfg.train.finetune_epochs = 5;
  cfg.alphas = {0.1, 0.2, 0.5};
  const fs::path root = fs::temp_directory_path() / ("hybridq_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  std::vector<std::map<std::string, std::string>> runs;
  for (int rep = 0; rep < 2; ++rep) {
    const auto data = load_experiment_data(cfg);
    const auto res = run_experiment(cfg, data);
    c.expect(res.results.size() == 18, "expected 18 combinations");
    for (const auto& r : res.results) {
      c.expect(r.ok, r.error);
      c.expect(r.monotone, r.combo.label() + " emitted a non-monotone forecast");
      c.expect(r.trace.is_monotone(), r.combo.label() + " trace is not monotone");
    }
    emit_report(root / std::to_string(rep), cfg, data, res);
    runs.push_back(snapshot(root / std::to_string(rep)));
  }
  c.expect(runs[0] == runs[1], "reruns differ");
  std::size_t bytes = 0;
  for (const auto& [name, content] : runs[0]) bytes += content.size();
  c.note(std::to_string(runs[0].size()) + " files, " + std::to_string(bytes) + " bytes identical across reruns");
  fs::remove_all(root);
}

struct Criterion {
  int id;
  const char* name;
  double budget_seconds;
  std::function<void(Checks&)> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all{
      {1, "formula exactness", 1, formula_exactness},
      {2, "forest oracle equivalence", 10, forest_oracle},
      {3, "network gradient check", 30, gradient_check},
      {4, "quantile regression optimality", 60, quantile_optimality},
      {5, "conformal coverage guarantee", 300, coverage_guarantee},
      {6, "conformal ablation direction", 300, ablation_direction},
      {7, "thermal simulator physics", 5, rc_physics},
      {8, "hybrid identities", 120, hybrid_identities},
      {9, "residual learning direction", 900, residual_direction},
      {10, "lambda sweep direction", 900, lambda_direction},
      {11, "monotonicity and determinism", 120, monotone_and_deterministic},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failed = 0;
  for (const auto& crit : all) {
    if (!selected.empty() && !selected.count(crit.id)) continue;
    Checks checks;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      crit.run(checks);
    } catch (const std::exception& e) {
      checks.expect(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    checks.expect(secs < crit.budget_seconds,
                  "runtime " + fmt(secs, 2) + " s exceeds budget " + fmt(crit.budget_seconds, 0) + " s");
    const bool ok = checks.ok();
    if (!ok) ++failed;
    std::printf("%s [%d] %s (%.2f s, budget %.0f s): %s\n", ok ? "PASS" : "FAIL", crit.id, crit.name, secs,
                crit.budget_seconds, checks.summary().c_str());
    std::fflush(stdout);
  }
  std::printf("%d criteria failed\n", failed);
  return failed == 0 ? 0 : 1;
}
