#include <gtest/gtest.h>

#include <cmath>

#include "hybridq/physics/calibration.hpp"
#include "hybridq/physics/nelder_mead.hpp"
#include "hybridq/physics/rc_model.hpp"
#include "hybridq/physics/synthetic.hpp"
#include "test_util.hpp"

using namespace hybridq;

namespace {

PhysicsModel single_room(const RoomRc& p, double initial) {
  PhysicsModel m;
  m.params = {p};
  m.initial = {initial};
  m.step_seconds = 60.0;
  return m;
}

}  // namespace

TEST(RcModel, FreeDecayMatchesExponential) {
  const RoomRc p;  // R*C = 160000 s, dt = 60 s
  auto ds = fixtures::blank_dataset(400, {"r"});
  ds.exog.col(fixtures::column(ds, "t_out")).setConstant(5.0);
  const Matrix sim = simulate(single_room(p, 25.0), ds);
  for (Index i = 0; i < ds.rows(); i += 37) {
    const double t = static_cast<double>(i * kQuarterHour);
    const double analytic = 5.0 + 20.0 * std::exp(-t / p.time_constant());
    EXPECT_NEAR(sim(i, 0), analytic, 0.01 * std::abs(analytic)) << "row " << i;
    EXPECT_NEAR(sim(i, 0) - 5.0, analytic - 5.0, 0.01 * (analytic - 5.0)) << "row " << i;
  }
}

TEST(RcModel, SteadyStateUnderConstantGain) {
  const RoomRc p;
  auto ds = fixtures::blank_dataset(4000, {"r"});
  ds.exog.col(fixtures::column(ds, "t_out")).setConstant(10.0);
  ds.exog.col(fixtures::column(ds, "occ_r")).setConstant(3.0);
  const Matrix sim = simulate(single_room(p, 10.0), ds);
  const double expected = 10.0 + p.resistance * 3.0 * p.occupant_gain;
  EXPECT_NEAR(sim(ds.rows() - 1, 0), expected, 1e-3 * expected);
}

TEST(RcModel, OpeningWindowSpeedsUpCooling) {
  const RoomRc p;
  const Index s = 20;
  auto closed = fixtures::blank_dataset(60, {"r"});
  closed.exog.col(fixtures::column(closed, "t_out")).setConstant(0.0);
  auto opened = closed;
  const Index w = fixtures::column(opened, "window_r");
  for (Index i = s; i < opened.rows(); ++i) opened.exog(i, w) = 1.0;
  const Matrix a = simulate(single_room(p, 22.0), closed);
  const Matrix b = simulate(single_room(p, 22.0), opened);
  const double before = b(s, 0) - b(s - 1, 0);
  const double after = b(s + 1, 0) - b(s, 0);
  EXPECT_LT(after, before);                      // steeper descent
  EXPECT_LT(b(s + 1, 0) - b(s, 0), a(s + 1, 0) - a(s, 0));
  EXPECT_EQ(a(s, 0), b(s, 0));
}

TEST(RcModel, DivergenceIsReported) {
  RoomRc p;
  p.capacitance = 1.0;  // unstable explicit step
  auto ds = fixtures::blank_dataset(10, {"r"});
  ds.exog.col(fixtures::column(ds, "t_out")).setConstant(5.0);
  EXPECT_THROW(simulate(single_room(p, 20.0), ds), NumericalError);
}

TEST(RcModel, StepMustDivideCadence) {
  auto m = single_room(RoomRc{}, 20.0);
  m.step_seconds = 7.0;
  EXPECT_THROW(m.validate(), InputError);
}

TEST(RcModel, InfeasibleBoundsRejected) {
  RcBounds b;
  b.lower.resistance = 1.0;
  b.upper.resistance = 0.1;
  EXPECT_THROW(b.validate(), InputError);
  auto ds = fixtures::blank_dataset(10, {"r"});
  EXPECT_THROW(calibrate(single_room(RoomRc{}, 20.0), ds, b), InputError);
}

TEST(NelderMead, FindsBoxedQuadraticMinimum) {
  auto f = [](const std::vector<double>& x) { return std::pow(x[0] - 0.3, 2) + std::pow(x[1] + 2.0, 2); };
  const auto r = nelder_mead(f, {0.9, 0.9}, {0.0, -1.0}, {1.0, 1.0}, {.max_evaluations = 400});
  EXPECT_NEAR(r.x[0], 0.3, 1e-3);
  EXPECT_NEAR(r.x[1], -1.0, 1e-9);  // clipped at the bound
  EXPECT_LE(r.evaluations, 400u);
}

namespace {

TimeSeriesDataset excited_dataset(Index rows) {
  auto ds = fixtures::blank_dataset(rows, {"r"});
  const Index t_out = fixtures::column(ds, "t_out"), occ = fixtures::column(ds, "occ_r");
  const Index sol = fixtures::column(ds, "sol_direct");
  for (Index i = 0; i < rows; ++i) {
    const double h = static_cast<double>(i % 96) / 96.0;
    ds.exog(i, t_out) = 8.0 + 6.0 * std::sin(2 * M_PI * h);
    ds.exog(i, occ) = (i / 40) % 3;
    ds.exog(i, sol) = std::max(0.0, 400.0 * std::sin(2 * M_PI * (h - 0.25)));
  }
  return ds;
}

}  // namespace

TEST(Calibration, TruthIsAFixedPoint) {
  const RoomRc truth;
  auto ds = excited_dataset(96 * 5);
  ds.temps = simulate(single_room(truth, 21.0), ds);
  const auto fitted = calibrate(single_room(truth, 21.0), ds, RcBounds{});
  ASSERT_EQ(fitted.size(), 1u);
  EXPECT_EQ(fitted[0], truth);
}

TEST(Calibration, RecoversPerturbedResistance) {
  const RoomRc truth;
  auto ds = excited_dataset(96 * 10);
  ds.temps = simulate(single_room(truth, 21.0), ds);
  RoomRc start = truth;
  start.resistance *= 1.5;
  CalibrationOptions opts;
  opts.budget = 500;
  opts.free = {true, false, false, false, false, false};
  const auto fitted = calibrate(single_room(start, 21.0), ds, RcBounds{}, opts);
  EXPECT_NEAR(fitted[0].resistance, truth.resistance, 0.05 * truth.resistance);
  EXPECT_EQ(fitted[0].capacitance, truth.capacitance);
  EXPECT_TRUE(RcBounds{}.contains(fitted[0]));
}

TEST(Synthetic, UnbiasedNoiseFreePhysicsEqualsTruth) {
  ScenarioConfig cfg;
  cfg.rooms = {"bed1", "living"};
  cfg.days = 20;
  cfg.train_days = 10;
  cfg.bias = 0.0;
  cfg.noise_scale = 0.0;
  cfg.unmodeled_scale = 0.0;
  cfg.calibration_days = 0;
  cfg.extended_window_days = 5;
  const auto g = generate_synthetic_dataset(default_true_params(cfg.rooms), cfg, 3);
  ASSERT_TRUE(g.dataset.physics.has_value());
  EXPECT_TRUE(same_values(*g.dataset.physics, g.dataset.temps));
  EXPECT_EQ(g.truth, g.physics);
}

TEST(Synthetic, SameSeedIsBitIdentical) {
  ScenarioConfig cfg;
  cfg.rooms = {"bed1", "bath1"};
  cfg.days = 30;
  cfg.train_days = 15;
  cfg.calibration_days = 10;
  cfg.extended_window_days = 10;
  const auto a = generate_synthetic_dataset(default_true_params(cfg.rooms), cfg, 11);
  const auto b = generate_synthetic_dataset(default_true_params(cfg.rooms), cfg, 11);
  const auto c = generate_synthetic_dataset(default_true_params(cfg.rooms), cfg, 12);
  EXPECT_TRUE(same_values(a.dataset.exog, b.dataset.exog));
  EXPECT_TRUE(same_values(a.dataset.temps, b.dataset.temps));
  EXPECT_TRUE(same_values(*a.dataset.physics, *b.dataset.physics));
  EXPECT_EQ(a.extended_window, b.extended_window);
  EXPECT_FALSE(same_values(a.dataset.temps, c.dataset.temps));
  a.dataset.validate();
}

TEST(Synthetic, ExtendedOpeningsOnlyInTestBlock) {
  ScenarioConfig cfg;
  cfg.rooms = {"living"};
  cfg.days = 40;
  cfg.train_days = 20;
  cfg.extended_window_days = 15;
  cfg.calibration_days = 0;
  const auto g = generate_synthetic_dataset(default_true_params(cfg.rooms), cfg, 1);
  const Index train_rows = cfg.train_days * kStepsPerDay;
  Index in_test = 0;
  for (Index i = 0; i < g.dataset.rows(); ++i) {
    if (g.extended_window[static_cast<std::size_t>(i)]) {
      EXPECT_GE(i, train_rows);
      ++in_test;
    }
  }
  EXPECT_GT(in_test, 0);
}

TEST(Synthetic, DefaultYearPhysicsErrorInBand) {
  ScenarioConfig cfg;
  cfg.days = 365;
  cfg.train_days = 300;
  cfg.extended_window_days = 60;
  const auto g = generate_synthetic_dataset(default_true_params(cfg.rooms), cfg, 0);
  ASSERT_EQ(g.physics_rmse.size(), cfg.rooms.size());
  for (double r : g.physics_rmse) {
    EXPECT_GE(r, 0.3);
    EXPECT_LE(r, 1.5);
  }
}

TEST(Synthetic, RejectsInvalidScenario) {
  ScenarioConfig cfg;
  cfg.bias = 1.0;
  EXPECT_THROW(cfg.validate(), InputError);
  cfg = ScenarioConfig{};
  cfg.rooms.clear();
  EXPECT_THROW(cfg.validate(), InputError);
}
