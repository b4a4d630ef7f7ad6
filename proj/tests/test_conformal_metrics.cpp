#include <gtest/gtest.h>

#include <numeric>
#include <random>

#include "hybridq/conformal/cqr.hpp"
#include "hybridq/metrics/scores.hpp"

using namespace hybridq;

namespace {

// N steps of one room where every level holds the same value.
QuantileForecast flat_forecast(const std::vector<double>& values, const QuantileGrid& grid) {
  QuantileForecast f(static_cast<Index>(values.size()), {"r"}, grid);
  for (Index n = 0; n < f.steps(); ++n) {
    for (Index q = 0; q < f.levels(); ++q) f.at(n, 0, q) = values[static_cast<std::size_t>(n)];
  }
  return f;
}

// Uniform(0, 1) outcomes with their exact quantile forecast.
std::pair<QuantileForecast, Matrix> uniform_oracle(Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const QuantileGrid grid;
  QuantileForecast f(n, {"r"}, grid);
  Matrix y(n, 1);
  for (Index i = 0; i < n; ++i) {
    y(i, 0) = u(rng);
    for (Index q = 0; q < f.levels(); ++q) f.at(i, 0, q) = grid[static_cast<std::size_t>(q)];
  }
  return {f, y};
}

// Interval forecast [lo, hi] on a grid holding 0.05 / 0.5 / 0.95.
QuantileForecast interval(double lo, double hi, Index steps = 1) {
  QuantileForecast f(steps, {"r"}, QuantileGrid({0.05, 0.5, 0.95}));
  for (Index n = 0; n < steps; ++n) {
    f.at(n, 0, 0) = lo;
    f.at(n, 0, 1) = 0.5 * (lo + hi);
    f.at(n, 0, 2) = hi;
  }
  return f;
}

}  // namespace

TEST(Nonconformity, InsideAboveBelow) {
  const std::vector<double> l{20, 20, 20}, u{24, 24, 24}, y{22, 25, 19};
  const auto s = nonconformity_scores(l, u, y);
  EXPECT_NEAR(s[0], -2.0, 1e-12);
  EXPECT_NEAR(s[1], 1.0, 1e-12);
  EXPECT_NEAR(s[2], 1.0, 1e-12);
  EXPECT_THROW(nonconformity_scores(l, u, std::vector<double>{1.0}), InputError);
}

TEST(DeltaQ, OrderStatisticExamples) {
  std::vector<double> nine(9), ninety_nine(99);
  std::iota(nine.begin(), nine.end(), 1.0);
  std::iota(ninety_nine.begin(), ninety_nine.end(), 1.0);
  EXPECT_NEAR(compute_delta_q(nine, 0.1), 9.0, 1e-12);
  EXPECT_NEAR(compute_delta_q({5.0}, 0.1), 5.0, 1e-12);
  EXPECT_NEAR(compute_delta_q({5.0}, 0.7), 5.0, 1e-12);
  EXPECT_NEAR(compute_delta_q(ninety_nine, 0.1), 90.0, 1e-12);
  std::reverse(ninety_nine.begin(), ninety_nine.end());
  EXPECT_NEAR(compute_delta_q(ninety_nine, 0.1), 90.0, 1e-12);
  EXPECT_THROW(compute_delta_q({}, 0.1), InputError);
}

TEST(Conformalize, ShiftsIntervalBounds) {
  const auto f = interval(20, 24);
  ConformalCalibrator c;
  c.rooms = {"r"};
  c.grid = f.grid();
  c.alphas = {0.1};
  c.entries = {{0, 0.1, 0, 2, 0.5, 10}};
  const auto g = conformalize(f, c, 0.1);
  EXPECT_NEAR(g.at(0, 0, 0), 19.5, 1e-12);
  EXPECT_NEAR(g.at(0, 0, 2), 24.5, 1e-12);
  EXPECT_EQ(g.at(0, 0, 1), 22.0);

  c.entries[0].delta_q = 0.0;
  EXPECT_EQ(conformalize(f, c, 0.1), f);

  c.entries[0].delta_q = -0.75;
  const auto narrow = conformalize(f, c, 0.1);
  EXPECT_NEAR(narrow.at(0, 0, 2) - narrow.at(0, 0, 0), 4.0 - 1.5, 1e-12);
  EXPECT_TRUE(narrow.is_monotone());
  EXPECT_THROW(conformalize(f, c, 0.2), UsageError);
}

TEST(Conformalize, OtherLevelsStayMonotone) {
  const QuantileGrid grid;
  QuantileForecast f(1, {"r"}, grid);
  for (Index q = 0; q < 99; ++q) f.at(0, 0, q) = 20.0 + 0.04 * static_cast<double>(q);
  ConformalCalibrator c;
  c.rooms = {"r"};
  c.grid = grid;
  c.alphas = {0.1, 0.5};
  const auto a = interval_levels(grid, 0.1), b = interval_levels(grid, 0.5);
  c.entries = {{0, 0.1, a.lower, a.upper, -1.5, 10}, {0, 0.5, b.lower, b.upper, 0.8, 10}};
  const auto single = conformalize(f, c, 0.1);
  EXPECT_TRUE(single.is_monotone());
  EXPECT_NEAR(single.at(0, 0, static_cast<Index>(a.lower)), f.at(0, 0, static_cast<Index>(a.lower)) + 1.5, 1e-12);
  const auto both = conformalize_all(f, c);
  EXPECT_TRUE(both.is_monotone());
}

TEST(Calibrator, PerRoomAndPooledModes) {
  const QuantileGrid grid({0.05, 0.5, 0.95});
  QuantileForecast f(4, {"a", "b"}, grid);
  Matrix y(4, 2);
  for (Index n = 0; n < 4; ++n) {
    for (Index k = 0; k < 2; ++k) {
      f.at(n, k, 0) = 0.0;
      f.at(n, k, 1) = 1.0;
      f.at(n, k, 2) = 2.0;
      y(n, k) = k == 0 ? 1.0 : 2.0 + static_cast<double>(n);
    }
  }
  const auto per_room = fit_calibrator(f, y, {0.1});
  EXPECT_NEAR(per_room.at(0, 0.1).delta_q, -1.0, 1e-12);
  EXPECT_NEAR(per_room.at(1, 0.1).delta_q, 3.0, 1e-12);
  EXPECT_EQ(per_room.at(1, 0.1).count, 4u);
  const auto pooled = fit_calibrator(f, y, {0.1}, ConformalMode::Pooled);
  EXPECT_EQ(pooled.at(0, 0.1).delta_q, pooled.at(1, 0.1).delta_q);
  EXPECT_EQ(pooled.at(0, 0.1).count, 8u);
  EXPECT_THROW(fit_calibrator(f, y, {0.2}), InputError);
}

TEST(Calibrator, CoversExchangeableData) {
  // Forecast a fixed, too-narrow interval for Uniform(0, 1) outcomes.
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const Index n_cal = 2000, n_test = 20000;
  const auto cal = interval(0.3, 0.7, n_cal), test = interval(0.3, 0.7, n_test);
  Matrix y_cal(n_cal, 1), y_test(n_test, 1);
  for (Index i = 0; i < n_cal; ++i) y_cal(i, 0) = u(rng);
  for (Index i = 0; i < n_test; ++i) y_test(i, 0) = u(rng);
  const auto c = fit_calibrator(cal, y_cal, {0.1});
  const auto cov = coverage(conformalize(test, c, 0.1), y_test, 0.1)[0];
  EXPECT_NEAR(cov, 0.9, 0.01);
  EXPECT_LT(coverage(test, y_test, 0.1)[0], 0.5);
}

TEST(Calibrator, FullGridCalibratesEverySymmetricPair) {
  const auto [f, y] = uniform_oracle(500, 4);
  const auto c = fit_calibrator(f, y, {0.1}, ConformalMode::PerRoom, true);
  EXPECT_EQ(c.alphas.size(), 49u);
  EXPECT_EQ(c.entries.size(), 49u);
  EXPECT_TRUE(conformalize_all(f, c).is_monotone());
}

TEST(Pbl, Examples) {
  const QuantileGrid g({0.1, 0.5, 0.9});
  EXPECT_NEAR(pbl(flat_forecast({22, 23}, g), Matrix{{22}, {23}}).mean[0], 0.0, 1e-12);
  EXPECT_NEAR(pbl(flat_forecast({21, 21}, g), Matrix::Constant(2, 1, 22)).mean[0], 0.5, 1e-12);
  EXPECT_NEAR(pbl(flat_forecast({22, 22}, QuantileGrid({0.5})), Matrix{{20}, {24}}).mean[0], 1.0, 1e-12);
  const auto r = pbl(flat_forecast({21, 21}, g), Matrix::Constant(2, 1, 22));
  EXPECT_NEAR(r.curve[0][0], 0.1, 1e-12);
  EXPECT_NEAR(r.curve[0][2], 0.9, 1e-12);
  EXPECT_THROW(pbl(flat_forecast({21}, g), Matrix::Constant(2, 1, 22)), InputError);
}

TEST(Ace, Examples) {
  Matrix y(100, 1);
  for (Index i = 0; i < 100; ++i) y(i, 0) = i < 90 ? 22.0 : 30.0;
  EXPECT_NEAR(ace(interval(20, 24, 100), y, 0.1)[0], 0.0, 1e-12);
  EXPECT_NEAR(ace(interval(20, 24, 100), Matrix::Constant(100, 1, 21), 0.1)[0], 0.1, 1e-12);
  EXPECT_NEAR(ace(interval(20, 24, 100), Matrix::Constant(100, 1, 40), 0.1)[0], -0.9, 1e-12);
  EXPECT_NEAR(coverage(interval(20, 24, 2), Matrix{{20}, {24}}, 0.1)[0], 1.0, 1e-12);  // closed interval
}

TEST(Winkler, Examples) {
  EXPECT_NEAR(winkler(interval(1, 3), Matrix{{2}}, 0.1)[0], 2.0, 1e-12);
  EXPECT_NEAR(winkler(interval(1, 3), Matrix{{0}}, 0.1)[0], 22.0, 1e-12);
  EXPECT_NEAR(winkler(interval(1, 3), Matrix{{4}}, 0.1)[0], 22.0, 1e-12);
  EXPECT_NEAR(mean_width(interval(1, 3), 0.1)[0], 2.0, 1e-12);
}

TEST(Reliability, OracleForecastIsCalibrated) {
  const auto [f, y] = uniform_oracle(10000, 12);
  const auto conf = default_confidences();
  const auto curve = reliability_curve(f, y, conf);
  ASSERT_EQ(curve.size(), 1u);
  ASSERT_EQ(curve[0].size(), conf.size());
  for (std::size_t i = 0; i < conf.size(); ++i) EXPECT_NEAR(curve[0][i], conf[i], 0.02) << conf[i];
}

TEST(Reliability, ZeroWidthIntervalsCoverOnlyExactHits) {
  const Matrix y = uniform_oracle(1000, 13).second;
  const auto flat = flat_forecast(std::vector<double>(1000, 0.5), QuantileGrid());
  const auto curve = reliability_curve(flat, y, {0.2, 0.8});
  for (double v : curve[0]) EXPECT_EQ(v, 0.0);
}

TEST(Reliability, WideningNeverLowersCoverage) {
  const auto [f, y] = uniform_oracle(2000, 14);
  QuantileForecast wide = f;
  for (Index n = 0; n < wide.steps(); ++n) {
    for (Index q = 0; q < wide.levels(); ++q) wide.at(n, 0, q) += (wide.grid()[static_cast<std::size_t>(q)] - 0.5) * 0.3;
  }
  const auto conf = default_confidences();
  const auto a = reliability_curve(f, y, conf)[0], b = reliability_curve(wide, y, conf)[0];
  for (std::size_t i = 0; i < conf.size(); ++i) EXPECT_GE(b[i], a[i]);
}

TEST(Metrics, BoundsHold) {
  const auto [f, y] = uniform_oracle(3000, 15);
  for (double alpha : {0.1, 0.5}) {
    EXPECT_GE(winkler(f, y, alpha)[0], mean_width(f, alpha)[0]);
    const double a = ace(f, y, alpha)[0];
    EXPECT_GE(a, -(1 - alpha));
    EXPECT_LE(a, alpha);
  }
  EXPECT_GE(pbl(f, y).mean[0], 0.0);
}

TEST(Metrics, PblCurveLowestAtExtremes) {
  const auto [f, y] = uniform_oracle(10000, 16);
  const auto curve = pbl(f, y).curve[0];
  EXPECT_LT(curve[0], curve[49]);
  EXPECT_LT(curve[98], curve[49]);
}

TEST(Metrics, TranslationInvariant) {
  auto [f, y] = uniform_oracle(500, 17);
  QuantileForecast shifted = f;
  for (Index n = 0; n < f.steps(); ++n) {
    for (Index q = 0; q < f.levels(); ++q) shifted.at(n, 0, q) += 7.0;
  }
  const Matrix ys = y.array() + 7.0;
  const auto a = evaluate(f, y, {0.1, 0.2}), b = evaluate(shifted, ys, {0.1, 0.2});
  EXPECT_NEAR(a.pbl[0], b.pbl[0], 1e-9);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_NEAR(a.ace[i][0], b.ace[i][0], 1e-12);
    EXPECT_NEAR(a.wks[i][0], b.wks[i][0], 1e-9);
    EXPECT_NEAR(a.width[i][0], b.width[i][0], 1e-9);
  }
}

TEST(Metrics, EcdfDistance) {
  EXPECT_EQ(ecdf_distance({1, 2, 3}, {1, 2, 3}), 0.0);
  EXPECT_EQ(ecdf_distance({1, 2}, {3, 4}), 1.0);
  EXPECT_NEAR(ecdf_distance({1, 2, 3, 4}, {3, 4, 5, 6}), 0.5, 1e-12);
  EXPECT_THROW(ecdf_distance({}, {1}), InputError);
}
