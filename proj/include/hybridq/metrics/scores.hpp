#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "hybridq/core/quantile_grid.hpp"
#include "hybridq/core/types.hpp"
#include "hybridq/error.hpp"
#include "hybridq/models/forecast.hpp"
#include "hybridq/models/pinball.hpp"

namespace hybridq {

namespace detail {

inline void check_aligned(const QuantileForecast& f, const Matrix& y) {
  if (y.rows() != f.steps() || y.cols() != f.rooms_count()) {
    throw InputError("outcomes (" + std::to_string(y.rows()) + " x " + std::to_string(y.cols()) +
                     ") do not align with the forecast (" + std::to_string(f.steps()) + " x " +
                     std::to_string(f.rooms_count()) + ")");
  }
  if (f.steps() == 0) throw InputError("cannot score an empty forecast");
}

}  // namespace detail

struct PblResult {
  std::vector<double> mean;                 // per room, over timesteps and levels
  std::vector<std::vector<double>> curve;   // per room, per level, over timesteps
};

inline PblResult pbl(const QuantileForecast& f, const Matrix& y) {
  detail::check_aligned(f, y);
  const Index q_count = f.levels();
  PblResult r;
  for (Index k = 0; k < f.rooms_count(); ++k) {
    std::vector<double> curve(static_cast<std::size_t>(q_count), 0.0);
    for (Index n = 0; n < f.steps(); ++n) {
      const auto v = f.levels_at(n, k);
      for (Index q = 0; q < q_count; ++q) {
        curve[static_cast<std::size_t>(q)] += pinball_unchecked(f.grid()[static_cast<std::size_t>(q)], y(n, k), v[q]);
      }
    }
    double total = 0.0;
    for (auto& c : curve) {
      total += c;
      c /= static_cast<double>(f.steps());
    }
    r.mean.push_back(total / static_cast<double>(f.steps() * q_count));
    r.curve.push_back(std::move(curve));
  }
  return r;
}

/// Fraction of outcomes inside the closed central interval at 1 - alpha.
inline std::vector<double> coverage(const QuantileForecast& f, const Matrix& y, double alpha) {
  detail::check_aligned(f, y);
  const auto lv = interval_levels(f.grid(), alpha);
  std::vector<double> out;
  for (Index k = 0; k < f.rooms_count(); ++k) {
    Index inside = 0;
    for (Index n = 0; n < f.steps(); ++n) {
      const double obs = y(n, k);
      if (obs >= f.at(n, k, static_cast<Index>(lv.lower)) && obs <= f.at(n, k, static_cast<Index>(lv.upper))) ++inside;
    }
    out.push_back(static_cast<double>(inside) / static_cast<double>(f.steps()));
  }
  return out;
}

/// Empirical coverage minus nominal confidence, per room.
inline std::vector<double> ace(const QuantileForecast& f, const Matrix& y, double alpha) {
  auto c = coverage(f, y, alpha);
  for (auto& v : c) v -= 1.0 - alpha;
  return c;
}

inline double winkler_score(double lower, double upper, double y, double alpha) {
  const double width = upper - lower;
  if (y < lower) return width + 2.0 * (lower - y) / alpha;
  if (y > upper) return width + 2.0 * (y - upper) / alpha;
  return width;
}

inline std::vector<double> winkler(const QuantileForecast& f, const Matrix& y, double alpha) {
  detail::check_aligned(f, y);
  const auto lv = interval_levels(f.grid(), alpha);
  std::vector<double> out;
  for (Index k = 0; k < f.rooms_count(); ++k) {
    double s = 0.0;
    for (Index n = 0; n < f.steps(); ++n) {
      s += winkler_score(f.at(n, k, static_cast<Index>(lv.lower)), f.at(n, k, static_cast<Index>(lv.upper)), y(n, k),
                         alpha);
    }
    out.push_back(s / static_cast<double>(f.steps()));
  }
  return out;
}

inline std::vector<double> mean_width(const QuantileForecast& f, double alpha) {
  if (f.steps() == 0) throw InputError("cannot score an empty forecast");
  const auto lv = interval_levels(f.grid(), alpha);
  std::vector<double> out;
  for (Index k = 0; k < f.rooms_count(); ++k) {
    double s = 0.0;
    for (Index n = 0; n < f.steps(); ++n) {
      s += f.at(n, k, static_cast<Index>(lv.upper)) - f.at(n, k, static_cast<Index>(lv.lower));
    }
    out.push_back(s / static_cast<double>(f.steps()));
  }
  return out;
}

// 0.02, 0.04, ..., 0.98.
inline std::vector<double> default_confidences() {
  std::vector<double> c;
  for (int i = 1; i <= 49; ++i) c.push_back(i / 50.0);
  return c;
}

/// Coverage per nominal confidence c of the interval between levels
/// (1 - c) / 2 and (1 + c) / 2; result[room][confidence].
inline std::vector<std::vector<double>> reliability_curve(const QuantileForecast& f, const Matrix& y,
                                                          const std::vector<double>& confidences) {
  detail::check_aligned(f, y);
  std::vector<std::vector<double>> out(static_cast<std::size_t>(f.rooms_count()));
  for (double c : confidences) {
    if (!(c > 0.0 && c < 1.0)) throw InputError("nominal confidence must lie in (0, 1)");
    const auto cov = coverage(f, y, 1.0 - c);
    for (std::size_t k = 0; k < cov.size(); ++k) out[k].push_back(cov[k]);
  }
  return out;
}

/// Two-sample Kolmogorov-Smirnov distance between empirical CDFs.
inline double ecdf_distance(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw InputError("empirical CDF distance needs two non-empty samples");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

/// Scores of one forecast: per room PBL, PBL by level, and for each alpha
/// the ACE, Winkler score and mean width, plus the reliability curve.
struct EvaluationReport {
  std::vector<std::string> rooms;
  std::vector<double> levels;
  std::vector<double> alphas;
  std::vector<double> confidences;
  std::vector<double> pbl;
  std::vector<std::vector<double>> pbl_by_level;  // [room][level]
  std::vector<std::vector<double>> ace;           // [alpha][room]
  std::vector<std::vector<double>> wks;           // [alpha][room]
  std::vector<std::vector<double>> width;         // [alpha][room]
  std::vector<std::vector<double>> reliability;   // [room][confidence]

  static double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
  }
  double mean_pbl() const { return mean_of(pbl); }
};

inline EvaluationReport evaluate(const QuantileForecast& f, const Matrix& y, const std::vector<double>& alphas,
                                 const std::vector<double>& confidences = default_confidences()) {
  EvaluationReport r;
  r.rooms = f.rooms();
  r.levels = f.grid().levels();
  r.alphas = alphas;
  r.confidences = confidences;
  auto p = pbl(f, y);
  r.pbl = std::move(p.mean);
  r.pbl_by_level = std::move(p.curve);
  for (double a : alphas) {
    r.ace.push_back(ace(f, y, a));
    r.wks.push_back(winkler(f, y, a));
    r.width.push_back(mean_width(f, a));
  }
  r.reliability = reliability_curve(f, y, confidences);
  return r;
}

}  // namespace hybridq
