#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <numeric>
#include <vector>

#include "hybridq/error.hpp"

namespace hybridq {

struct NelderMeadOptions {
  std::size_t max_evaluations = 500;
  double initial_step = 0.1;  // simplex edge in the box-normalised coordinates
  double tolerance = 0.0;     // stop once the simplex value spread falls below this
};

struct NelderMeadResult {
  std::vector<double> x;
  double value = 0.0;
  std::size_t evaluations = 0;
};

/// Bounded Nelder-Mead simplex search. Works in coordinates normalised to
/// the unit box; every trial point is clipped onto [lower, upper]. The
/// starting point is a vertex, so the result is never worse than it.
inline NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& objective,
                                    std::vector<double> x0, const std::vector<double>& lower,
                                    const std::vector<double>& upper, const NelderMeadOptions& opts = {}) {
  const std::size_t n = x0.size();
  if (lower.size() != n || upper.size() != n) throw InputError("bounds dimension does not match start point");
  for (std::size_t i = 0; i < n; ++i) {
    if (!(lower[i] <= upper[i])) throw InputError("infeasible bounds: lower > upper for coordinate " + std::to_string(i));
  }
  if (opts.max_evaluations < n + 1) {
    throw InputError("evaluation budget " + std::to_string(opts.max_evaluations) + " is smaller than the simplex size " +
                     std::to_string(n + 1));
  }

  auto to_box = [&](const std::vector<double>& u) {
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double c = std::clamp(u[i], 0.0, 1.0);
      x[i] = lower[i] + c * (upper[i] - lower[i]);
    }
    return x;
  };
  auto clip = [](std::vector<double> u) {
    for (double& v : u) v = std::clamp(v, 0.0, 1.0);
    return u;
  };

  std::vector<double> u0(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double span = upper[i] - lower[i];
    u0[i] = span > 0.0 ? std::clamp((x0[i] - lower[i]) / span, 0.0, 1.0) : 0.0;
  }

  // The start point is evaluated and returned as given (after clamping), so a
  // search that never improves on it hands back the exact input.
  std::vector<double> x0c(n);
  for (std::size_t i = 0; i < n; ++i) x0c[i] = std::clamp(x0[i], lower[i], upper[i]);
  auto point_of = [&](const std::vector<double>& u) { return u == u0 ? x0c : to_box(u); };

  std::size_t evals = 0;
  auto eval = [&](const std::vector<double>& u) {
    ++evals;
    return objective(point_of(u));
  };

  std::vector<std::vector<double>> simplex;
  std::vector<double> f(n + 1);
  // Vertex 0 keeps its value; the others are offset along each axis.
  auto build_simplex = [&](const std::vector<double>& base, double f_base) {
    simplex.assign(1, base);
    f[0] = f_base;
    for (std::size_t i = 0; i < n; ++i) {
      auto v = base;
      v[i] += (v[i] + opts.initial_step <= 1.0) ? opts.initial_step : -opts.initial_step;
      simplex.push_back(clip(v));
      f[i + 1] = eval(simplex.back());
    }
  };
  build_simplex(u0, eval(u0));
  double restart_value = f[0];

  std::vector<std::size_t> order(n + 1);
  while (evals < opts.max_evaluations) {
    std::iota(order.begin(), order.end(), 0);
    // Stable: ties keep the earlier vertex (the start point first).
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return f[a] < f[b]; });
    const std::size_t best = order.front(), worst = order.back(), second = order[n - 1];
    double extent = 0.0;
    for (const auto& v : simplex) {
      for (std::size_t i = 0; i < n; ++i) extent = std::max(extent, std::abs(v[i] - simplex[best][i]));
    }
    if (f[worst] - f[best] <= opts.tolerance || extent < 1e-10) {
      // Clipping can flatten the simplex onto a face of the box; restart
      // around the best vertex while restarts keep improving.
      if (!(f[best] < restart_value) || evals + n > opts.max_evaluations) break;
      restart_value = f[best];
      const auto base = simplex[best];
      build_simplex(base, f[best]);
      continue;
    }

    std::vector<double> centroid(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
      for (std::size_t i = 0; i < n; ++i) centroid[i] += simplex[order[k]][i] / static_cast<double>(n);
    }
    auto along = [&](double t) {
      std::vector<double> p(n);
      for (std::size_t i = 0; i < n; ++i) p[i] = centroid[i] + t * (simplex[worst][i] - centroid[i]);
      return clip(p);
    };

    auto reflected = along(-1.0);
    const double fr = eval(reflected);
    if (fr < f[best]) {
      if (evals >= opts.max_evaluations) {
        simplex[worst] = reflected;
        f[worst] = fr;
        break;
      }
      auto expanded = along(-2.0);
      const double fe = eval(expanded);
      if (fe < fr) {
        simplex[worst] = expanded;
        f[worst] = fe;
      } else {
        simplex[worst] = reflected;
        f[worst] = fr;
      }
      continue;
    }
    if (fr < f[second]) {
      simplex[worst] = reflected;
      f[worst] = fr;
      continue;
    }
    if (evals >= opts.max_evaluations) break;
    const bool outside = fr < f[worst];
    auto contracted = along(outside ? -0.5 : 0.5);
    const double fc = eval(contracted);
    if (fc < (outside ? fr : f[worst])) {
      simplex[worst] = contracted;
      f[worst] = fc;
      continue;
    }
    // Shrink toward the best vertex.
    for (std::size_t k = 1; k <= n && evals < opts.max_evaluations; ++k) {
      const std::size_t v = order[k];
      for (std::size_t i = 0; i < n; ++i) simplex[v][i] = simplex[best][i] + 0.5 * (simplex[v][i] - simplex[best][i]);
      f[v] = eval(simplex[v]);
    }
  }

  std::size_t best = 0;
  for (std::size_t i = 1; i <= n; ++i) {
    if (f[i] < f[best]) best = i;
  }
  return {point_of(simplex[best]), f[best], evals};
}

}  // namespace hybridq
