#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "hybridq/core/quantile_grid.hpp"
#include "hybridq/core/types.hpp"
#include "hybridq/error.hpp"
#include "hybridq/models/adam.hpp"
#include "hybridq/models/objective.hpp"
#include "hybridq/models/train_config.hpp"

namespace hybridq {

/// One weight vector per (room, level); column k * Q + q of `weights` holds
/// the D slopes followed by the intercept.
struct LinearQuantileModel {
  Matrix weights;  // (D + 1) x (K * Q)
  Index rooms = 0;
  QuantileGrid grid;

  Index inputs() const { return weights.rows() - 1; }
  Index parameter_count() const { return weights.size(); }

  Matrix predict(const Matrix& x) const {
    if (x.cols() != inputs()) {
      throw InputError("linear model expects " + std::to_string(inputs()) + " input columns, got " +
                       std::to_string(x.cols()));
    }
    Matrix out = x * weights.topRows(inputs());
    out.rowwise() += weights.row(inputs());
    return out;
  }

  bool operator==(const LinearQuantileModel& o) const {
    return rooms == o.rooms && grid == o.grid && same_values(weights, o.weights);
  }
};

namespace detail {

struct LinearRun {
  TrainingLog log;
};

// Full-batch Adam on the pinball objective; keeps the lowest-loss weights.
inline LinearRun run_linear_adam(LinearQuantileModel& model, const Matrix& x, const QuantileTargets& targets,
                                 const TrainConfig& cfg, std::size_t max_epochs, std::size_t patience) {
  LinearRun run;
  if (max_epochs == 0) return run;
  const Index d = x.cols();
  Matrix w = model.weights.topRows(d);
  Matrix b = model.weights.bottomRows(1);
  Adam<double> adam({&w, &b});
  Matrix out(x.rows(), w.cols()), grad, gw, gb;
  auto loss_at = [&](Matrix* g) {
    out.noalias() = x * w;
    out.rowwise() += b.row(0);
    return quantile_loss<double>(out, targets, model.grid, 0, g);
  };
  LossTerms terms = loss_at(&grad);
  double best = terms.total(targets.lambda);
  Matrix best_w = model.weights;
  std::vector<double> history{best};
  for (std::size_t epoch = 1; epoch <= max_epochs; ++epoch) {
    gw.noalias() = x.transpose() * grad;
    gb = grad.colwise().sum();
    const double lr = cfg.linear_learning_rate / (1.0 + cfg.linear_decay * static_cast<double>(epoch - 1));
    adam.step({&w, &b}, {&gw, &gb}, lr);
    terms = loss_at(&grad);
    const double total = terms.total(targets.lambda);
    if (!std::isfinite(total)) throw NumericalError("linear quantile training diverged at epoch " + std::to_string(epoch));
    run.log.push_back({epoch, terms, total, std::numeric_limits<double>::quiet_NaN()});
    if (total < best) {
      best = total;
      best_w.topRows(d) = w;
      best_w.bottomRows(1) = b;
    }
    history.push_back(best);
    if (history.size() > patience && history[history.size() - 1 - patience] - best < cfg.tolerance) break;
  }
  model.weights = best_w;
  return run;
}

}  // namespace detail

struct LinearFit {
  LinearQuantileModel model;
  TrainingLog log;
};

/// Linear quantile regression for every (room, level) pair. Slopes start at
/// zero and intercepts at the empirical level-q quantile of each target.
inline LinearFit fit_linear(const Matrix& x, const QuantileTargets& targets, const QuantileGrid& grid,
                            const TrainConfig& cfg) {
  cfg.validate();
  if (x.rows() == 0) throw InputError("linear quantile regression needs at least one training row");
  if (x.rows() <= x.cols()) {
    throw InputError("linear quantile regression needs more rows (" + std::to_string(x.rows()) + ") than inputs (" +
                     std::to_string(x.cols()) + ")");
  }
  if (!x.allFinite()) throw InputError("non-finite values in linear model inputs");
  targets.validate(x.rows(), targets.y ? targets.y->cols() : 0);
  const Index k_count = targets.y->cols();
  const Index q_count = static_cast<Index>(grid.size());

  LinearFit fit;
  fit.model.rooms = k_count;
  fit.model.grid = grid;
  fit.model.weights = Matrix::Zero(x.cols() + 1, k_count * q_count);
  for (Index k = 0; k < k_count; ++k) {
    std::vector<double> col;
    col.reserve(static_cast<std::size_t>(x.rows()));
    for (Index i = 0; i < x.rows(); ++i) col.push_back((*targets.y)(i, k));
    std::sort(col.begin(), col.end());
    for (Index q = 0; q < q_count; ++q) {
      fit.model.weights(x.cols(), k * q_count + q) = sorted_quantile(col, grid[static_cast<std::size_t>(q)]);
    }
  }
  fit.log = detail::run_linear_adam(fit.model, x, targets, cfg, cfg.max_epochs, cfg.patience).log;
  return fit;
}

/// Continues Adam updates on new targets with the fine-tuning patience.
inline LinearFit fine_tune_linear(LinearQuantileModel model, const Matrix& x, const QuantileTargets& targets,
                                  const TrainConfig& cfg) {
  cfg.validate();
  if (x.cols() != model.inputs()) throw InputError("fine-tuning inputs do not match the linear model");
  targets.validate(x.rows(), model.rooms);
  LinearFit fit{std::move(model), {}};
  fit.log = detail::run_linear_adam(fit.model, x, targets, cfg, cfg.finetune_epochs, cfg.finetune_patience).log;
  return fit;
}

}  // namespace hybridq
