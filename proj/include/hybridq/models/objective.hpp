#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "hybridq/core/quantile_grid.hpp"
#include "hybridq/core/types.hpp"
#include "hybridq/error.hpp"
#include "hybridq/models/pinball.hpp"

namespace hybridq {

// Mean pinball losses of one output block: `data` against the measured
// targets, `physics` against the physics reference (zero when absent).
struct LossTerms {
  double data = 0.0;
  double physics = 0.0;

  double total(double lambda) const { return data + lambda * physics; }
};

struct EpochRecord {
  std::size_t epoch = 0;
  LossTerms train;
  double train_total = 0.0;
  double validation = 0.0;  // NaN when no validation rows are held out
};

using TrainingLog = std::vector<EpochRecord>;

/// Regression targets shared by the gradient-trained learners. With a
/// physics reference and lambda > 0 the objective becomes
/// mean pinball(y, f) + lambda * mean pinball(physics, f).
struct QuantileTargets {
  const Matrix* y = nullptr;
  const Matrix* physics = nullptr;
  double lambda = 0.0;

  bool constrained() const { return physics != nullptr && lambda != 0.0; }

  void validate(Index rows, Index rooms) const {
    if (y == nullptr) throw InputError("targets missing");
    if (y->rows() != rows) {
      throw InputError("target rows " + std::to_string(y->rows()) + " differ from input rows " + std::to_string(rows));
    }
    if (y->cols() != rooms) throw InputError("target column count mismatch");
    if (lambda < 0.0) throw InputError("regularization constant must be non-negative");
    if (lambda > 0.0 && physics == nullptr) throw InputError("physics reference required for lambda > 0");
    if (physics && (physics->rows() != rows || physics->cols() != rooms)) {
      throw InputError("physics reference shape differs from targets");
    }
  }
};

/// Loss (and optionally d total / d out) for `out`, an (rows x K*Q) block
/// whose rows correspond to rows [first, first + rows) of the targets, or to
/// the rows listed in `row_ids` when given.
template <typename Scalar>
LossTerms quantile_loss(const RowMatrix<Scalar>& out, const QuantileTargets& targets, const QuantileGrid& grid,
                        Index first, RowMatrix<Scalar>* grad, const Index* row_ids = nullptr) {
  const Index rows = out.rows();
  const Index q_count = static_cast<Index>(grid.size());
  const Index k_count = targets.y->cols();
  const double count = static_cast<double>(rows * k_count * q_count);
  const bool constrained = targets.constrained();
  const Scalar scale = static_cast<Scalar>(1.0 / count);
  const Scalar lambda = static_cast<Scalar>(targets.lambda);
  if (grad) grad->resize(rows, out.cols());

  LossTerms terms;
  for (Index i = 0; i < rows; ++i) {
    const Index src = row_ids ? row_ids[i] : first + i;
    for (Index k = 0; k < k_count; ++k) {
      const Scalar y = static_cast<Scalar>((*targets.y)(src, k));
      const Scalar p = constrained ? static_cast<Scalar>((*targets.physics)(src, k)) : Scalar(0);
      for (Index q = 0; q < q_count; ++q) {
        const Index j = k * q_count + q;
        const Scalar level = static_cast<Scalar>(grid[static_cast<std::size_t>(q)]);
        const Scalar f = out(i, j);
        terms.data += static_cast<double>(pinball_unchecked(level, y, f));
        Scalar g = pinball_grad(level, y, f);
        if (constrained) {
          terms.physics += static_cast<double>(pinball_unchecked(level, p, f));
          g += lambda * pinball_grad(level, p, f);
        }
        if (grad) (*grad)(i, j) = g * scale;
      }
    }
  }
  terms.data /= count;
  terms.physics /= count;
  return terms;
}

}  // namespace hybridq
