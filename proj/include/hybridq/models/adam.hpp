#pragma once

#include <cmath>
#include <vector>

#include "hybridq/core/types.hpp"

namespace hybridq {

/// Adaptive moment estimation over a fixed list of parameter tensors.
template <typename Scalar>
class Adam {
 public:
  using Tensor = RowMatrix<Scalar>;

  Adam(const std::vector<Tensor*>& params, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : beta1_(beta1), beta2_(beta2), eps_(eps) {
    for (const Tensor* p : params) {
      m_.push_back(Tensor::Zero(p->rows(), p->cols()));
      v_.push_back(Tensor::Zero(p->rows(), p->cols()));
    }
  }

  void step(const std::vector<Tensor*>& params, const std::vector<const Tensor*>& grads, double lr) {
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    const auto b1 = static_cast<Scalar>(beta1_), b2 = static_cast<Scalar>(beta2_);
    const auto step = static_cast<Scalar>(lr / c1);
    const auto inv_c2 = static_cast<Scalar>(1.0 / c2);
    const auto eps = static_cast<Scalar>(eps_);
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto& m = m_[i];
      auto& v = v_[i];
      const auto& g = *grads[i];
      m = b1 * m + (Scalar(1) - b1) * g;
      v.array() = b2 * v.array() + (Scalar(1) - b2) * g.array().square();
      params[i]->array() -= step * m.array() / ((v.array() * inv_c2).sqrt() + eps);
    }
  }

  long steps() const { return t_; }

 private:
  double beta1_, beta2_, eps_;
  long t_ = 0;
  std::vector<Tensor> m_, v_;
};

}  // namespace hybridq
