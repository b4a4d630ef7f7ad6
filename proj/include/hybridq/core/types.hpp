#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>

namespace hybridq {

// Samples are rows; channels are columns.
template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Matrix = RowMatrix<double>;
using Vector = Eigen::VectorXd;

using Index = std::ptrdiff_t;

// Shape-aware exact equality; Eigen's operator== requires equal shapes.
template <typename A, typename B>
bool same_values(const Eigen::DenseBase<A>& a, const Eigen::DenseBase<B>& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && (a.derived().array() == b.derived().array()).all();
}

}  // namespace hybridq
