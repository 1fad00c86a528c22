#pragma once

#include <Eigen/Dense>

namespace lyap {

/// Largest state dimension supported by the expression frontend. Jets use
/// fixed-capacity storage of this size so evaluation never touches the heap.
inline constexpr int kMaxDim = 8;

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

template <class Scalar>
using SmallVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
template <class Scalar>
using SmallMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;

}  // namespace lyap
