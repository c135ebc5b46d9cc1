// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The biasbeam Authors

#pragma once

#include <Eigen/Core>

namespace biasbeam {

using Scalar = double;
using Index = Eigen::Index;

template <typename T>
using RowMatrixX = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using VectorX = Eigen::Matrix<T, Eigen::Dynamic, 1>;

// Dense storage used across the library. Rows are items (words, documents).
using Matrix = RowMatrixX<Scalar>;
using Vector = VectorX<Scalar>;

}  // namespace biasbeam
