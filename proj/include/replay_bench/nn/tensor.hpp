#pragma once

#include <Eigen/Dense>

namespace replay_bench {

/// Row-major dense matrix; one sample per row throughout the library.
template <typename Scalar>
using MatrixT = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using RowVectorT = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

using Matrix = MatrixT<float>;
using RowVector = RowVectorT<float>;

template <typename Scalar>
bool all_finite(const MatrixT<Scalar>& m) {
    return m.allFinite();
}

}  // namespace replay_bench
