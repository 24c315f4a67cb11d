#ifndef SOBMOR_RESHAPE_HPP
#define SOBMOR_RESHAPE_HPP

#include <cmath>

#include "sobmor/types.hpp"

// Bijective reshaping maps between flat vectors and full / upper-triangular /
// strictly-upper-triangular matrices. These fix the parameter ordering used by
// all structured parametrizations, so their conventions must not change:
//   vtf  fills column-major, vtu/vtsu fill the (strict) upper triangle row-wise.

namespace sobmor {

/// Side length n of an upper-triangular matrix with n(n+1)/2 packed entries.
inline Index triangular_dim(Index len) {
    const auto n = static_cast<Index>((std::sqrt(8.0 * static_cast<double>(len) + 1.0) - 1.0) / 2.0);
    for (Index k = std::max<Index>(n - 1, 0); k <= n + 1; ++k) {
        if (k * (k + 1) / 2 == len) return k;
    }
    throw DimensionError("vector length " + std::to_string(len) + " is not a triangular number");
}

/// Side length n of a strictly-upper-triangular matrix with n(n-1)/2 packed
/// entries. Length 0 maps to n = 1.
inline Index strict_triangular_dim(Index len) {
    if (len == 0) return 1;
    const auto n = static_cast<Index>((std::sqrt(8.0 * static_cast<double>(len) + 1.0) + 1.0) / 2.0);
    for (Index k = std::max<Index>(n - 1, 2); k <= n + 1; ++k) {
        if (k * (k - 1) / 2 == len) return k;
    }
    throw DimensionError("vector length " + std::to_string(len) +
                         " is not of the form n(n-1)/2");
}

/// Vector of length n*m -> n x m matrix, column-major fill.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>
vtf(const Eigen::Ref<const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>& v, Index m) {
    if (m < 1 || v.size() % m != 0) {
        throw DimensionError("vtf: vector length " + std::to_string(v.size()) +
                             " not divisible by column count " + std::to_string(m));
    }
    const Index n = v.size() / m;
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> A(n, m);
    for (Index col = 0; col < m; ++col) {
        A.col(col) = v.segment(col * n, n);
    }
    return A;
}

/// Column-major vectorization, the inverse of vtf.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1>
ftv(const Eigen::Ref<const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>>& A) {
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> v(A.size());
    for (Index col = 0; col < A.cols(); ++col) {
        v.segment(col * A.rows(), A.rows()) = A.col(col);
    }
    return v;
}

/// Vector of length n(n+1)/2 -> upper-triangular n x n matrix, row-wise fill.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>
vtu(const Eigen::Ref<const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>& v) {
    const Index n = triangular_dim(v.size());
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> A =
        Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Zero(n, n);
    Index k = 0;
    for (Index i = 0; i < n; ++i)
        for (Index j = i; j < n; ++j) A(i, j) = v(k++);
    return A;
}

/// Reads the upper-triangular part row-wise; strictly-lower entries are ignored.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1>
utv(const Eigen::Ref<const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>>& A) {
    if (A.rows() != A.cols()) throw DimensionError("utv: input must be square");
    const Index n = A.rows();
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> v(n * (n + 1) / 2);
    Index k = 0;
    for (Index i = 0; i < n; ++i)
        for (Index j = i; j < n; ++j) v(k++) = A(i, j);
    return v;
}

/// Vector of length n(n-1)/2 -> strictly-upper-triangular n x n matrix.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>
vtsu(const Eigen::Ref<const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>& v) {
    const Index n = strict_triangular_dim(v.size());
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> A =
        Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Zero(n, n);
    Index k = 0;
    for (Index i = 0; i < n; ++i)
        for (Index j = i + 1; j < n; ++j) A(i, j) = v(k++);
    return A;
}

/// Reads the strictly-upper part row-wise; diagonal and below are ignored.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1>
sutv(const Eigen::Ref<const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>>& A) {
    if (A.rows() != A.cols()) throw DimensionError("sutv: input must be square");
    const Index n = A.rows();
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> v(n * (n - 1) / 2);
    Index k = 0;
    for (Index i = 0; i < n; ++i)
        for (Index j = i + 1; j < n; ++j) v(k++) = A(i, j);
    return v;
}

} // namespace sobmor

#endif
