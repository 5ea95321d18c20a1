#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "tns/errors.hpp"

namespace tns {

using Index = Eigen::Index;
using Dims = std::vector<Index>;

/// Number of entries of an array with the given extents (1 for an empty list).
inline Index num_entries(std::span<const Index> dims) {
    return std::accumulate(dims.begin(), dims.end(), Index{1}, std::multiplies<>());
}

/// Linear index of a 1-based multi-index, first index fastest:
/// 1 + sum_n (i_n - 1) * prod_{j<n} I_j.
inline Index linear_index(std::span<const Index> multi, std::span<const Index> dims) {
    if (multi.size() != dims.size())
        throw IndexError("linear_index: multi-index has " + std::to_string(multi.size()) +
                         " entries, expected " + std::to_string(dims.size()));
    Index linear = 0;
    Index stride = 1;
    for (std::size_t n = 0; n < dims.size(); ++n) {
        if (multi[n] < 1 || multi[n] > dims[n])
            throw IndexError("linear_index: index " + std::to_string(multi[n]) +
                             " out of range [1, " + std::to_string(dims[n]) + "] at position " +
                             std::to_string(n + 1));
        linear += (multi[n] - 1) * stride;
        stride *= dims[n];
    }
    return linear + 1;
}

/// Inverse of linear_index.
inline std::vector<Index> multi_index(Index linear, std::span<const Index> dims) {
    const Index total = num_entries(dims);
    if (linear < 1 || linear > total)
        throw IndexError("multi_index: linear index " + std::to_string(linear) +
                         " out of range [1, " + std::to_string(total) + "]");
    std::vector<Index> multi(dims.size());
    Index rem = linear - 1;
    for (std::size_t n = 0; n < dims.size(); ++n) {
        multi[n] = rem % dims[n] + 1;
        rem /= dims[n];
    }
    return multi;
}

/// Dense N-way array, first index fastest. A 2-way tensor has the same
/// memory layout as a column-major Eigen matrix.
template <typename Scalar>
class Tensor {
    static_assert(std::is_floating_point_v<Scalar>, "Tensor requires a floating point scalar");

public:
    using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
    using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

    /// Scalar tensor holding 0.
    Tensor() : values_(Vector::Zero(1)) {}

    explicit Tensor(Dims dims) : dims_(std::move(dims)) {
        check_dims();
        values_ = Vector::Zero(num_entries(dims_));
    }

    Tensor(Dims dims, Vector values) : dims_(std::move(dims)), values_(std::move(values)) {
        check_dims();
        if (values_.size() != num_entries(dims_))
            throw ShapeError("Tensor: " + std::to_string(values_.size()) + " values for " +
                             std::to_string(num_entries(dims_)) + " entries");
        if (!values_.allFinite()) throw NonFiniteError("Tensor: non-finite value");
    }

    static Tensor from_matrix(const Matrix& m) {
        return Tensor({m.rows(), m.cols()}, Eigen::Map<const Vector>(m.data(), m.size()));
    }

    static Tensor constant(Dims dims, Scalar value) {
        Tensor t(std::move(dims));
        t.values_.setConstant(value);
        return t;
    }

    const Dims& dims() const { return dims_; }
    Index dim(Index mode) const { return dims_[static_cast<std::size_t>(mode)]; }
    Index order() const { return static_cast<Index>(dims_.size()); }
    Index size() const { return values_.size(); }

    const Vector& values() const { return values_; }
    Vector& values() { return values_; }
    const Scalar* data() const { return values_.data(); }
    Scalar* data() { return values_.data(); }

    Scalar operator[](Index flat) const { return values_[flat]; }
    Scalar& operator[](Index flat) { return values_[flat]; }

    /// Entry at a 0-based multi-index.
    Scalar at(std::span<const Index> idx) const { return values_[offset(idx)]; }
    Scalar& at(std::span<const Index> idx) { return values_[offset(idx)]; }

    /// View of the flat values as a rows x cols column-major matrix.
    Eigen::Map<const Matrix> reshaped(Index rows, Index cols) const {
        if (rows * cols != size()) throw ShapeError("Tensor::reshaped: entry count mismatch");
        return Eigen::Map<const Matrix>(values_.data(), rows, cols);
    }

    Tensor reshape(Dims dims) const {
        if (num_entries(dims) != size()) throw ShapeError("Tensor::reshape: entry count mismatch");
        return Tensor(std::move(dims), values_);
    }

    friend bool operator==(const Tensor& a, const Tensor& b) {
        return a.dims_ == b.dims_ && a.values_ == b.values_;
    }

private:
    void check_dims() const {
        for (Index d : dims_)
            if (d < 1) throw ShapeError("Tensor: extents must be positive");
    }

    Index offset(std::span<const Index> idx) const {
        if (idx.size() != dims_.size()) throw IndexError("Tensor::at: wrong number of indices");
        Index off = 0;
        Index stride = 1;
        for (std::size_t n = 0; n < dims_.size(); ++n) {
            if (idx[n] < 0 || idx[n] >= dims_[n]) throw IndexError("Tensor::at: index out of range");
            off += idx[n] * stride;
            stride *= dims_[n];
        }
        return off;
    }

    Dims dims_;
    Vector values_;
};

namespace detail {

inline Dims strides_of(std::span<const Index> dims) {
    Dims s(dims.size());
    Index stride = 1;
    for (std::size_t n = 0; n < dims.size(); ++n) {
        s[n] = stride;
        stride *= dims[n];
    }
    return s;
}

inline void check_permutation(std::span<const Index> perm, Index order) {
    if (static_cast<Index>(perm.size()) != order)
        throw ModeError("mode list does not cover all " + std::to_string(order) + " modes");
    std::vector<bool> seen(static_cast<std::size_t>(order), false);
    for (Index p : perm) {
        if (p < 0 || p >= order) throw ModeError("mode " + std::to_string(p) + " out of range");
        if (seen[static_cast<std::size_t>(p)]) throw ModeError("mode " + std::to_string(p) + " repeated");
        seen[static_cast<std::size_t>(p)] = true;
    }
}

}  // namespace detail

/// Reorders modes: result mode k is source mode perm[k] (0-based modes).
template <typename Scalar>
Tensor<Scalar> permute(const Tensor<Scalar>& t, std::span<const Index> perm) {
    detail::check_permutation(perm, t.order());
    const std::size_t n = perm.size();
    Dims out_dims(n);
    Dims src_strides(n);
    const Dims in_strides = detail::strides_of(t.dims());
    bool identity = true;
    for (std::size_t k = 0; k < n; ++k) {
        out_dims[k] = t.dims()[static_cast<std::size_t>(perm[k])];
        src_strides[k] = in_strides[static_cast<std::size_t>(perm[k])];
        identity = identity && perm[k] == static_cast<Index>(k);
    }
    if (identity) return t;

    Tensor<Scalar> out(out_dims);
    Dims idx(n, 0);
    Index src = 0;
    const Index total = t.size();
    for (Index flat = 0; flat < total; ++flat) {
        out[flat] = t[src];
        for (std::size_t k = 0; k < n; ++k) {
            if (++idx[k] < out_dims[k]) {
                src += src_strides[k];
                break;
            }
            src -= (out_dims[k] - 1) * src_strides[k];
            idx[k] = 0;
        }
    }
    return out;
}

/// Matricization: rows enumerate row_modes and columns enumerate col_modes,
/// each by the first-index-fastest linear index. Modes are 0-based.
template <typename Scalar>
typename Tensor<Scalar>::Matrix unfold(const Tensor<Scalar>& t, std::span<const Index> row_modes,
                                       std::span<const Index> col_modes) {
    std::vector<Index> perm(row_modes.begin(), row_modes.end());
    perm.insert(perm.end(), col_modes.begin(), col_modes.end());
    detail::check_permutation(perm, t.order());
    Index rows = 1;
    for (Index m : row_modes) rows *= t.dim(m);
    return permute(t, perm).reshaped(rows, t.size() / rows);
}

/// Inverse of unfold for a tensor of extents dims.
template <typename Derived>
Tensor<typename Derived::Scalar> refold(const Eigen::MatrixBase<Derived>& m, std::span<const Index> row_modes,
                                        std::span<const Index> col_modes, std::span<const Index> dims) {
    using Scalar = typename Derived::Scalar;
    std::vector<Index> perm(row_modes.begin(), row_modes.end());
    perm.insert(perm.end(), col_modes.begin(), col_modes.end());
    detail::check_permutation(perm, static_cast<Index>(dims.size()));
    Dims permuted(perm.size());
    Index rows = 1;
    for (std::size_t k = 0; k < perm.size(); ++k) permuted[k] = dims[static_cast<std::size_t>(perm[k])];
    for (Index r : row_modes) rows *= dims[static_cast<std::size_t>(r)];
    if (m.rows() != rows || m.size() != num_entries(dims)) throw ShapeError("refold: matrix shape mismatch");
    const typename Tensor<Scalar>::Matrix dense = m;
    Tensor<Scalar> p(std::move(permuted), Eigen::Map<const typename Tensor<Scalar>::Vector>(dense.data(), dense.size()));
    std::vector<Index> inverse(perm.size());
    for (std::size_t k = 0; k < perm.size(); ++k) inverse[static_cast<std::size_t>(perm[k])] = static_cast<Index>(k);
    return permute(p, inverse);
}

/// Fixes mode `mode` at 0-based `index`; the mode is removed from the result.
template <typename Scalar>
Tensor<Scalar> slice(const Tensor<Scalar>& t, Index mode, Index index) {
    if (mode < 0 || mode >= t.order()) throw ModeError("slice: mode out of range");
    if (index < 0 || index >= t.dim(mode)) throw IndexError("slice: index out of range");
    Index inner = 1;
    for (Index k = 0; k < mode; ++k) inner *= t.dim(k);
    const Index extent = t.dim(mode);
    const Index outer = t.size() / (inner * extent);
    Dims dims = t.dims();
    dims.erase(dims.begin() + mode);
    Tensor<Scalar> out(dims);
    for (Index o = 0; o < outer; ++o)
        for (Index i = 0; i < inner; ++i) out[o * inner + i] = t[(o * extent + index) * inner + i];
    return out;
}

/// Sums the diagonal over modes a and b (a self-bond), removing both.
template <typename Scalar>
Tensor<Scalar> trace(const Tensor<Scalar>& t, Index a, Index b) {
    if (a == b || a < 0 || b < 0 || a >= t.order() || b >= t.order()) throw ModeError("trace: bad mode pair");
    if (t.dim(a) != t.dim(b)) throw ShapeError("trace: extents differ");
    std::vector<Index> perm;
    Dims rest;
    for (Index k = 0; k < t.order(); ++k)
        if (k != a && k != b) {
            perm.push_back(k);
            rest.push_back(t.dim(k));
        }
    perm.push_back(a);
    perm.push_back(b);
    const Index d = t.dim(a);
    const Index nrest = num_entries(rest);
    const auto p = permute(t, perm);
    const auto m = p.reshaped(nrest, d * d);
    typename Tensor<Scalar>::Vector acc = Tensor<Scalar>::Vector::Zero(nrest);
    for (Index k = 0; k < d; ++k) acc += m.col(k + d * k);
    return Tensor<Scalar>(std::move(rest), std::move(acc));
}

template <typename Scalar>
Scalar frobenius_norm(const Tensor<Scalar>& t) {
    return t.values().norm();
}

template <typename DerivedA, typename DerivedB>
Eigen::Matrix<typename DerivedA::Scalar, Eigen::Dynamic, Eigen::Dynamic> kronecker(
    const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
    Eigen::Matrix<typename DerivedA::Scalar, Eigen::Dynamic, Eigen::Dynamic> out(a.rows() * b.rows(),
                                                                                 a.cols() * b.cols());
    for (Index j = 0; j < a.cols(); ++j)
        for (Index i = 0; i < a.rows(); ++i)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

/// Columnwise Kronecker product.
template <typename DerivedA, typename DerivedB>
Eigen::Matrix<typename DerivedA::Scalar, Eigen::Dynamic, Eigen::Dynamic> khatri_rao(
    const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
    if (a.cols() != b.cols())
        throw ShapeError("khatri_rao: column counts " + std::to_string(a.cols()) + " and " +
                         std::to_string(b.cols()) + " differ");
    Eigen::Matrix<typename DerivedA::Scalar, Eigen::Dynamic, Eigen::Dynamic> out(a.rows() * b.rows(), a.cols());
    for (Index j = 0; j < a.cols(); ++j)
        for (Index i = 0; i < a.rows(); ++i) out.col(j).segment(i * b.rows(), b.rows()) = a(i, j) * b.col(j);
    return out;
}

template <typename DerivedA, typename DerivedB>
Eigen::Matrix<typename DerivedA::Scalar, Eigen::Dynamic, Eigen::Dynamic> hadamard(
    const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw ShapeError("hadamard: shapes differ");
    return a.cwiseProduct(b);
}

template <typename Scalar>
struct PseudoInverse {
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> pinv;
    Index rank = 0;
};

/// Pseudoinverse of a symmetric PSD matrix by eigendecomposition. Eigenvalues
/// at or below rel_tol * lambda_max are treated as zero.
template <typename Derived>
PseudoInverse<typename Derived::Scalar> psd_pinv(const Eigen::MatrixBase<Derived>& g,
                                                 typename Derived::Scalar rel_tol = 1e-12) {
    using Scalar = typename Derived::Scalar;
    using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    if (g.rows() != g.cols()) throw ShapeError("psd_pinv: matrix is not square");
    const Matrix sym = (g + g.transpose()) / Scalar(2);
    PseudoInverse<Scalar> out;
    out.pinv = Matrix::Zero(sym.rows(), sym.cols());
    if (sym.size() == 0) return out;

    Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
    const auto& lambda = es.eigenvalues();
    const Scalar lmax = std::max(lambda.maxCoeff(), Scalar(0));
    const Scalar cutoff = rel_tol * lmax;
    if (lambda.minCoeff() < -cutoff)
        throw NotPSDError("psd_pinv: eigenvalue " + std::to_string(lambda.minCoeff()) + " below -" +
                          std::to_string(cutoff));
    if (lmax == Scalar(0)) return out;

    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> inv = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Zero(lambda.size());
    for (Index k = 0; k < lambda.size(); ++k)
        if (lambda[k] > cutoff) {
            inv[k] = Scalar(1) / lambda[k];
            ++out.rank;
        }
    const auto& v = es.eigenvectors();
    out.pinv = v * inv.asDiagonal() * v.transpose();
    out.pinv = (out.pinv + out.pinv.transpose()).eval() / Scalar(2);
    return out;
}

using DenseTensor = Tensor<double>;
using DenseMatrix = Eigen::MatrixXd;

}  // namespace tns
