#pragma once

// Brute-force reference implementations used only by the tests. Nothing here
// calls the library's contraction, sampling or solver code.

#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tns/network.hpp"

namespace oracle {

using tns::DenseMatrix;
using tns::DenseTensor;
using tns::Dims;
using tns::Index;

/// Contraction by summing over every joint assignment of all mode labels.
inline DenseTensor contract(const tns::TensorNetwork& net) {
    std::map<tns::Slot, std::size_t> label_of;
    std::vector<Index> extents;
    auto add = [&](const tns::Slot& s) {
        label_of[s] = extents.size();
        extents.push_back(net.node(s.node).dim(s.mode));
    };
    for (const auto& b : net.bonds()) {
        add(b.a);
        label_of[b.b] = label_of[b.a];
    }
    Dims out_dims;
    std::vector<std::size_t> out_labels;
    for (const auto& d : net.dangling()) {
        add(d.slot);
        out_labels.push_back(label_of[d.slot]);
        out_dims.push_back(extents.back());
    }
    DenseTensor out(out_dims);
    std::vector<Index> assign(extents.size(), 0);
    const Index total = tns::num_entries(extents);
    for (Index flat = 0; flat < total; ++flat) {
        Index rem = flat;
        for (std::size_t k = 0; k < extents.size(); ++k) {
            assign[k] = rem % extents[k];
            rem /= extents[k];
        }
        double prod = 1.0;
        for (const auto& [id, t] : net.nodes()) {
            std::vector<Index> idx(static_cast<std::size_t>(t.order()));
            for (Index m = 0; m < t.order(); ++m) idx[static_cast<std::size_t>(m)] = assign[label_of.at({id, m})];
            prod *= t.at(idx);
        }
        std::vector<Index> oidx;
        for (auto l : out_labels) oidx.push_back(assign[l]);
        out.at(oidx) += prod;
    }
    return out;
}

/// Leverage scores from a Jacobi SVD; returns (scores, rank).
inline std::pair<Eigen::VectorXd, Index> leverage(const DenseMatrix& a, double rel_tol = 1e-8) {
    Eigen::JacobiSVD<DenseMatrix> svd(a, Eigen::ComputeThinU);
    const auto& s = svd.singularValues();
    Index r = 0;
    while (r < s.size() && s[r] > rel_tol * s[0]) ++r;
    return {svd.matrixU().leftCols(r).rowwise().squaredNorm(), r};
}

/// Minimum-norm least squares via an explicit SVD pseudoinverse.
inline DenseMatrix min_norm_solve(const DenseMatrix& a, const DenseMatrix& b, double rel_tol = 1e-10) {
    Eigen::JacobiSVD<DenseMatrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& s = svd.singularValues();
    Eigen::VectorXd inv = Eigen::VectorXd::Zero(s.size());
    for (Index k = 0; k < s.size(); ++k)
        if (s[k] > rel_tol * s[0]) inv[k] = 1.0 / s[k];
    return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose() * b;
}

/// Full tensor of a CP model with unit weights.
inline DenseTensor cp_full(const std::vector<DenseMatrix>& f) {
    Dims dims;
    for (const auto& m : f) dims.push_back(m.rows());
    DenseTensor out(dims);
    for (Index flat = 0; flat < out.size(); ++flat) {
        const auto multi = tns::multi_index(flat + 1, dims);
        double sum = 0.0;
        for (Index r = 0; r < f[0].cols(); ++r) {
            double p = 1.0;
            for (std::size_t n = 0; n < f.size(); ++n) p *= f[n](multi[n] - 1, r);
            sum += p;
        }
        out[flat] = sum;
    }
    return out;
}

/// Full tensor of a tensor ring: trace of the product of core slices.
inline DenseTensor tr_full(const std::vector<DenseTensor>& cores) {
    Dims dims;
    for (const auto& c : cores) dims.push_back(c.dim(1));
    DenseTensor out(dims);
    for (Index flat = 0; flat < out.size(); ++flat) {
        const auto multi = tns::multi_index(flat + 1, dims);
        DenseMatrix prod = DenseMatrix::Identity(cores[0].dim(0), cores[0].dim(0));
        for (std::size_t n = 0; n < cores.size(); ++n) {
            const auto& c = cores[n];
            DenseMatrix s(c.dim(0), c.dim(2));
            for (Index a = 0; a < c.dim(0); ++a)
                for (Index b = 0; b < c.dim(2); ++b) s(a, b) = c.at(std::vector<Index>{a, multi[n] - 1, b});
            prod = (prod * s).eval();
        }
        out[flat] = prod.trace();
    }
    return out;
}

/// Columnwise Kronecker product, second argument fastest.
inline DenseMatrix khatri_rao(const DenseMatrix& a, const DenseMatrix& b) {
    DenseMatrix out(a.rows() * b.rows(), a.cols());
    for (Index j = 0; j < a.cols(); ++j)
        for (Index i = 0; i < a.rows(); ++i)
            for (Index k = 0; k < b.rows(); ++k) out(i * b.rows() + k, j) = a(i, j) * b(k, j);
    return out;
}

}  // namespace oracle
