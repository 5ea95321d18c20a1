#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "tns/network.hpp"

namespace tns {

/// Pseudoinverse of a Gram matrix together with its numerical rank rho.
struct PhiMatrix {
    DenseMatrix phi;
    Index rank = 0;
};

/// One sampled row: 1-based multi-index over the row modes, its 1-based
/// linear row index, and the probability it was drawn with.
struct SampleDraw {
    std::vector<Index> multi;
    Index linear = 0;
    double prob = 0.0;
};

/// J draws (with replacement) and their weights 1 / sqrt(J p).
struct SketchSpec {
    std::vector<SampleDraw> draws;
    std::vector<double> weights;

    Index size() const { return static_cast<Index>(draws.size()); }
};

inline constexpr double default_pinv_tol = 1e-12;

PhiMatrix phi_from_gram(const DenseMatrix& gram, double rel_tol = default_pinv_tol);

/// Phi = (A^T A)^+ from the contracted Gram network.
PhiMatrix compute_phi(const TNMatrix& a, double rel_tol = default_pinv_tol);

/// Leverage-score distribution of the rows of one design matrix, exposed one
/// row mode at a time. Multi-index values are 1-based.
class RowSampler {
public:
    virtual ~RowSampler() = default;

    virtual const Dims& row_extents() const = 0;
    virtual Index cols() const = 0;
    virtual const PhiMatrix& phi() const = 0;

    /// Joint marginals P(i_1, ..., i_{n-1}, i_n) for every i_n, where n-1 is
    /// the prefix length. Values are already divided by rho.
    virtual Eigen::VectorXd joint_marginals(std::span<const Index> prefix) const = 0;

    /// Row of the design matrix at a full multi-index.
    virtual Eigen::VectorXd row(std::span<const Index> multi) const = 0;

    /// P(i_n | prefix): joint marginals clamped at zero and normalized.
    std::vector<double> conditional(std::span<const Index> prefix) const;
};

/// Generic path: marginals and rows by contracting networks built from the TN matrix.
class NetworkRowSampler final : public RowSampler {
public:
    NetworkRowSampler(TNMatrix a, PhiMatrix phi);

    const Dims& row_extents() const override { return row_extents_; }
    Index cols() const override { return a_.cols(); }
    const PhiMatrix& phi() const override { return phi_; }
    Eigen::VectorXd joint_marginals(std::span<const Index> prefix) const override;
    Eigen::VectorXd row(std::span<const Index> multi) const override;

    const TNMatrix& matrix() const { return a_; }

private:
    TNMatrix a_;
    PhiMatrix phi_;
    Dims row_extents_;
};

/// CP design A^{(N)} (.) ... (.) A^{(1)} without factor m: Gram by the Hadamard
/// product of factor Grams, marginals in closed form.
class CPRowSampler final : public RowSampler {
public:
    /// `factors` holds all N factor matrices; `excluded` is the 0-based mode left out.
    CPRowSampler(std::vector<DenseMatrix> factors, Index excluded, double rel_tol = default_pinv_tol);

    const Dims& row_extents() const override { return row_extents_; }
    Index cols() const override { return rank_; }
    const PhiMatrix& phi() const override { return phi_; }
    Eigen::VectorXd joint_marginals(std::span<const Index> prefix) const override;
    Eigen::VectorXd row(std::span<const Index> multi) const override;

    const DenseMatrix& gram() const { return gram_; }

private:
    std::vector<DenseMatrix> factors_;  // the N-1 factors in row-mode order
    std::vector<DenseMatrix> grams_;
    DenseMatrix gram_;
    PhiMatrix phi_;
    Dims row_extents_;
    Index rank_ = 0;
};

/// Conditional distribution of the next row index given a 1-based prefix.
std::vector<double> conditional_distribution(const TNMatrix& a, const PhiMatrix& phi, std::span<const Index> prefix);

/// Same quantity for a CP design, from the factor matrices.
std::vector<double> cp_conditional_fast(const std::vector<DenseMatrix>& factors, const PhiMatrix& phi, Index excluded,
                                        std::span<const Index> prefix);

/// J independent row draws by sequential conditional sampling. Draw j uses an
/// RNG stream derived from (seed, j), so the result does not depend on
/// evaluation order.
SketchSpec draw_samples(const RowSampler& sampler, Index samples, std::uint64_t seed);
SketchSpec draw_samples(const TNMatrix& a, const PhiMatrix& phi, Index samples, std::uint64_t seed);

/// ceil(c R max(log(R/delta), 1/(eps delta))), at least R + 1.
Index sample_size(Index rank, double eps, double delta, double c = 1.0);

/// (S A, S X) for a sketch of A and the matching unfolding X.
std::pair<DenseMatrix, DenseMatrix> apply_sketch(const SketchSpec& spec, const RowSampler& sampler,
                                                 const DenseMatrix& x_unfolding);
std::pair<DenseMatrix, DenseMatrix> apply_sketch(const SketchSpec& spec, const TNMatrix& a,
                                                 const DenseMatrix& x_unfolding);

/// Leverage scores of a dense matrix from its thin SVD.
Eigen::VectorXd leverage_scores_bruteforce(const DenseMatrix& a);

/// Gram matrix of the tensor-ring design that leaves out core `excluded`:
/// each core is first contracted with its mirror over the data mode, then the
/// resulting chain is multiplied around the ring. Columns are ordered like
/// design_network (left rank of the excluded core fastest).
DenseMatrix tr_gram_fast(const std::vector<DenseTensor>& cores, Index excluded);

/// Deterministic 64-bit stream key from a seed and ordinals.
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0);

}  // namespace tns
