#include "tns/sampler.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <iostream>
#include <random>

namespace tns {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Uniform double in [0, 1) from the top 53 bits of one engine output.
double uniform53(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

// Marginals of negative size up to this magnitude are rounding noise.
constexpr double negative_noise = 1e-12;

Eigen::VectorXd cp_marginals(const std::vector<DenseMatrix>& factors, const std::vector<DenseMatrix>& grams,
                             const PhiMatrix& phi, std::span<const Index> prefix) {
    const std::size_t n = prefix.size();
    if (n >= factors.size()) throw IndexError("prefix covers every row mode");
    if (phi.rank == 0) return Eigen::VectorXd::Zero(factors[n].rows());
    DenseMatrix w = phi.phi;
    for (std::size_t k = 0; k < n; ++k) {
        if (prefix[k] < 1 || prefix[k] > factors[k].rows()) throw IndexError("prefix index out of range");
        const Eigen::RowVectorXd a = factors[k].row(prefix[k] - 1);
        w = w.cwiseProduct(a.transpose() * a);
    }
    for (std::size_t k = n + 1; k < factors.size(); ++k) w = w.cwiseProduct(grams[k]);
    const DenseMatrix& f = factors[n];
    return (f * w).cwiseProduct(f).rowwise().sum() / static_cast<double>(phi.rank);
}

Eigen::VectorXd network_row(const TNMatrix& a, std::span<const Index> multi) {
    return contract(row_network(a, multi)).values();
}

std::vector<double> normalize_marginals(const Eigen::VectorXd& joint) {
    std::vector<double> p(static_cast<std::size_t>(joint.size()));
    double total = 0.0;
    for (Index i = 0; i < joint.size(); ++i) {
        double v = joint[i];
        if (v < 0.0) {
            if (v < -negative_noise)
                std::clog << "tns: warning: marginal probability " << v << " below -" << negative_noise
                          << " clamped to 0\n";
            v = 0.0;
        }
        p[static_cast<std::size_t>(i)] = v;
        total += v;
    }
    if (!(total > 0.0)) throw ZeroPrefixError("conditional distribution: prefix has probability zero");
    for (double& v : p) v /= total;
    return p;
}

}  // namespace

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    std::uint64_t h = splitmix64(seed);
    h = splitmix64(h ^ a);
    h = splitmix64(h ^ b);
    return splitmix64(h ^ c);
}

PhiMatrix phi_from_gram(const DenseMatrix& gram, double rel_tol) {
    auto p = psd_pinv(gram, rel_tol);
    return {std::move(p.pinv), p.rank};
}

PhiMatrix compute_phi(const TNMatrix& a, double rel_tol) { return phi_from_gram(gram_matrix(a), rel_tol); }

std::vector<double> RowSampler::conditional(std::span<const Index> prefix) const {
    return normalize_marginals(joint_marginals(prefix));
}

// ---------------------------------------------------------------------------

NetworkRowSampler::NetworkRowSampler(TNMatrix a, PhiMatrix phi)
    : a_(std::move(a)), phi_(std::move(phi)), row_extents_(a_.row_extents()) {
    if (phi_.phi.rows() != a_.cols() || phi_.phi.cols() != a_.cols())
        throw ShapeError("NetworkRowSampler: phi does not match the column count");
}

Eigen::VectorXd NetworkRowSampler::joint_marginals(std::span<const Index> prefix) const {
    const Index n = static_cast<Index>(prefix.size()) + 1;
    if (n > static_cast<Index>(row_extents_.size())) throw IndexError("prefix covers every row mode");
    if (phi_.rank == 0) return Eigen::VectorXd::Zero(row_extents_[static_cast<std::size_t>(n - 1)]);
    const DenseTensor m = contract(marginal_network(a_, phi_.phi, prefix, n));
    const Index extent = m.dim(0);
    return m.reshaped(extent, extent).diagonal() / static_cast<double>(phi_.rank);
}

Eigen::VectorXd NetworkRowSampler::row(std::span<const Index> multi) const { return network_row(a_, multi); }

// ---------------------------------------------------------------------------

CPRowSampler::CPRowSampler(std::vector<DenseMatrix> factors, Index excluded, double rel_tol) {
    if (excluded < 0 || excluded >= static_cast<Index>(factors.size()))
        throw IndexError("CPRowSampler: excluded mode out of range");
    rank_ = factors.front().cols();
    for (Index k = 0; k < static_cast<Index>(factors.size()); ++k) {
        auto& f = factors[static_cast<std::size_t>(k)];
        if (f.cols() != rank_) throw ShapeError("CPRowSampler: factor column counts differ");
        if (k == excluded) continue;
        grams_.push_back(f.transpose() * f);
        row_extents_.push_back(f.rows());
        factors_.push_back(std::move(f));
    }
    gram_ = DenseMatrix::Ones(rank_, rank_);
    for (const auto& g : grams_) gram_ = hadamard(gram_, g);
    phi_ = phi_from_gram(gram_, rel_tol);
}

Eigen::VectorXd CPRowSampler::joint_marginals(std::span<const Index> prefix) const {
    return cp_marginals(factors_, grams_, phi_, prefix);
}

Eigen::VectorXd CPRowSampler::row(std::span<const Index> multi) const {
    if (multi.size() != factors_.size()) throw IndexError("CPRowSampler::row: multi-index length mismatch");
    Eigen::RowVectorXd r = Eigen::RowVectorXd::Ones(rank_);
    for (std::size_t k = 0; k < multi.size(); ++k) {
        if (multi[k] < 1 || multi[k] > factors_[k].rows()) throw IndexError("CPRowSampler::row: index out of range");
        r = r.cwiseProduct(factors_[k].row(multi[k] - 1));
    }
    return r.transpose();
}

// ---------------------------------------------------------------------------

std::vector<double> conditional_distribution(const TNMatrix& a, const PhiMatrix& phi, std::span<const Index> prefix) {
    return NetworkRowSampler(a, phi).conditional(prefix);
}

std::vector<double> cp_conditional_fast(const std::vector<DenseMatrix>& factors, const PhiMatrix& phi, Index excluded,
                                        std::span<const Index> prefix) {
    if (excluded < 0 || excluded >= static_cast<Index>(factors.size()))
        throw IndexError("cp_conditional_fast: excluded mode out of range");
    std::vector<DenseMatrix> rest, grams;
    for (Index k = 0; k < static_cast<Index>(factors.size()); ++k) {
        if (k == excluded) continue;
        rest.push_back(factors[static_cast<std::size_t>(k)]);
        grams.push_back(rest.back().transpose() * rest.back());
    }
    return normalize_marginals(cp_marginals(rest, grams, phi, prefix));
}

// ---------------------------------------------------------------------------

SketchSpec draw_samples(const RowSampler& sampler, Index samples, std::uint64_t seed) {
    if (samples < 1) throw ParamError("draw_samples: need at least one sample");
    const Dims& extents = sampler.row_extents();
    const std::size_t nr = extents.size();

    // Cumulative conditionals keyed by prefix; the empty prefix is shared by every draw.
    std::map<std::vector<Index>, std::pair<std::vector<double>, std::vector<double>>> cache;
    auto lookup = [&](const std::vector<Index>& prefix) -> const std::pair<std::vector<double>, std::vector<double>>& {
        auto it = cache.find(prefix);
        if (it != cache.end()) return it->second;
        std::vector<double> p = sampler.conditional(prefix);
        std::vector<double> cdf(p.size());
        std::partial_sum(p.begin(), p.end(), cdf.begin());
        return cache.emplace(prefix, std::make_pair(std::move(p), std::move(cdf))).first->second;
    };
    if (nr > 0) lookup({});

    SketchSpec spec;
    spec.draws.reserve(static_cast<std::size_t>(samples));
    spec.weights.reserve(static_cast<std::size_t>(samples));
    for (Index j = 0; j < samples; ++j) {
        std::mt19937_64 rng(stream_seed(seed, static_cast<std::uint64_t>(j)));
        SampleDraw d;
        d.prob = 1.0;
        for (std::size_t n = 0; n < nr; ++n) {
            const auto& [p, cdf] = lookup(d.multi);
            const double u = uniform53(rng) * cdf.back();
            auto pos = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
            if (pos >= p.size()) pos = p.size() - 1;
            while (p[pos] == 0.0 && pos > 0) --pos;
            d.multi.push_back(static_cast<Index>(pos) + 1);
            d.prob *= p[pos];
        }
        d.linear = linear_index(d.multi, extents);
        spec.weights.push_back(1.0 / std::sqrt(static_cast<double>(samples) * d.prob));
        spec.draws.push_back(std::move(d));
    }
    return spec;
}

SketchSpec draw_samples(const TNMatrix& a, const PhiMatrix& phi, Index samples, std::uint64_t seed) {
    return draw_samples(NetworkRowSampler(a, phi), samples, seed);
}

Index sample_size(Index rank, double eps, double delta, double c) {
    if (rank < 1) throw ParamError("sample_size: rank must be positive");
    if (!(eps > 0.0 && eps < 1.0)) throw ParamError("sample_size: epsilon must lie in (0, 1)");
    if (!(delta > 0.0 && delta < 1.0)) throw ParamError("sample_size: delta must lie in (0, 1)");
    if (!(c > 0.0)) throw ParamError("sample_size: oversampling constant must be positive");
    const double r = static_cast<double>(rank);
    const double j = std::ceil(c * r * std::max(std::log(r / delta), 1.0 / (eps * delta)));
    return std::max(static_cast<Index>(j), rank + 1);
}

namespace {

template <typename RowFn>
std::pair<DenseMatrix, DenseMatrix> sketch_rows(const SketchSpec& spec, Index rows, Index cols, RowFn&& row,
                                                const DenseMatrix& x) {
    if (x.rows() != rows)
        throw ShapeError("apply_sketch: unfolding has " + std::to_string(x.rows()) + " rows, design has " +
                         std::to_string(rows));
    if (spec.weights.size() != spec.draws.size()) throw ShapeError("apply_sketch: weight count mismatch");
    const Index j = spec.size();
    DenseMatrix sa(j, cols), sx(j, x.cols());
    for (Index k = 0; k < j; ++k) {
        const auto& d = spec.draws[static_cast<std::size_t>(k)];
        const double w = spec.weights[static_cast<std::size_t>(k)];
        sa.row(k) = w * row(d.multi).transpose();
        sx.row(k) = w * x.row(d.linear - 1);
    }
    return {std::move(sa), std::move(sx)};
}

}  // namespace

std::pair<DenseMatrix, DenseMatrix> apply_sketch(const SketchSpec& spec, const RowSampler& sampler,
                                                 const DenseMatrix& x_unfolding) {
    return sketch_rows(spec, num_entries(sampler.row_extents()), sampler.cols(),
                       [&](const std::vector<Index>& m) { return sampler.row(m); }, x_unfolding);
}

std::pair<DenseMatrix, DenseMatrix> apply_sketch(const SketchSpec& spec, const TNMatrix& a,
                                                 const DenseMatrix& x_unfolding) {
    return sketch_rows(spec, a.rows(), a.cols(), [&](const std::vector<Index>& m) { return network_row(a, m); },
                       x_unfolding);
}

Eigen::VectorXd leverage_scores_bruteforce(const DenseMatrix& a) {
    if (a.size() == 0) return Eigen::VectorXd::Zero(a.rows());
    Eigen::BDCSVD<DenseMatrix> svd(a, Eigen::ComputeThinU);
    const auto& s = svd.singularValues();
    const double cutoff = std::sqrt(default_pinv_tol) * s[0];
    Index rank = 0;
    while (rank < s.size() && s[rank] > cutoff && s[rank] > 0.0) ++rank;
    return svd.matrixU().leftCols(rank).rowwise().squaredNorm();
}

DenseMatrix tr_gram_fast(const std::vector<DenseTensor>& cores, Index excluded) {
    const Index n = static_cast<Index>(cores.size());
    if (n < 2) throw ShapeError("tr_gram_fast: need at least two cores");
    if (excluded < 0 || excluded >= n) throw IndexError("tr_gram_fast: excluded core out of range");
    for (Index k = 0; k < n; ++k) {
        const auto& c = cores[static_cast<std::size_t>(k)];
        const auto& next = cores[static_cast<std::size_t>((k + 1) % n)];
        if (c.order() != 3) throw ShapeError("tr_gram_fast: cores must be 3-way");
        if (next.order() != 3 || c.dim(2) != next.dim(0))
            throw ShapeError("tr_gram_fast: rank mismatch between cores " + std::to_string(k + 1) + " and " +
                             std::to_string((k + 1) % n + 1));
    }

    // Per-core contraction over the data mode: Q[(a + Rl a'), (b + Rr b')] = sum_i G(a,i,b) G(a',i,b').
    auto core_gram = [](const DenseTensor& g) {
        const Index rl = g.dim(0), ni = g.dim(1), rr = g.dim(2);
        DenseMatrix q = DenseMatrix::Zero(rl * rl, rr * rr);
        const std::array<Index, 3> perm{0, 2, 1};
        const DenseTensor p = permute(g, perm);
        for (Index i = 0; i < ni; ++i) {
            const auto s = Eigen::Map<const DenseMatrix>(p.data() + i * rl * rr, rl, rr);
            q += kronecker(s, s);
        }
        return q;
    };

    DenseMatrix chain = core_gram(cores[static_cast<std::size_t>((excluded + 1) % n)]);
    for (Index k = 2; k < n; ++k) chain = chain * core_gram(cores[static_cast<std::size_t>((excluded + k) % n)]);

    const DenseTensor& m = cores[static_cast<std::size_t>(excluded)];
    const Index rl = m.dim(0), rr = m.dim(2);
    DenseMatrix gram(rl * rr, rl * rr);
    for (Index c1 = 0; c1 < rr; ++c1)
        for (Index c0 = 0; c0 < rl; ++c0)
            for (Index d1 = 0; d1 < rr; ++d1)
                for (Index d0 = 0; d0 < rl; ++d0)
                    gram(c0 + rl * c1, d0 + rl * d1) = chain(c1 + rr * d1, c0 + rl * d0);
    return gram;
}

}  // namespace tns
