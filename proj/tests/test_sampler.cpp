#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "oracles.hpp"
#include "tns/verify.hpp"

using namespace tns;

namespace {

const std::vector<VerifyInstance>& instances() {
    static const auto list = verify_instances(3);
    return list;
}

Eigen::VectorXd oracle_distribution(const TNMatrix& a) {
    const auto [lev, rank] = oracle::leverage(materialize(a));
    return lev / static_cast<double>(rank);
}

TNMatrix small_design(std::uint64_t seed) {
    TensorNetwork net;
    net.add_node("A", random_normal({3, 2, 2}, seed));
    net.add_node("B", random_normal({2, 4, 3}, seed + 1));
    net.add_bond({"A", 1}, {"B", 0});
    net.add_dangling("i", {"A", 0});
    net.add_dangling("j", {"B", 1});
    net.add_dangling("c", {"A", 2});
    net.add_dangling("d", {"B", 2});
    return TNMatrix(std::move(net), {"i", "j"}, {"c", "d"});
}

}  // namespace

TEST(Sampler, SequentialConditionalsMatchLeverageScores) {
    ASSERT_EQ(instances().size(), 20u);
    for (const auto& inst : instances()) {
        const Eigen::VectorXd expect = oracle_distribution(inst.a);
        const NetworkRowSampler s(inst.a, compute_phi(inst.a));
        EXPECT_LE((sequential_probabilities(s) - expect).cwiseAbs().maxCoeff(), 1e-10) << inst.name;
        if (inst.kind == VerifyInstance::Kind::cp) {
            const CPRowSampler cp(inst.factors, inst.excluded);
            EXPECT_LE((sequential_probabilities(cp) - expect).cwiseAbs().maxCoeff(), 1e-10) << inst.name;
        }
    }
}

TEST(Sampler, PhiRankMatchesOracle) {
    for (const auto& inst : instances())
        EXPECT_EQ(compute_phi(inst.a).rank, oracle::leverage(materialize(inst.a)).second) << inst.name;
}

TEST(Sampler, FastGramsMatchDense) {
    for (const auto& inst : instances()) {
        const DenseMatrix m = materialize(inst.a);
        const DenseMatrix g = m.transpose() * m;
        if (inst.kind == VerifyInstance::Kind::cp)
            EXPECT_TRUE(CPRowSampler(inst.factors, inst.excluded).gram().isApprox(g, 1e-12)) << inst.name;
        if (inst.kind == VerifyInstance::Kind::tr)
            EXPECT_TRUE(tr_gram_fast(inst.cores, inst.excluded).isApprox(g, 1e-12)) << inst.name;
    }
}

TEST(Sampler, CpFastConditionalMatchesGeneric) {
    for (const auto& inst : instances()) {
        if (inst.kind != VerifyInstance::Kind::cp) continue;
        const PhiMatrix phi = compute_phi(inst.a);
        const std::vector<Index> prefix{2};
        const auto generic = conditional_distribution(inst.a, phi, prefix);
        const auto fast = cp_conditional_fast(inst.factors, phi, inst.excluded, prefix);
        ASSERT_EQ(generic.size(), fast.size());
        for (std::size_t k = 0; k < fast.size(); ++k) EXPECT_NEAR(generic[k], fast[k], 1e-12);
    }
}

TEST(Sampler, CpRowsMatchDesign) {
    const auto& inst = instances().front();
    const CPRowSampler cp(inst.factors, inst.excluded);
    const DenseMatrix m = materialize(inst.a);
    const Dims& ext = cp.row_extents();
    for (Index l = 1; l <= m.rows(); ++l)
        EXPECT_TRUE(cp.row(multi_index(l, ext)).isApprox(Eigen::VectorXd(m.row(l - 1).transpose()), 1e-12));
}

TEST(Sampler, ZeroPrefix) {
    DenseTensor a = random_normal({2, 3, 2}, 4);
    for (Index j = 0; j < 3; ++j)
        for (Index c = 0; c < 2; ++c) a.at(std::vector<Index>{1, j, c}) = 0.0;
    TensorNetwork net;
    net.add_node("A", a);
    net.add_dangling("i", {"A", 0});
    net.add_dangling("j", {"A", 1});
    net.add_dangling("c", {"A", 2});
    const TNMatrix m(net, {"i", "j"}, {"c"});
    const PhiMatrix phi = compute_phi(m);
    EXPECT_NEAR(conditional_distribution(m, phi, std::vector<Index>{})[1], 0.0, 1e-15);
    EXPECT_THROW(conditional_distribution(m, phi, std::vector<Index>{2}), ZeroPrefixError);
}

TEST(Sampler, SampleSize) {
    EXPECT_EQ(sample_size(3, 0.5, 0.2, 1.0), 30);
    // log(100 / 0.5) > 1 / (0.9 * 0.5): the log term decides, then the R + 1 floor.
    EXPECT_EQ(sample_size(100, 0.9, 0.5, 1.0), static_cast<Index>(std::ceil(100 * std::log(200.0))));
    EXPECT_EQ(sample_size(1, 0.99, 0.99, 0.01), 2);
    EXPECT_EQ(sample_size(3, 0.5, 0.2, 2.0), 60);
    EXPECT_THROW(sample_size(0, 0.5, 0.2), ParamError);
    EXPECT_THROW(sample_size(3, 1.0, 0.2), ParamError);
    EXPECT_THROW(sample_size(3, 0.5, 0.0), ParamError);
    EXPECT_THROW(sample_size(3, 0.5, 0.2, 0.0), ParamError);
}

TEST(Sampler, DrawsAreDeterministicAndWeighted) {
    const TNMatrix a = small_design(5);
    const PhiMatrix phi = compute_phi(a);
    const Eigen::VectorXd p = oracle_distribution(a);
    const SketchSpec s1 = draw_samples(a, phi, 50, 42);
    const SketchSpec s2 = draw_samples(a, phi, 50, 42);
    const SketchSpec s3 = draw_samples(a, phi, 50, 43);
    ASSERT_EQ(s1.size(), 50);
    bool differs = false;
    for (Index j = 0; j < 50; ++j) {
        const auto& d = s1.draws[static_cast<std::size_t>(j)];
        EXPECT_EQ(d.multi, s2.draws[static_cast<std::size_t>(j)].multi);
        EXPECT_EQ(d.linear, linear_index(d.multi, a.row_extents()));
        EXPECT_NEAR(d.prob, p[d.linear - 1], 1e-12);
        EXPECT_NEAR(s1.weights[static_cast<std::size_t>(j)], 1.0 / std::sqrt(50.0 * d.prob), 1e-12);
        differs = differs || d.linear != s3.draws[static_cast<std::size_t>(j)].linear;
    }
    EXPECT_TRUE(differs);
    // A prefix of draws does not depend on the total count.
    const SketchSpec shorter = draw_samples(a, phi, 10, 42);
    for (Index j = 0; j < 10; ++j)
        EXPECT_EQ(shorter.draws[static_cast<std::size_t>(j)].linear, s1.draws[static_cast<std::size_t>(j)].linear);
    EXPECT_THROW(draw_samples(a, phi, 0, 1), ParamError);
}

TEST(Sampler, EmpiricalFrequencies) {
    const TNMatrix a = small_design(6);
    const PhiMatrix phi = compute_phi(a);
    const Eigen::VectorXd p = oracle_distribution(a);
    constexpr Index n = 40000;
    const SketchSpec s = draw_samples(a, phi, n, 7);
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(p.size());
    for (const auto& d : s.draws) counts[d.linear - 1] += 1.0;
    for (Index i = 0; i < p.size(); ++i) {
        const double sd = std::sqrt(n * p[i] * (1.0 - p[i]));
        EXPECT_LE(std::abs(counts[i] - n * p[i]), 5.0 * sd + 1.0) << "row " << i;
    }
}

TEST(Sampler, ApplySketch) {
    const TNMatrix a = small_design(8);
    const PhiMatrix phi = compute_phi(a);
    const DenseMatrix m = materialize(a);
    const DenseMatrix x = DenseMatrix::Random(m.rows(), 2);
    const SketchSpec s = draw_samples(a, phi, 20, 9);
    const auto [sa, sx] = apply_sketch(s, a, x);
    for (Index j = 0; j < 20; ++j) {
        const auto& d = s.draws[static_cast<std::size_t>(j)];
        const double w = s.weights[static_cast<std::size_t>(j)];
        EXPECT_TRUE(sa.row(j).isApprox(w * m.row(d.linear - 1), 1e-12));
        EXPECT_TRUE(sx.row(j).isApprox(w * x.row(d.linear - 1), 1e-12));
    }
    EXPECT_THROW(apply_sketch(s, a, DenseMatrix::Zero(3, 2)), ShapeError);
}

TEST(Sampler, BruteForceLeverageSumsToRank) {
    const DenseMatrix f = DenseMatrix::Random(10, 2);
    const DenseMatrix a = f * DenseMatrix::Random(2, 4);
    const Eigen::VectorXd l = leverage_scores_bruteforce(a);
    EXPECT_NEAR(l.sum(), 2.0, 1e-10);
    EXPECT_LE((l - oracle::leverage(a).first).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Sampler, StreamSeedsDiffer) {
    std::set<std::uint64_t> seen;
    for (std::uint64_t a = 0; a < 20; ++a)
        for (std::uint64_t b = 0; b < 20; ++b) seen.insert(stream_seed(1, a, b));
    EXPECT_EQ(seen.size(), 400u);
    EXPECT_EQ(stream_seed(5, 1, 2, 3), stream_seed(5, 1, 2, 3));
    EXPECT_NE(stream_seed(5, 1, 2, 3), stream_seed(6, 1, 2, 3));
}
