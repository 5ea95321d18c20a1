#include <gtest/gtest.h>

#include <algorithm>

#include "oracles.hpp"
#include "tns/verify.hpp"

using namespace tns;

namespace {

bool has_kind(const std::vector<Violation>& v, Violation::Kind k) {
    return std::any_of(v.begin(), v.end(), [&](const Violation& x) { return x.kind == k; });
}

TensorNetwork triangle(std::uint64_t seed) {
    TensorNetwork net;
    net.add_node("A", random_normal({3, 2, 4}, seed));
    net.add_node("B", random_normal({2, 5, 3}, seed + 1));
    net.add_node("C", random_normal({3, 4, 2}, seed + 2));
    net.add_bond({"A", 1}, {"B", 0});
    net.add_bond({"B", 2}, {"C", 0});
    net.add_bond({"C", 1}, {"A", 2});
    net.add_dangling("i", {"A", 0});
    net.add_dangling("k", {"C", 2});
    net.add_dangling("j", {"B", 1});
    return net;
}

void expect_close(const DenseTensor& a, const DenseTensor& b, double tol = 1e-12) {
    ASSERT_EQ(a.dims(), b.dims());
    const double scale = std::max(1.0, b.values().cwiseAbs().maxCoeff());
    EXPECT_LE((a.values() - b.values()).cwiseAbs().maxCoeff(), tol * scale);
}

}  // namespace

TEST(Contract, TriangleMatchesBruteForce) {
    const auto net = triangle(1);
    expect_close(contract(net), oracle::contract(net));
}

TEST(Contract, SelfBondIsTraced) {
    TensorNetwork net;
    net.add_node("A", random_normal({3, 4, 3}, 2));
    net.add_node("B", random_normal({4, 2}, 3));
    net.add_bond({"A", 0}, {"A", 2});
    net.add_bond({"A", 1}, {"B", 0});
    net.add_dangling("j", {"B", 1});
    expect_close(contract(net), oracle::contract(net));
}

TEST(Contract, OuterProductAndScalar) {
    TensorNetwork outer;
    outer.add_node("A", random_normal({2, 3}, 4));
    outer.add_node("B", random_normal({4}, 5));
    outer.add_dangling("b", {"B", 0});
    outer.add_dangling("a0", {"A", 0});
    outer.add_dangling("a1", {"A", 1});
    expect_close(contract(outer), oracle::contract(outer));

    TensorNetwork scalar;
    scalar.add_node("A", random_normal({3, 2}, 6));
    scalar.add_node("B", random_normal({2, 3}, 7));
    scalar.add_bond({"A", 0}, {"B", 1});
    scalar.add_bond({"A", 1}, {"B", 0});
    const auto s = contract(scalar);
    EXPECT_EQ(s.order(), 0);
    expect_close(s, oracle::contract(scalar));
}

TEST(Contract, PlansAgree) {
    const auto net = triangle(8);
    const auto greedy = greedy_plan(net);
    EXPECT_EQ(greedy.steps.size(), 2u);
    EXPECT_EQ(greedy_plan(net).steps, greedy.steps);
    const ContractionPlan other{{{"C", "B"}, {"C", "A"}}};
    expect_close(contract(net, other), contract(net, greedy));
}

TEST(Contract, BadPlans) {
    const auto net = triangle(9);
    EXPECT_THROW(contract(net, ContractionPlan{{{"A", "A"}}}), PlanError);
    EXPECT_THROW(contract(net, ContractionPlan{{{"A", "B"}}}), PlanError);
    EXPECT_THROW(contract(net, ContractionPlan{{{"A", "B"}, {"B", "C"}}}), PlanError);
    EXPECT_THROW(contract(net, ContractionPlan{{{"A", "B"}, {"A", "Z"}}}), PlanError);
}

TEST(Validate, ReportsEachProblem) {
    TensorNetwork net;
    net.add_node("A", random_normal({2, 3}, 1));
    net.add_node("B", random_normal({4, 5}, 2));
    net.add_bond({"A", 1}, {"B", 0});
    net.add_dangling("x", {"A", 0});
    net.add_dangling("x", {"A", 0});
    net.add_dangling("y", {"Q", 0});
    const auto v = validate(net);
    EXPECT_TRUE(has_kind(v, Violation::Kind::DimensionMismatch));
    EXPECT_TRUE(has_kind(v, Violation::Kind::DuplicateLabel));
    EXPECT_TRUE(has_kind(v, Violation::Kind::DuplicateSlot));
    EXPECT_TRUE(has_kind(v, Violation::Kind::OrphanSlot));
    EXPECT_TRUE(has_kind(v, Violation::Kind::UnknownSlot));
    EXPECT_THROW(contract(net), ShapeError);
    EXPECT_TRUE(validate(triangle(1)).empty());
}

TEST(Validate, DuplicateNode) {
    TensorNetwork net;
    net.add_node("A", DenseTensor({2}));
    EXPECT_THROW(net.add_node("A", DenseTensor({2})), FormatError);
}

TEST(FixIndex, EqualsSliceOfContraction) {
    const auto net = triangle(10);
    const auto full = contract(net);
    const auto fixed = fix_index(net, "j", 3);
    EXPECT_EQ(fixed.dangling_labels(), (std::vector<std::string>{"i", "k"}));
    expect_close(contract(fixed), slice(full, 2, 2));
    EXPECT_THROW(fix_index(net, "k", 3), IndexError);
    EXPECT_THROW(fix_index(net, "zz", 1), IndexError);
}

TEST(TNMatrix, MaterializeOrdersRowsAndColumns) {
    const auto net = triangle(11);
    const TNMatrix a(net, {"j", "i"}, {"k"});
    const DenseMatrix m = materialize(a);
    ASSERT_EQ(m.rows(), 15);
    ASSERT_EQ(m.cols(), 2);
    const auto full = oracle::contract(net);  // modes (i, k, j)
    for (Index i = 0; i < 3; ++i)
        for (Index j = 0; j < 5; ++j)
            for (Index k = 0; k < 2; ++k) EXPECT_NEAR(m(j + 5 * i, k), full.at(std::vector<Index>{i, k, j}), 1e-12);
    EXPECT_THROW(materialize(a, 10), TooLargeError);
}

TEST(TNMatrix, GramMatchesDense) {
    const TNMatrix a(triangle(12), {"i", "j"}, {"k"});
    const DenseMatrix m = materialize(a);
    EXPECT_TRUE(gram_matrix(a).isApprox(m.transpose() * m, 1e-12));
}

TEST(TNMatrix, MarginalNetworkDiagonal) {
    const TNMatrix a(triangle(13), {"i", "j"}, {"k"});
    const DenseMatrix m = materialize(a);
    const DenseMatrix phi = (m.transpose() * m).inverse();
    const std::vector<Index> prefix{2};
    const auto t = contract(marginal_network(a, phi, prefix, 2));
    ASSERT_EQ(t.dims(), (Dims{5, 5}));
    const DenseMatrix h = m * phi * m.transpose();
    for (Index j = 0; j < 5; ++j) EXPECT_NEAR(t.at(std::vector<Index>{j, j}), h(1 + 3 * j, 1 + 3 * j), 1e-12);
}

TEST(TNMatrix, RowNetwork) {
    const TNMatrix a(triangle(14), {"i", "j"}, {"k"});
    const DenseMatrix m = materialize(a);
    const std::vector<Index> multi{3, 4};
    const auto r = contract(row_network(a, multi));
    EXPECT_TRUE(Eigen::VectorXd(r.values()).isApprox(Eigen::VectorXd(m.row(2 + 3 * 3).transpose()), 1e-12));
}
