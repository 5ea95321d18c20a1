#include <gtest/gtest.h>

#include "oracles.hpp"
#include "tns/verify.hpp"

using namespace tns;

namespace {

const char* tucker_json = R"({
  "nodes": [{"id": "U1", "n_modes": 2}, {"id": "U2", "n_modes": 2}, {"id": "G", "n_modes": 2}],
  "extents": {"U1.1": 2, "U2.1": 3},
  "bonds": [["U1.1", "G.0"], ["U2.1", "G.1"]],
  "data_modes": ["U1.0", "U2.0"]
})";

NodeTensors random_tensors(const TNFormat& f, const Dims& dims, std::uint64_t seed) {
    NodeTensors out;
    std::uint64_t k = 0;
    for (const auto& [id, shape] : node_shapes(f, dims))
        out.emplace(id, f.is_fixed(id) ? superdiagonal(shape) : random_normal(shape, seed + 10 * k++));
    return out;
}

}  // namespace

TEST(Format, ParseAndRoundTrip) {
    const TNFormat f = parse_format(tucker_json);
    EXPECT_EQ(f.order(), 2);
    EXPECT_EQ(f.extents.at(Slot{"G", 1}), 3);
    EXPECT_EQ(f.update_order(), (std::vector<std::string>{"U1", "U2", "G"}));
    const TNFormat g = parse_format(format_to_json(f));
    EXPECT_EQ(g.extents, f.extents);
    EXPECT_EQ(g.data_modes, f.data_modes);
    EXPECT_EQ(g.bonds, f.bonds);
}

TEST(Format, DataModesAsObject) {
    const TNFormat f = parse_format(R"({
      "nodes": [{"id": "A", "n_modes": 2}, {"id": "B", "n_modes": 2}],
      "extents": {"A.1": 2}, "bonds": [["A.1", "B.0"]],
      "data_modes": {"1": "B.1", "0": "A.0"}})");
    EXPECT_EQ(f.data_modes, (std::vector<Slot>{{"A", 0}, {"B", 1}}));
}

TEST(Format, Errors) {
    EXPECT_THROW(parse_format("{not json"), ParseError);
    EXPECT_THROW(parse_format(R"({"nodes": [{"id": "A", "n_modes": 1}], "data_modes": ["B.0"]})"), FormatError);
    EXPECT_THROW(parse_format(R"({"nodes": [{"id": "A", "n_modes": 2}], "data_modes": ["A.0"]})"), FormatError);
    EXPECT_THROW(parse_format(R"({"nodes": [{"id": "A", "n_modes": 1}], "data_modes": ["A.x"]})"), FormatError);
    EXPECT_THROW(parse_format(R"({"nodes": [{"id": "A", "n_modes": 2}, {"id": "B", "n_modes": 2}],
      "extents": {"A.1": 2, "B.0": 3}, "bonds": [["A.1", "B.0"]], "data_modes": ["A.0", "B.1"]})"),
                 FormatError);
}

TEST(Format, SlotParsing) {
    EXPECT_EQ(parse_slot("node.3"), (Slot{"node", 3}));
    EXPECT_EQ(parse_slot("a.b.1"), (Slot{"a.b", 1}));
    EXPECT_THROW(parse_slot("node"), FormatError);
    EXPECT_THROW(parse_slot(".1"), FormatError);
}

TEST(Format, CpNetworkMatchesOracle) {
    const Dims dims{3, 4, 5};
    const TNFormat f = cp_format(3, 2);
    EXPECT_TRUE(f.is_fixed("L"));
    const NodeTensors t = random_tensors(f, dims, 1);
    const DenseTensor model = contract(format_network(f, t));
    const DenseTensor expect = oracle::cp_full(cp_factors(f, t));
    EXPECT_LE((model.values() - expect.values()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Format, TrNetworkMatchesOracle) {
    const Dims dims{3, 4, 2, 3};
    const std::vector<Index> ranks{2, 3, 2, 1};
    const TNFormat f = tr_format(4, ranks);
    const NodeTensors t = random_tensors(f, dims, 2);
    EXPECT_EQ(t.at("G2").dims(), (Dims{2, 4, 3}));
    EXPECT_EQ(t.at("G1").dims(), (Dims{1, 3, 2}));
    const DenseTensor model = contract(format_network(f, t));
    const DenseTensor expect = oracle::tr_full(tr_cores(f, t));
    EXPECT_LE((model.values() - expect.values()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Format, NodeShapesCheckDataOrder) {
    EXPECT_THROW(node_shapes(cp_format(3, 2), Dims{3, 4}), FormatError);
}

TEST(Format, Superdiagonal) {
    const auto d = superdiagonal({3, 3, 3});
    EXPECT_EQ(d.values().sum(), 3.0);
    EXPECT_EQ(d.at(std::vector<Index>{1, 1, 1}), 1.0);
}

// The design matrix times the unfolded node equals the unfolded model tensor
// under the row/column layout shared by exact and sampled updates.
TEST(Format, DesignTimesNodeIsModelUnfolding) {
    struct Case {
        TNFormat f;
        Dims dims;
    };
    const std::vector<Index> ranks{2, 3, 2};
    std::vector<Case> cases{{cp_format(3, 2), {3, 4, 5}}, {tr_format(3, ranks), {3, 4, 5}},
                            {parse_format(tucker_json), {4, 3}}};
    for (const auto& c : cases) {
        const NodeTensors t = random_tensors(c.f, c.dims, 3);
        const DenseTensor model = contract(format_network(c.f, t));
        for (const auto& node : c.f.update_order()) {
            const auto layout = subproblem_layout(c.f, node);
            const DenseMatrix a = materialize(design_network(c.f, t, node));
            const DenseMatrix b = unfold(t.at(node), layout.node_bond_modes, layout.node_data_modes);
            std::vector<Index> rows = layout.row_data_modes, cols = layout.col_data_modes;
            const DenseMatrix x = unfold(model, rows, cols);
            EXPECT_LE((a * b - x).cwiseAbs().maxCoeff(), 1e-11) << node;
        }
    }
}

TEST(Format, SubproblemLayout) {
    const auto l = subproblem_layout(cp_format(4, 3), "A3");
    EXPECT_EQ(l.row_data_modes, (std::vector<Index>{0, 1, 3}));
    EXPECT_EQ(l.col_data_modes, (std::vector<Index>{2}));
    EXPECT_EQ(l.node_bond_modes, (std::vector<Index>{1}));
    EXPECT_EQ(l.node_data_modes, (std::vector<Index>{0}));
}
