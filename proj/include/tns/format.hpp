#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "tns/network.hpp"

namespace tns {

struct FormatNode {
    std::string id;
    Index n_modes = 0;
};

/// Topology template of a decomposition: nodes, rank bonds, which node mode
/// carries each data mode, and nodes held fixed as superdiagonal ones (the CP
/// weight tensor). Node declaration order is the ALS update order.
struct TNFormat {
    std::vector<FormatNode> nodes;
    /// Extents of bonded slots. Data-mode slots take their extent from the data.
    std::map<Slot, Index> extents;
    std::vector<std::pair<Slot, Slot>> bonds;
    /// data_modes[d] is the slot carrying data mode d.
    std::vector<Slot> data_modes;
    std::set<std::string> fixed_diagonal;

    Index order() const { return static_cast<Index>(data_modes.size()); }
    bool is_fixed(const std::string& id) const { return fixed_diagonal.count(id) != 0; }
    /// Nodes updated by ALS, in declaration order.
    std::vector<std::string> update_order() const;
};

using NodeTensors = std::map<std::string, DenseTensor>;

/// Throws FormatError when the format is inconsistent.
void check_format(const TNFormat& format);

/// Parses the JSON format description:
///   { "nodes": [{"id": "A", "n_modes": 2}, ...],
///     "extents": {"A.1": 3, ...},
///     "bonds": [["A.1", "L.0"], ...],
///     "data_modes": ["A.0", ...],
///     "fixed_diagonal": ["L"] }
/// Modes are 0-based; data_modes is indexed by data mode.
TNFormat parse_format(const std::string& text);
TNFormat load_format(const std::filesystem::path& path);
std::string format_to_json(const TNFormat& format);

/// CP of an order-N tensor: factors A1..AN (I_n x R) bonded to a fixed
/// superdiagonal weight node L (R x ... x R).
TNFormat cp_format(Index order, Index rank);

/// Tensor ring: cores G1..GN of shape ranks[n-1] x I_n x ranks[n] (cyclic),
/// where ranks[n] is the extent of the bond between G_n and G_{n+1}.
TNFormat tr_format(Index order, std::span<const Index> ranks);

/// Node shapes once the data extents are known.
std::map<std::string, Dims> node_shapes(const TNFormat& format, std::span<const Index> data_dims);

/// Superdiagonal tensor with ones on the diagonal.
DenseTensor superdiagonal(const Dims& dims);

/// Network of the full decomposition; dangling label "x<d>" carries data mode d.
TensorNetwork format_network(const TNFormat& format, const NodeTensors& tensors);

std::string data_label(Index d);

/// Parses "node.mode". Throws FormatError.
Slot parse_slot(const std::string& s);

/// How one ALS subproblem lines up data, design and the updated node.
struct SubproblemLayout {
    std::string node;
    /// Data modes not owned by the node (design rows), ascending.
    std::vector<Index> row_data_modes;
    /// Data modes owned by the node (unfolding columns), ascending.
    std::vector<Index> col_data_modes;
    /// Node modes bonded elsewhere, in node mode order (design columns).
    std::vector<Index> node_bond_modes;
    /// Node modes carrying data, ordered like col_data_modes.
    std::vector<Index> node_data_modes;
};

SubproblemLayout subproblem_layout(const TNFormat& format, const std::string& node);

/// Design matrix of the subproblem for `node`: every other node, rows are the
/// data modes it does not own (ascending), columns are the slots that were
/// bonded to it (in its mode order).
TNMatrix design_network(const TNFormat& format, const NodeTensors& tensors, const std::string& node);

}  // namespace tns
