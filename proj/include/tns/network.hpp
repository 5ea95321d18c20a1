#pragma once

#include <compare>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tns/tensor.hpp"

namespace tns {

/// A mode of a node: (node id, 0-based mode).
struct Slot {
    std::string node;
    Index mode = 0;

    auto operator<=>(const Slot&) const = default;
};

std::string to_string(const Slot& s);

struct Bond {
    Slot a;
    Slot b;
};

struct Dangling {
    std::string label;
    Slot slot;
};

struct Violation {
    enum class Kind { DimensionMismatch, DuplicateSlot, OrphanSlot, DuplicateLabel, UnknownSlot };
    Kind kind;
    std::string message;
};

/// Tensors joined by bonds (contracted mode pairs) with an ordered list of
/// dangling (free) modes. Self-bonds are allowed.
class TensorNetwork {
public:
    void add_node(const std::string& id, DenseTensor t);
    void add_bond(Slot a, Slot b);
    void add_dangling(const std::string& label, Slot slot);

    /// Replaces two dangling labels with a bond between their slots.
    void connect(const std::string& label_a, const std::string& label_b);
    /// Removes a dangling label and returns its slot.
    Slot take_dangling(const std::string& label);
    /// Disjoint union; node ids and labels must not clash.
    void absorb(const TensorNetwork& other);
    /// Reorders the dangling list; `labels` must be a permutation of it.
    void reorder_dangling(std::span<const std::string> labels);

    /// Copy with every node id and label suffixed.
    TensorNetwork renamed(const std::string& suffix) const;

    const std::map<std::string, DenseTensor>& nodes() const { return nodes_; }
    const std::vector<Bond>& bonds() const { return bonds_; }
    const std::vector<Dangling>& dangling() const { return dangling_; }

    const DenseTensor& node(const std::string& id) const;
    Index extent(const Slot& s) const;
    std::optional<Slot> find_dangling(const std::string& label) const;
    std::vector<std::string> dangling_labels() const;
    Dims dangling_extents() const;

private:
    friend TensorNetwork fix_index(const TensorNetwork&, const std::string&, Index);

    std::map<std::string, DenseTensor> nodes_;
    std::vector<Bond> bonds_;
    std::vector<Dangling> dangling_;
};

/// All structural problems of a network; empty means valid.
std::vector<Violation> validate(const TensorNetwork& net);

/// Pairwise merge sequence. Step (a, b) contracts b into a; the result keeps id a.
struct ContractionPlan {
    std::vector<std::pair<std::string, std::string>> steps;
};

/// Greedy plan: repeatedly merge the pair with the smallest pairwise flop
/// count (product of all extents involved); ties go to the lexicographically
/// smallest id pair. Pairs without a shared bond are only considered once no
/// bonded pair is left.
ContractionPlan greedy_plan(const TensorNetwork& net);

/// Contracts the network. The result has one mode per dangling label, in
/// dangling order.
DenseTensor contract(const TensorNetwork& net, const std::optional<ContractionPlan>& plan = std::nullopt);

/// Slices the slot behind `label` at the 1-based `value`; the mode is removed
/// from its node and the label from the dangling list.
TensorNetwork fix_index(const TensorNetwork& net, const std::string& label, Index value);

/// A network whose dangling labels are split into ordered row and column groups.
struct TNMatrix {
    TNMatrix() = default;
    /// Reorders the network's dangling list to rows then columns.
    TNMatrix(TensorNetwork network, std::vector<std::string> rows, std::vector<std::string> cols);

    TensorNetwork net;
    std::vector<std::string> row_labels;
    std::vector<std::string> col_labels;

    Dims row_extents() const;
    Dims col_extents() const;
    Index rows() const { return num_entries(row_extents()); }
    Index cols() const { return num_entries(col_extents()); }
};

inline constexpr Index default_materialize_limit = Index{1} << 27;

/// Dense form of a TN matrix.
DenseMatrix materialize(const TNMatrix& a, Index max_entries = default_materialize_limit);

/// Network contracting to A^T A: A bonded to a mirror copy along every row
/// label. Dangling order: original columns, then mirror columns.
TensorNetwork gram_network(const TNMatrix& a);

/// Contracts gram_network(a) into an R x R matrix.
DenseMatrix gram_matrix(const TNMatrix& a);

/// Network for the joint marginals of the n-th (1-based) row index given the
/// 1-based prefix i_1..i_{n-1}: A Phi A^T with the prefix fixed on both sides
/// and row positions n+1..N_r summed. Two dangling modes remain (original and
/// mirror copy of row position n); the diagonal of the contraction is
/// rho * P(i_1, ..., i_n).
TensorNetwork marginal_network(const TNMatrix& a, const DenseMatrix& phi, std::span<const Index> prefix, Index n);

/// Fixes every row label; contracting gives the row (column-label order).
TensorNetwork row_network(const TNMatrix& a, std::span<const Index> multi);

/// Suffix used for mirror copies in gram and marginal networks.
inline const std::string mirror_suffix = "'";

}  // namespace tns
