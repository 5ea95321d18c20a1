#include "tns/network.hpp"

#include <algorithm>
#include <set>

namespace tns {

std::string to_string(const Slot& s) { return s.node + "." + std::to_string(s.mode); }

// ---------------------------------------------------------------------------
// TensorNetwork

void TensorNetwork::add_node(const std::string& id, DenseTensor t) {
    if (!nodes_.emplace(id, std::move(t)).second) throw FormatError("duplicate node id '" + id + "'");
}

void TensorNetwork::add_bond(Slot a, Slot b) { bonds_.push_back({std::move(a), std::move(b)}); }

void TensorNetwork::add_dangling(const std::string& label, Slot slot) {
    dangling_.push_back({label, std::move(slot)});
}

Slot TensorNetwork::take_dangling(const std::string& label) {
    auto it = std::find_if(dangling_.begin(), dangling_.end(), [&](const Dangling& d) { return d.label == label; });
    if (it == dangling_.end()) throw IndexError("no dangling label '" + label + "'");
    Slot s = it->slot;
    dangling_.erase(it);
    return s;
}

void TensorNetwork::connect(const std::string& label_a, const std::string& label_b) {
    Slot a = take_dangling(label_a);
    Slot b = take_dangling(label_b);
    add_bond(std::move(a), std::move(b));
}

void TensorNetwork::absorb(const TensorNetwork& other) {
    for (const auto& [id, t] : other.nodes_) add_node(id, t);
    bonds_.insert(bonds_.end(), other.bonds_.begin(), other.bonds_.end());
    for (const auto& d : other.dangling_) {
        if (find_dangling(d.label)) throw FormatError("duplicate dangling label '" + d.label + "'");
        dangling_.push_back(d);
    }
}

void TensorNetwork::reorder_dangling(std::span<const std::string> labels) {
    if (labels.size() != dangling_.size()) throw ModeError("reorder_dangling: label count mismatch");
    std::vector<Dangling> out;
    out.reserve(labels.size());
    for (const auto& l : labels) {
        auto s = find_dangling(l);
        if (!s) throw ModeError("reorder_dangling: unknown label '" + l + "'");
        if (std::any_of(out.begin(), out.end(), [&](const Dangling& d) { return d.label == l; }))
            throw ModeError("reorder_dangling: label '" + l + "' repeated");
        out.push_back({l, *s});
    }
    dangling_ = std::move(out);
}

TensorNetwork TensorNetwork::renamed(const std::string& suffix) const {
    TensorNetwork out;
    for (const auto& [id, t] : nodes_) out.nodes_.emplace(id + suffix, t);
    for (const auto& b : bonds_)
        out.bonds_.push_back({{b.a.node + suffix, b.a.mode}, {b.b.node + suffix, b.b.mode}});
    for (const auto& d : dangling_) out.dangling_.push_back({d.label + suffix, {d.slot.node + suffix, d.slot.mode}});
    return out;
}

const DenseTensor& TensorNetwork::node(const std::string& id) const {
    auto it = nodes_.find(id);
    if (it == nodes_.end()) throw IndexError("unknown node '" + id + "'");
    return it->second;
}

Index TensorNetwork::extent(const Slot& s) const {
    const auto& t = node(s.node);
    if (s.mode < 0 || s.mode >= t.order()) throw IndexError("slot " + to_string(s) + " out of range");
    return t.dim(s.mode);
}

std::optional<Slot> TensorNetwork::find_dangling(const std::string& label) const {
    for (const auto& d : dangling_)
        if (d.label == label) return d.slot;
    return std::nullopt;
}

std::vector<std::string> TensorNetwork::dangling_labels() const {
    std::vector<std::string> out;
    for (const auto& d : dangling_) out.push_back(d.label);
    return out;
}

Dims TensorNetwork::dangling_extents() const {
    Dims out;
    for (const auto& d : dangling_) out.push_back(extent(d.slot));
    return out;
}

std::vector<Violation> validate(const TensorNetwork& net) {
    std::vector<Violation> out;
    std::map<Slot, int> uses;
    auto known = [&](const Slot& s) {
        auto it = net.nodes().find(s.node);
        if (it == net.nodes().end() || s.mode < 0 || s.mode >= it->second.order()) {
            out.push_back({Violation::Kind::UnknownSlot, "slot " + to_string(s) + " does not exist"});
            return false;
        }
        return true;
    };
    for (const auto& b : net.bonds()) {
        const bool ka = known(b.a);
        const bool kb = known(b.b);
        if (ka) ++uses[b.a];
        if (kb) ++uses[b.b];
        if (ka && kb && net.extent(b.a) != net.extent(b.b))
            out.push_back({Violation::Kind::DimensionMismatch,
                           "bond " + to_string(b.a) + " <-> " + to_string(b.b) + " joins extents " +
                               std::to_string(net.extent(b.a)) + " and " + std::to_string(net.extent(b.b))});
    }
    std::set<std::string> labels;
    for (const auto& d : net.dangling()) {
        if (known(d.slot)) ++uses[d.slot];
        if (!labels.insert(d.label).second)
            out.push_back({Violation::Kind::DuplicateLabel, "dangling label '" + d.label + "' repeated"});
    }
    for (const auto& [id, t] : net.nodes())
        for (Index m = 0; m < t.order(); ++m) {
            const Slot s{id, m};
            const int n = uses.count(s) ? uses[s] : 0;
            if (n == 0)
                out.push_back({Violation::Kind::OrphanSlot, "slot " + to_string(s) + " is neither bonded nor dangling"});
            else if (n > 1)
                out.push_back({Violation::Kind::DuplicateSlot, "slot " + to_string(s) + " used " + std::to_string(n) + " times"});
        }
    return out;
}

// ---------------------------------------------------------------------------
// Contraction

namespace {

/// Edge ids: bonds first (0..B-1), then dangling entries (B..B+D-1).
struct EdgeTable {
    std::map<std::string, std::vector<int>> node_edges;
    std::vector<Index> extents;
};

EdgeTable edge_table(const TensorNetwork& net) {
    EdgeTable tab;
    for (const auto& [id, t] : net.nodes()) tab.node_edges[id].assign(static_cast<std::size_t>(t.order()), -1);
    int next = 0;
    for (const auto& b : net.bonds()) {
        tab.node_edges[b.a.node][static_cast<std::size_t>(b.a.mode)] = next;
        tab.node_edges[b.b.node][static_cast<std::size_t>(b.b.mode)] = next;
        tab.extents.push_back(net.extent(b.a));
        ++next;
    }
    for (const auto& d : net.dangling()) {
        tab.node_edges[d.slot.node][static_cast<std::size_t>(d.slot.mode)] = next;
        tab.extents.push_back(net.extent(d.slot));
        ++next;
    }
    return tab;
}

void require_valid(const TensorNetwork& net) {
    auto v = validate(net);
    if (!v.empty()) throw ShapeError("invalid tensor network: " + v.front().message);
}

std::vector<int> distinct_edges(const std::vector<int>& edges) {
    std::vector<int> out;
    for (int e : edges)
        if (std::count(edges.begin(), edges.end(), e) == 1) out.push_back(e);
    return out;
}

double merge_cost(const std::vector<int>& a, const std::vector<int>& b, const std::vector<Index>& extents) {
    std::set<int> all(a.begin(), a.end());
    all.insert(b.begin(), b.end());
    double cost = 1.0;
    for (int e : all) cost *= static_cast<double>(extents[static_cast<std::size_t>(e)]);
    return cost;
}

bool shares_edge(const std::vector<int>& a, const std::vector<int>& b) {
    return std::any_of(a.begin(), a.end(), [&](int e) { return std::find(b.begin(), b.end(), e) != b.end(); });
}

std::vector<int> merged_edges(const std::vector<int>& a, const std::vector<int>& b) {
    std::vector<int> out;
    for (int e : a)
        if (std::find(b.begin(), b.end(), e) == b.end()) out.push_back(e);
    for (int e : b)
        if (std::find(a.begin(), a.end(), e) == a.end()) out.push_back(e);
    return out;
}

struct Work {
    DenseTensor t;
    std::vector<int> edges;
};

Work trace_self_bonds(Work w) {
    for (;;) {
        bool found = false;
        for (std::size_t i = 0; i < w.edges.size() && !found; ++i)
            for (std::size_t j = i + 1; j < w.edges.size() && !found; ++j)
                if (w.edges[i] == w.edges[j]) {
                    w.t = trace(w.t, static_cast<Index>(i), static_cast<Index>(j));
                    w.edges.erase(w.edges.begin() + static_cast<std::ptrdiff_t>(j));
                    w.edges.erase(w.edges.begin() + static_cast<std::ptrdiff_t>(i));
                    found = true;
                }
        if (!found) return w;
    }
}

Work merge(const Work& a, const Work& b) {
    std::vector<int> shared;
    for (int e : a.edges)
        if (std::find(b.edges.begin(), b.edges.end(), e) != b.edges.end()) shared.push_back(e);
    std::sort(shared.begin(), shared.end());

    auto pos = [](const std::vector<int>& edges, int e) {
        return static_cast<Index>(std::find(edges.begin(), edges.end(), e) - edges.begin());
    };
    std::vector<Index> perm_a, perm_b;
    std::vector<int> out_edges;
    Dims out_dims;
    Index rows = 1, inner = 1, cols = 1;
    for (std::size_t k = 0; k < a.edges.size(); ++k)
        if (!std::binary_search(shared.begin(), shared.end(), a.edges[k])) {
            perm_a.push_back(static_cast<Index>(k));
            out_edges.push_back(a.edges[k]);
            out_dims.push_back(a.t.dim(static_cast<Index>(k)));
            rows *= a.t.dim(static_cast<Index>(k));
        }
    for (int e : shared) {
        perm_a.push_back(pos(a.edges, e));
        perm_b.push_back(pos(b.edges, e));
        inner *= a.t.dim(pos(a.edges, e));
    }
    for (std::size_t k = 0; k < b.edges.size(); ++k)
        if (!std::binary_search(shared.begin(), shared.end(), b.edges[k])) {
            perm_b.push_back(static_cast<Index>(k));
            out_edges.push_back(b.edges[k]);
            out_dims.push_back(b.t.dim(static_cast<Index>(k)));
            cols *= b.t.dim(static_cast<Index>(k));
        }
    const DenseTensor pa = permute(a.t, perm_a);
    const DenseTensor pb = permute(b.t, perm_b);
    DenseMatrix prod = pa.reshaped(rows, inner) * pb.reshaped(inner, cols);
    return {DenseTensor(std::move(out_dims), Eigen::Map<const Eigen::VectorXd>(prod.data(), prod.size())),
            std::move(out_edges)};
}

}  // namespace

ContractionPlan greedy_plan(const TensorNetwork& net) {
    require_valid(net);
    const EdgeTable tab = edge_table(net);
    std::map<std::string, std::vector<int>> live;
    for (const auto& [id, edges] : tab.node_edges) live[id] = distinct_edges(edges);

    ContractionPlan plan;
    while (live.size() > 1) {
        const std::string* best_a = nullptr;
        const std::string* best_b = nullptr;
        double best_cost = 0.0;
        bool best_bonded = false;
        for (auto i = live.begin(); i != live.end(); ++i)
            for (auto j = std::next(i); j != live.end(); ++j) {
                const bool bonded = shares_edge(i->second, j->second);
                const double cost = merge_cost(i->second, j->second, tab.extents);
                const bool better = best_a == nullptr || (bonded && !best_bonded) ||
                                    (bonded == best_bonded && cost < best_cost);
                if (better) {
                    best_a = &i->first;
                    best_b = &j->first;
                    best_cost = cost;
                    best_bonded = bonded;
                }
            }
        const std::string a = *best_a;
        const std::string b = *best_b;
        live[a] = merged_edges(live[a], live[b]);
        live.erase(b);
        plan.steps.emplace_back(a, b);
    }
    return plan;
}

DenseTensor contract(const TensorNetwork& net, const std::optional<ContractionPlan>& plan) {
    require_valid(net);
    if (net.nodes().empty()) throw PlanError("contract: network has no nodes");
    const EdgeTable tab = edge_table(net);
    std::map<std::string, Work> live;
    for (const auto& [id, t] : net.nodes()) live.emplace(id, trace_self_bonds({t, tab.node_edges.at(id)}));

    const ContractionPlan steps = plan ? *plan : greedy_plan(net);
    for (const auto& [a, b] : steps.steps) {
        if (a == b) throw PlanError("plan step merges node '" + a + "' with itself");
        auto ia = live.find(a);
        auto ib = live.find(b);
        if (ia == live.end() || ib == live.end())
            throw PlanError("plan step (" + a + ", " + b + ") references a node that is not live");
        ia->second = merge(ia->second, ib->second);
        live.erase(ib);
    }
    if (live.size() != 1) throw PlanError("plan leaves " + std::to_string(live.size()) + " nodes");

    Work& w = live.begin()->second;
    const int first_dangling = static_cast<int>(net.bonds().size());
    std::vector<Index> perm;
    for (std::size_t d = 0; d < net.dangling().size(); ++d) {
        auto it = std::find(w.edges.begin(), w.edges.end(), first_dangling + static_cast<int>(d));
        perm.push_back(static_cast<Index>(it - w.edges.begin()));
    }
    return permute(w.t, perm);
}

TensorNetwork fix_index(const TensorNetwork& net, const std::string& label, Index value) {
    auto slot = net.find_dangling(label);
    if (!slot) throw IndexError("fix_index: no dangling label '" + label + "'");
    const Index extent = net.extent(*slot);
    if (value < 1 || value > extent)
        throw IndexError("fix_index: value " + std::to_string(value) + " outside [1, " + std::to_string(extent) +
                         "] for label '" + label + "'");
    TensorNetwork out = net;
    out.take_dangling(label);
    DenseTensor& t = out.nodes_.at(slot->node);
    t = slice(t, slot->mode, value - 1);
    auto shift = [&](Slot& s) {
        if (s.node == slot->node && s.mode > slot->mode) --s.mode;
    };
    for (auto& b : out.bonds_) {
        shift(b.a);
        shift(b.b);
    }
    for (auto& d : out.dangling_) shift(d.slot);
    return out;
}

// ---------------------------------------------------------------------------
// TN matrices

TNMatrix::TNMatrix(TensorNetwork network, std::vector<std::string> rows, std::vector<std::string> cols)
    : net(std::move(network)), row_labels(std::move(rows)), col_labels(std::move(cols)) {
    std::vector<std::string> order = row_labels;
    order.insert(order.end(), col_labels.begin(), col_labels.end());
    net.reorder_dangling(order);
}

Dims TNMatrix::row_extents() const {
    Dims out;
    for (const auto& l : row_labels) out.push_back(net.extent(*net.find_dangling(l)));
    return out;
}

Dims TNMatrix::col_extents() const {
    Dims out;
    for (const auto& l : col_labels) out.push_back(net.extent(*net.find_dangling(l)));
    return out;
}

DenseMatrix materialize(const TNMatrix& a, Index max_entries) {
    const Index rows = a.rows();
    const Index cols = a.cols();
    if (static_cast<double>(rows) * static_cast<double>(cols) > static_cast<double>(max_entries))
        throw TooLargeError("materialize: " + std::to_string(rows) + " x " + std::to_string(cols) +
                            " exceeds the limit of " + std::to_string(max_entries) + " entries");
    return contract(a.net).reshaped(rows, cols);
}

TensorNetwork gram_network(const TNMatrix& a) {
    TensorNetwork g = a.net;
    g.absorb(a.net.renamed(mirror_suffix));
    for (const auto& l : a.row_labels) g.connect(l, l + mirror_suffix);
    std::vector<std::string> order = a.col_labels;
    for (const auto& l : a.col_labels) order.push_back(l + mirror_suffix);
    g.reorder_dangling(order);
    return g;
}

DenseMatrix gram_matrix(const TNMatrix& a) {
    const Index r = a.cols();
    return contract(gram_network(a)).reshaped(r, r);
}

TensorNetwork marginal_network(const TNMatrix& a, const DenseMatrix& phi, std::span<const Index> prefix, Index n) {
    const Index nr = static_cast<Index>(a.row_labels.size());
    const Index r = a.cols();
    if (phi.rows() != r || phi.cols() != r)
        throw ShapeError("marginal_network: phi is " + std::to_string(phi.rows()) + " x " +
                         std::to_string(phi.cols()) + ", expected " + std::to_string(r) + " x " + std::to_string(r));
    if (n < 1 || n > nr || static_cast<Index>(prefix.size()) != n - 1)
        throw IndexError("marginal_network: need 1 <= n <= N_r and a prefix of length n-1");

    TensorNetwork m = a.net;
    m.absorb(a.net.renamed(mirror_suffix));

    const std::string phi_id = "#phi";
    Dims phi_dims = a.col_extents();
    const Dims col_dims = phi_dims;
    phi_dims.insert(phi_dims.end(), col_dims.begin(), col_dims.end());
    m.add_node(phi_id, DenseTensor(phi_dims, Eigen::Map<const Eigen::VectorXd>(phi.data(), phi.size())));
    const Index nc = static_cast<Index>(a.col_labels.size());
    for (Index k = 0; k < nc; ++k) {
        const auto& l = a.col_labels[static_cast<std::size_t>(k)];
        m.add_bond(m.take_dangling(l), {phi_id, k});
        m.add_bond(m.take_dangling(l + mirror_suffix), {phi_id, nc + k});
    }
    for (Index k = 0; k < n - 1; ++k) {
        const auto& l = a.row_labels[static_cast<std::size_t>(k)];
        m = fix_index(m, l, prefix[static_cast<std::size_t>(k)]);
        m = fix_index(m, l + mirror_suffix, prefix[static_cast<std::size_t>(k)]);
    }
    for (Index k = n; k < nr; ++k) {
        const auto& l = a.row_labels[static_cast<std::size_t>(k)];
        m.connect(l, l + mirror_suffix);
    }
    const auto& l = a.row_labels[static_cast<std::size_t>(n - 1)];
    const std::vector<std::string> order{l, l + mirror_suffix};
    m.reorder_dangling(order);
    return m;
}

TensorNetwork row_network(const TNMatrix& a, std::span<const Index> multi) {
    if (multi.size() != a.row_labels.size()) throw IndexError("row_network: multi-index length mismatch");
    TensorNetwork net = a.net;
    for (std::size_t k = 0; k < multi.size(); ++k) net = fix_index(net, a.row_labels[k], multi[k]);
    return net;
}

}  // namespace tns
