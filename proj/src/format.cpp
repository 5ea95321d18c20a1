#include "tns/format.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace tns {

namespace {

const FormatNode& find_node(const TNFormat& f, const std::string& id) {
    for (const auto& n : f.nodes)
        if (n.id == id) return n;
    throw FormatError("unknown node '" + id + "'");
}

}  // namespace

Slot parse_slot(const std::string& s) {
    const auto dot = s.rfind('.');
    if (dot == std::string::npos || dot == 0 || dot + 1 == s.size())
        throw FormatError("slot '" + s + "' is not of the form node.mode");
    Slot out{s.substr(0, dot), 0};
    try {
        std::size_t used = 0;
        out.mode = std::stoll(s.substr(dot + 1), &used);
        if (used != s.size() - dot - 1) throw FormatError("");
    } catch (const std::exception&) {
        throw FormatError("slot '" + s + "' has a non-integer mode");
    }
    return out;
}

std::vector<std::string> TNFormat::update_order() const {
    std::vector<std::string> out;
    for (const auto& n : nodes)
        if (!is_fixed(n.id)) out.push_back(n.id);
    return out;
}

std::string data_label(Index d) { return "x" + std::to_string(d); }

void check_format(const TNFormat& f) {
    std::map<Slot, int> uses;
    std::set<std::string> ids;
    for (const auto& n : f.nodes) {
        if (n.id.empty()) throw FormatError("empty node id");
        if (!ids.insert(n.id).second) throw FormatError("duplicate node id '" + n.id + "'");
        if (n.n_modes < 0) throw FormatError("node '" + n.id + "' has a negative mode count");
    }
    auto use = [&](const Slot& s) {
        const auto& n = find_node(f, s.node);
        if (s.mode < 0 || s.mode >= n.n_modes) throw FormatError("slot " + to_string(s) + " out of range");
        if (++uses[s] > 1) throw FormatError("slot " + to_string(s) + " used more than once");
    };
    for (const auto& [a, b] : f.bonds) {
        use(a);
        use(b);
        auto ea = f.extents.find(a);
        auto eb = f.extents.find(b);
        if (ea == f.extents.end() || eb == f.extents.end())
            throw FormatError("bond " + to_string(a) + " <-> " + to_string(b) + " has no extent");
        if (ea->second != eb->second)
            throw FormatError("bond " + to_string(a) + " <-> " + to_string(b) + " joins different extents");
        if (ea->second < 1) throw FormatError("bond " + to_string(a) + " <-> " + to_string(b) + " has extent < 1");
    }
    for (const auto& s : f.data_modes) use(s);
    for (const auto& n : f.nodes)
        for (Index m = 0; m < n.n_modes; ++m)
            if (!uses.count({n.id, m})) throw FormatError("slot " + n.id + "." + std::to_string(m) + " is unassigned");
    for (const auto& id : f.fixed_diagonal) {
        find_node(f, id);
        Index first = -1;
        for (const auto& [s, e] : f.extents)
            if (s.node == id) {
                if (first >= 0 && e != first) throw FormatError("fixed diagonal node '" + id + "' has unequal extents");
                first = e;
            }
        for (const auto& s : f.data_modes)
            if (s.node == id) throw FormatError("fixed diagonal node '" + id + "' carries a data mode");
    }
    if (f.update_order().empty()) throw FormatError("format has no updatable node");
}

TNFormat parse_format(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("format file: ") + e.what());
    }
    TNFormat f;
    try {
        for (const auto& n : j.at("nodes")) f.nodes.push_back({n.at("id").get<std::string>(), n.at("n_modes").get<Index>()});
        if (j.contains("extents"))
            for (const auto& [k, v] : j.at("extents").items()) f.extents[parse_slot(k)] = v.get<Index>();
        if (j.contains("bonds"))
            for (const auto& b : j.at("bonds")) {
                if (b.size() != 2) throw FormatError("bond entries must be pairs");
                f.bonds.emplace_back(parse_slot(b[0].get<std::string>()), parse_slot(b[1].get<std::string>()));
            }
        const auto& dm = j.at("data_modes");
        if (dm.is_array()) {
            for (const auto& s : dm) f.data_modes.push_back(parse_slot(s.get<std::string>()));
        } else {
            std::map<Index, Slot> by_index;
            for (const auto& [k, v] : dm.items()) by_index[std::stoll(k)] = parse_slot(v.get<std::string>());
            Index expect = 0;
            for (const auto& [d, s] : by_index) {
                if (d != expect++) throw FormatError("data_modes must cover 0..N-1");
                f.data_modes.push_back(s);
            }
        }
        if (j.contains("fixed_diagonal"))
            for (const auto& id : j.at("fixed_diagonal")) f.fixed_diagonal.insert(id.get<std::string>());
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("format file: ") + e.what());
    }
    // An extent given on one end of a bond applies to both.
    for (const auto& [a, b] : f.bonds) {
        auto ea = f.extents.find(a);
        auto eb = f.extents.find(b);
        if (ea != f.extents.end() && eb == f.extents.end()) f.extents[b] = ea->second;
        if (eb != f.extents.end() && ea == f.extents.end()) f.extents[a] = eb->second;
    }
    check_format(f);
    return f;
}

TNFormat load_format(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open format file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_format(ss.str());
}

std::string format_to_json(const TNFormat& f) {
    nlohmann::json j;
    j["nodes"] = nlohmann::json::array();
    for (const auto& n : f.nodes) j["nodes"].push_back({{"id", n.id}, {"n_modes", n.n_modes}});
    j["extents"] = nlohmann::json::object();
    for (const auto& [s, e] : f.extents) j["extents"][to_string(s)] = e;
    j["bonds"] = nlohmann::json::array();
    for (const auto& [a, b] : f.bonds) j["bonds"].push_back({to_string(a), to_string(b)});
    j["data_modes"] = nlohmann::json::array();
    for (const auto& s : f.data_modes) j["data_modes"].push_back(to_string(s));
    j["fixed_diagonal"] = f.fixed_diagonal;
    return j.dump(2);
}

TNFormat cp_format(Index order, Index rank) {
    if (order < 1 || rank < 1) throw FormatError("cp_format: order and rank must be positive");
    TNFormat f;
    for (Index n = 0; n < order; ++n) f.nodes.push_back({"A" + std::to_string(n + 1), 2});
    f.nodes.push_back({"L", order});
    f.fixed_diagonal.insert("L");
    for (Index n = 0; n < order; ++n) {
        const Slot factor{"A" + std::to_string(n + 1), 1};
        const Slot weight{"L", n};
        f.bonds.emplace_back(factor, weight);
        f.extents[factor] = rank;
        f.extents[weight] = rank;
        f.data_modes.push_back({"A" + std::to_string(n + 1), 0});
    }
    check_format(f);
    return f;
}

TNFormat tr_format(Index order, std::span<const Index> ranks) {
    if (order < 2) throw FormatError("tr_format: order must be at least 2");
    if (static_cast<Index>(ranks.size()) != order) throw FormatError("tr_format: need one rank per core");
    TNFormat f;
    auto id = [](Index n) { return "G" + std::to_string(n + 1); };
    for (Index n = 0; n < order; ++n) f.nodes.push_back({id(n), 3});
    for (Index n = 0; n < order; ++n) {
        const Slot right{id(n), 2};
        const Slot left{id((n + 1) % order), 0};
        f.bonds.emplace_back(right, left);
        f.extents[right] = ranks[static_cast<std::size_t>(n)];
        f.extents[left] = ranks[static_cast<std::size_t>(n)];
        f.data_modes.push_back({id(n), 1});
    }
    check_format(f);
    return f;
}

std::map<std::string, Dims> node_shapes(const TNFormat& f, std::span<const Index> data_dims) {
    if (static_cast<Index>(data_dims.size()) != f.order())
        throw FormatError("data has " + std::to_string(data_dims.size()) + " modes, format expects " +
                          std::to_string(f.order()));
    std::map<std::string, Dims> out;
    for (const auto& n : f.nodes) {
        Dims dims(static_cast<std::size_t>(n.n_modes), 0);
        for (Index m = 0; m < n.n_modes; ++m) {
            auto it = f.extents.find({n.id, m});
            if (it != f.extents.end()) dims[static_cast<std::size_t>(m)] = it->second;
        }
        out[n.id] = std::move(dims);
    }
    for (std::size_t d = 0; d < f.data_modes.size(); ++d) {
        const auto& s = f.data_modes[d];
        Index& e = out[s.node][static_cast<std::size_t>(s.mode)];
        if (e != 0 && e != data_dims[d])
            throw FormatError("slot " + to_string(s) + " has extent " + std::to_string(e) + " but data mode " +
                              std::to_string(d) + " has " + std::to_string(data_dims[d]));
        e = data_dims[d];
    }
    return out;
}

DenseTensor superdiagonal(const Dims& dims) {
    DenseTensor t(dims);
    if (dims.empty()) {
        t[0] = 1.0;
        return t;
    }
    const Index n = *std::min_element(dims.begin(), dims.end());
    const Dims strides = detail::strides_of(dims);
    const Index step = std::accumulate(strides.begin(), strides.end(), Index{0});
    for (Index k = 0; k < n; ++k) t[k * step] = 1.0;
    return t;
}

TensorNetwork format_network(const TNFormat& f, const NodeTensors& tensors) {
    TensorNetwork net;
    for (const auto& n : f.nodes) {
        auto it = tensors.find(n.id);
        if (it == tensors.end()) throw FormatError("no tensor for node '" + n.id + "'");
        if (it->second.order() != n.n_modes) throw FormatError("tensor for node '" + n.id + "' has the wrong order");
        net.add_node(n.id, it->second);
    }
    for (const auto& [a, b] : f.bonds) net.add_bond(a, b);
    for (Index d = 0; d < f.order(); ++d) net.add_dangling(data_label(d), f.data_modes[static_cast<std::size_t>(d)]);
    return net;
}

SubproblemLayout subproblem_layout(const TNFormat& f, const std::string& node) {
    const auto& fn = find_node(f, node);
    SubproblemLayout out;
    out.node = node;
    for (Index d = 0; d < f.order(); ++d) {
        const auto& s = f.data_modes[static_cast<std::size_t>(d)];
        if (s.node == node) {
            out.col_data_modes.push_back(d);
            out.node_data_modes.push_back(s.mode);
        } else {
            out.row_data_modes.push_back(d);
        }
    }
    for (Index m = 0; m < fn.n_modes; ++m)
        for (const auto& [a, b] : f.bonds) {
            if (a.node == node && b.node == node) throw FormatError("node '" + node + "' has a self-bond");
            if ((a.node == node && a.mode == m) || (b.node == node && b.mode == m)) out.node_bond_modes.push_back(m);
        }
    return out;
}

TNMatrix design_network(const TNFormat& f, const NodeTensors& tensors, const std::string& node) {
    const SubproblemLayout layout = subproblem_layout(f, node);
    if (f.nodes.size() < 2) throw FormatError("design_network: format has no node besides '" + node + "'");

    TensorNetwork net;
    for (const auto& n : f.nodes) {
        if (n.id == node) continue;
        auto it = tensors.find(n.id);
        if (it == tensors.end()) throw FormatError("no tensor for node '" + n.id + "'");
        net.add_node(n.id, it->second);
    }
    std::vector<std::string> rows, cols;
    for (const auto& [a, b] : f.bonds)
        if (a.node != node && b.node != node) net.add_bond(a, b);
    for (Index d : layout.row_data_modes) {
        net.add_dangling(data_label(d), f.data_modes[static_cast<std::size_t>(d)]);
        rows.push_back(data_label(d));
    }
    for (Index m : layout.node_bond_modes)
        for (const auto& [a, b] : f.bonds) {
            const Slot* other = nullptr;
            if (a.node == node && a.mode == m) other = &b;
            if (b.node == node && b.mode == m) other = &a;
            if (other) {
                const std::string label = "r" + std::to_string(m);
                net.add_dangling(label, *other);
                cols.push_back(label);
            }
        }
    return TNMatrix(std::move(net), std::move(rows), std::move(cols));
}

}  // namespace tns
