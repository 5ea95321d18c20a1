#include "tns/io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>

#include <json.hpp>

namespace tns {

namespace {

using json = nlohmann::json;

constexpr std::size_t header_bytes = sizeof(tensor_magic) + 8;

void put_u64(std::string& out, std::uint64_t v) {
    for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xFF));
}

std::uint64_t get_u64(const std::string& in, std::size_t pos) {
    std::uint64_t v = 0;
    for (int b = 0; b < 8; ++b)
        v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos + static_cast<std::size_t>(b)])) << (8 * b);
    return v;
}

std::uint64_t splitmix(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t gen_factor_tag = 3;
constexpr std::uint64_t gen_noise_tag = 4;

DenseTensor normal_tensor(const Dims& dims, std::uint64_t seed) {
    NormalStream rng(seed);
    DenseTensor t(dims);
    for (Index k = 0; k < t.size(); ++k) t[k] = rng.next();
    return t;
}

DenseTensor model_signal(const GenSpec& spec) {
    const Index n = static_cast<Index>(spec.dims.size());
    const TNFormat format = [&] {
        if (spec.kind == GenKind::cp) return cp_format(n, spec.rank);
        const std::vector<Index> ranks(static_cast<std::size_t>(n), spec.rank);
        return tr_format(n, ranks);
    }();
    NodeTensors tensors;
    std::uint64_t ordinal = 0;
    for (const auto& [id, dims] : node_shapes(format, spec.dims)) {
        tensors.emplace(id, format.is_fixed(id) ? superdiagonal(dims)
                                                : normal_tensor(dims, stream_seed(spec.seed, ordinal, 0, gen_factor_tag)));
        ++ordinal;
    }
    return contract(format_network(format, tensors));
}

DenseTensor inline_tensor(const json& node) {
    Dims dims = node.at("dims").get<Dims>();
    const auto values = node.at("values").get<std::vector<double>>();
    if (static_cast<Index>(values.size()) != num_entries(dims))
        throw FormatError("node '" + node.at("id").get<std::string>() + "': value count does not match dims");
    return DenseTensor(std::move(dims), Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Index>(values.size())));
}

}  // namespace

std::string encode_tensor(const DenseTensor& t) {
    std::string out(tensor_magic, sizeof(tensor_magic));
    out.reserve(header_bytes + 8 * (t.dims().size() + static_cast<std::size_t>(t.size())));
    put_u64(out, static_cast<std::uint64_t>(t.order()));
    for (Index d : t.dims()) put_u64(out, static_cast<std::uint64_t>(d));
    for (Index k = 0; k < t.size(); ++k) put_u64(out, std::bit_cast<std::uint64_t>(t[k]));
    return out;
}

DenseTensor decode_tensor(const std::string& bytes) {
    if (bytes.size() < header_bytes || std::memcmp(bytes.data(), tensor_magic, sizeof(tensor_magic)) != 0)
        throw ParseError("not a TNSR1 file");
    const std::uint64_t order = get_u64(bytes, sizeof(tensor_magic));
    if (order > (bytes.size() - header_bytes) / 8) throw ParseError("TNSR1 header is truncated");
    Dims dims;
    double entries = 1.0;
    for (std::uint64_t d = 0; d < order; ++d) {
        const std::uint64_t e = get_u64(bytes, header_bytes + 8 * d);
        if (e == 0 || e > static_cast<std::uint64_t>(std::numeric_limits<Index>::max()))
            throw ParseError("TNSR1 header has an invalid extent");
        dims.push_back(static_cast<Index>(e));
        entries *= static_cast<double>(e);
    }
    const std::size_t payload_at = header_bytes + 8 * order;
    const std::size_t payload = bytes.size() - payload_at;
    if (payload % 8 != 0 || entries != static_cast<double>(payload / 8))
        throw CorruptFileError("TNSR1 payload holds " + std::to_string(payload / 8) + " values, header implies " +
                               std::to_string(static_cast<std::uint64_t>(entries)));
    Eigen::VectorXd values(static_cast<Index>(payload / 8));
    for (Index k = 0; k < values.size(); ++k) {
        values[k] = std::bit_cast<double>(get_u64(bytes, payload_at + 8 * static_cast<std::size_t>(k)));
        if (!std::isfinite(values[k])) throw CorruptFileError("TNSR1 payload has a non-finite value");
    }
    return DenseTensor(std::move(dims), std::move(values));
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

DenseTensor read_tensor(const std::filesystem::path& path) { return decode_tensor(read_text(path)); }

void write_tensor(const DenseTensor& t, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    const std::string bytes = encode_tensor(t);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("write to '" + path.string() + "' failed");
}

GenKind parse_gen_kind(const std::string& s) {
    if (s == "cp") return GenKind::cp;
    if (s == "tr") return GenKind::tr;
    if (s == "noise") return GenKind::noise;
    throw ParamError("unknown generator kind '" + s + "'");
}

NormalStream::NormalStream(std::uint64_t seed) : state_(seed) {}

double NormalStream::next() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    // Box-Muller on (0, 1] x [0, 1).
    const double u1 = static_cast<double>((splitmix(state_) >> 11) + 1) * 0x1.0p-53;
    const double u2 = static_cast<double>(splitmix(state_) >> 11) * 0x1.0p-53;
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
}

Generated generate(const GenSpec& spec) {
    if (spec.dims.empty()) throw ParamError("gen: dims must be nonempty");
    for (Index d : spec.dims)
        if (d < 1) throw ParamError("gen: extents must be positive");
    if (spec.rank < 1) throw ParamError("gen: rank must be positive");
    if (!(spec.noise_level >= 0.0) || !std::isfinite(spec.noise_level))
        throw ParamError("gen: noise_level must be finite and nonnegative");

    const DenseTensor noise = normal_tensor(spec.dims, stream_seed(spec.seed, 0, 0, gen_noise_tag));
    if (spec.kind == GenKind::noise) return {DenseTensor(spec.dims), noise};

    Generated out{model_signal(spec), {}};
    out.data = out.signal;
    const double noise_norm = frobenius_norm(noise);
    if (spec.noise_level > 0.0 && noise_norm > 0.0) {
        const double scale = spec.noise_level * frobenius_norm(out.signal) / noise_norm;
        out.data = DenseTensor(spec.dims, out.signal.values() + scale * noise.values());
    }
    return out;
}

TNMatrix parse_tn_matrix(const std::string& text, const std::filesystem::path& base_dir) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("TN matrix file: ") + e.what());
    }
    try {
        TensorNetwork net;
        for (const auto& node : j.at("nodes")) {
            const auto id = node.at("id").get<std::string>();
            if (node.contains("tensor"))
                net.add_node(id, read_tensor(base_dir / node.at("tensor").get<std::string>()));
            else
                net.add_node(id, inline_tensor(node));
        }
        if (j.contains("bonds"))
            for (const auto& b : j.at("bonds"))
                net.add_bond(parse_slot(b.at(0).get<std::string>()), parse_slot(b.at(1).get<std::string>()));
        std::vector<std::string> rows, cols;
        for (const auto& [key, labels] : {std::pair{"rows", &rows}, std::pair{"cols", &cols}})
            for (const auto& d : j.at(key)) {
                const auto label = d.at("label").get<std::string>();
                net.add_dangling(label, parse_slot(d.at("slot").get<std::string>()));
                labels->push_back(label);
            }
        return TNMatrix(std::move(net), std::move(rows), std::move(cols));
    } catch (const json::exception& e) {
        throw FormatError(std::string("TN matrix file: ") + e.what());
    }
}

TNMatrix load_tn_matrix(const std::filesystem::path& path) {
    return parse_tn_matrix(read_text(path), path.parent_path());
}

void write_sketch_csv(const SketchSpec& spec, std::ostream& out) {
    const std::size_t k = spec.draws.empty() ? 0 : spec.draws.front().multi.size();
    out << "draw,linear,prob,weight";
    for (std::size_t i = 1; i <= k; ++i) out << ",i" << i;
    out << '\n' << std::setprecision(17);
    for (std::size_t j = 0; j < spec.draws.size(); ++j) {
        const auto& d = spec.draws[j];
        out << j + 1 << ',' << d.linear << ',' << d.prob << ',' << spec.weights[j];
        for (Index v : d.multi) out << ',' << v;
        out << '\n';
    }
}

void write_metrics_csv(const std::vector<IterationRecord>& history, std::ostream& out, bool zero_times) {
    out << "iter,time_s,rel_error\n" << std::setprecision(17);
    for (const auto& r : history) out << r.iter << ',' << (zero_times ? 0.0 : r.time_s) << ',' << r.rel_error << '\n';
}

}  // namespace tns
