#include "tns/als.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iostream>
#include <random>

namespace tns {

namespace {

constexpr std::uint64_t init_stream_tag = 2;
constexpr std::uint64_t update_stream_tag = 1;

/// Flat offsets of every multi-index over `modes`, first mode fastest.
std::vector<Index> mode_offsets(const Dims& dims, const std::vector<Index>& modes) {
    const Dims strides = detail::strides_of(dims);
    std::vector<Index> out{0};
    for (Index m : modes) {
        const auto e = dims[static_cast<std::size_t>(m)];
        const auto s = strides[static_cast<std::size_t>(m)];
        std::vector<Index> next;
        next.reserve(out.size() * static_cast<std::size_t>(e));
        for (Index i = 0; i < e; ++i)
            for (Index o : out) next.push_back(o + i * s);
        out = std::move(next);
    }
    return out;
}

std::string owner_mode_error(const std::string& node) {
    return "fast path expects node '" + node + "' to carry exactly one data mode";
}

Index owned_data_mode(const SubproblemLayout& layout) {
    if (layout.col_data_modes.size() != 1) throw FormatError(owner_mode_error(layout.node));
    return layout.col_data_modes.front();
}

DenseTensor solution_to_node(const DenseMatrix& solution, const SubproblemLayout& layout, const Dims& dims) {
    return refold(solution, layout.node_bond_modes, layout.node_data_modes, dims);
}

double model_error(const DenseTensor& data, double data_norm, const TNFormat& format, const NodeTensors& tensors) {
    const DenseTensor model = contract(format_network(format, tensors));
    const double diff = (data.values() - model.values()).norm();
    return data_norm > 0.0 ? diff / data_norm : diff;
}

void warn_small_sample(Index samples, Index cols) {
    static std::atomic<bool> warned{false};
    if (samples < cols + 1 && !warned.exchange(true))
        std::clog << "tns: warning: " << samples << " samples for a design with " << cols
                  << " columns; at least cols + 1 is recommended\n";
}

}  // namespace

void check_config(const ALSConfig& cfg) {
    if (cfg.max_iters < 1) throw ParamError("max_iters must be at least 1");
    if (cfg.error_every < 1) throw ParamError("error_every must be at least 1");
    if (cfg.rel_change_tol < 0.0) throw ParamError("rel_change_tol must be nonnegative");
    if (cfg.mode == SolveMode::sampled) {
        const bool has_eps = cfg.epsilon.has_value() || cfg.delta.has_value();
        if (cfg.samples.has_value() == has_eps)
            throw ParamError("sampled mode needs either a sample count or (epsilon, delta), not both");
        if (cfg.samples && *cfg.samples < 1) throw ParamError("sample count must be positive");
        if (has_eps && !(cfg.epsilon && cfg.delta)) throw ParamError("epsilon and delta must be given together");
    }
}

std::vector<double> DecompositionResult::errors() const {
    std::vector<double> out;
    for (const auto& r : history) out.push_back(r.rel_error);
    return out;
}

NodeTensors init_factors(const TNFormat& format, std::span<const Index> data_dims, std::uint64_t seed) {
    const auto shapes = node_shapes(format, data_dims);
    NodeTensors out;
    std::uint64_t ordinal = 0;
    for (const auto& n : format.nodes) {
        const Dims& dims = shapes.at(n.id);
        if (format.is_fixed(n.id)) {
            out.emplace(n.id, superdiagonal(dims));
        } else {
            std::mt19937_64 rng(stream_seed(seed, ordinal, 0, init_stream_tag));
            DenseTensor t(dims);
            for (Index k = 0; k < t.size(); ++k) t[k] = 2.0 * static_cast<double>(rng() >> 11) * 0x1.0p-53 - 1.0;
            out.emplace(n.id, std::move(t));
        }
        ++ordinal;
    }
    return out;
}

DenseMatrix ls_solve(const DenseMatrix& design, const DenseMatrix& rhs) {
    if (design.rows() != rhs.rows()) throw ShapeError("ls_solve: design and rhs row counts differ");
    if (design.rows() < 1) throw ShapeError("ls_solve: empty design");
    Eigen::CompleteOrthogonalDecomposition<DenseMatrix> cod(design);
    return cod.solve(rhs);
}

double relative_error(const DenseTensor& data, const TNFormat& format, const NodeTensors& tensors) {
    const double norm = frobenius_norm(data);
    if (norm == 0.0) throw ZeroDataError("relative_error: data tensor is zero");
    return model_error(data, norm, format, tensors);
}

DenseMatrix gather_unfolding(const DataAccessor& data, const SubproblemLayout& layout) {
    const auto rows = mode_offsets(data.dims(), layout.row_data_modes);
    const auto cols = mode_offsets(data.dims(), layout.col_data_modes);
    DenseMatrix x(static_cast<Index>(rows.size()), static_cast<Index>(cols.size()));
    for (std::size_t c = 0; c < cols.size(); ++c)
        for (std::size_t r = 0; r < rows.size(); ++r)
            x(static_cast<Index>(r), static_cast<Index>(c)) = data.read(rows[r] + cols[c]);
    return x;
}

DenseMatrix gather_sketched_rows(const DataAccessor& data, const SubproblemLayout& layout, const SketchSpec& spec) {
    const Dims strides = detail::strides_of(data.dims());
    const auto cols = mode_offsets(data.dims(), layout.col_data_modes);
    DenseMatrix x(spec.size(), static_cast<Index>(cols.size()));
    for (Index j = 0; j < spec.size(); ++j) {
        const auto& d = spec.draws[static_cast<std::size_t>(j)];
        if (d.multi.size() != layout.row_data_modes.size())
            throw ShapeError("gather_sketched_rows: draw does not match the row modes");
        Index base = 0;
        for (std::size_t k = 0; k < d.multi.size(); ++k)
            base += (d.multi[k] - 1) * strides[static_cast<std::size_t>(layout.row_data_modes[k])];
        const double w = spec.weights[static_cast<std::size_t>(j)];
        for (std::size_t c = 0; c < cols.size(); ++c) x(j, static_cast<Index>(c)) = w * data.read(base + cols[c]);
    }
    return x;
}

std::vector<DenseMatrix> cp_factors(const TNFormat& format, const NodeTensors& tensors) {
    std::vector<DenseMatrix> out;
    for (const auto& s : format.data_modes) {
        const DenseTensor& t = tensors.at(s.node);
        if (t.order() != 2) throw FormatError("CP factor '" + s.node + "' is not a matrix");
        DenseMatrix f = t.reshaped(t.dim(0), t.dim(1));
        out.push_back(s.mode == 0 ? f : DenseMatrix(f.transpose()));
    }
    return out;
}

std::vector<DenseTensor> tr_cores(const TNFormat& format, const NodeTensors& tensors) {
    std::vector<DenseTensor> out;
    for (const auto& s : format.data_modes) {
        const DenseTensor& t = tensors.at(s.node);
        if (t.order() != 3 || s.mode != 1) throw FormatError("TR core '" + s.node + "' is not rank x data x rank");
        out.push_back(t);
    }
    return out;
}

std::unique_ptr<RowSampler> make_row_sampler(const TNFormat& format, const NodeTensors& tensors,
                                             const std::string& node, const ALSConfig& cfg) {
    const SubproblemLayout layout = subproblem_layout(format, node);
    switch (cfg.fast_path) {
        case FastPath::cp:
            return std::make_unique<CPRowSampler>(cp_factors(format, tensors), owned_data_mode(layout), cfg.pinv_tol);
        case FastPath::tr: {
            TNMatrix a = design_network(format, tensors, node);
            PhiMatrix phi = phi_from_gram(tr_gram_fast(tr_cores(format, tensors), owned_data_mode(layout)), cfg.pinv_tol);
            return std::make_unique<NetworkRowSampler>(std::move(a), std::move(phi));
        }
        case FastPath::generic:
            break;
    }
    TNMatrix a = design_network(format, tensors, node);
    PhiMatrix phi = compute_phi(a, cfg.pinv_tol);
    return std::make_unique<NetworkRowSampler>(std::move(a), std::move(phi));
}

DenseMatrix dense_design(const TNFormat& format, const NodeTensors& tensors, const std::string& node,
                         const ALSConfig& cfg) {
    if (cfg.fast_path == FastPath::cp) {
        const Index excluded = owned_data_mode(subproblem_layout(format, node));
        const auto factors = cp_factors(format, tensors);
        double entries = static_cast<double>(factors.front().cols());
        for (Index k = 0; k < static_cast<Index>(factors.size()); ++k)
            if (k != excluded) entries *= static_cast<double>(factors[static_cast<std::size_t>(k)].rows());
        if (entries > static_cast<double>(cfg.max_dense_entries))
            throw TooLargeError("CP design matrix exceeds the dense size limit");
        DenseMatrix d;
        for (Index k = 0; k < static_cast<Index>(factors.size()); ++k) {
            if (k == excluded) continue;
            const auto& f = factors[static_cast<std::size_t>(k)];
            d = d.size() == 0 ? f : khatri_rao(f, d);
        }
        return d;
    }
    return materialize(design_network(format, tensors, node), cfg.max_dense_entries);
}

DenseTensor update_exact(const DataAccessor& data, const TNFormat& format, const NodeTensors& tensors,
                         const std::string& node, const ALSConfig& cfg) {
    const SubproblemLayout layout = subproblem_layout(format, node);
    const DenseMatrix design = dense_design(format, tensors, node, cfg);
    const DenseMatrix x = gather_unfolding(data, layout);
    return solution_to_node(ls_solve(design, x), layout, tensors.at(node).dims());
}

Index resolve_sample_count(const ALSConfig& cfg, Index cols) {
    const Index j = cfg.samples ? *cfg.samples : sample_size(cols, *cfg.epsilon, *cfg.delta, cfg.oversample);
    warn_small_sample(j, cols);
    return j;
}

DenseTensor update_sampled(const DataAccessor& data, const TNFormat& format, const NodeTensors& tensors,
                           const std::string& node, const ALSConfig& cfg, std::uint64_t stream) {
    const SubproblemLayout layout = subproblem_layout(format, node);
    const Dims& dims = tensors.at(node).dims();
    const auto sampler = make_row_sampler(format, tensors, node, cfg);
    // A zero design admits every solution; the minimum-norm one is zero.
    if (sampler->phi().rank == 0) return DenseTensor(dims);

    const Index j = resolve_sample_count(cfg, sampler->cols());
    const SketchSpec spec = draw_samples(*sampler, j, stream);
    DenseMatrix sa(j, sampler->cols());
    for (Index k = 0; k < j; ++k)
        sa.row(k) = spec.weights[static_cast<std::size_t>(k)] *
                    sampler->row(spec.draws[static_cast<std::size_t>(k)].multi).transpose();
    const DenseMatrix sx = gather_sketched_rows(data, layout, spec);
    return solution_to_node(ls_solve(sa, sx), layout, dims);
}

DecompositionResult decompose(const DenseTensor& data, const TNFormat& format, const ALSConfig& cfg,
                              const NodeTensors* init) {
    check_config(cfg);
    check_format(format);
    node_shapes(format, data.dims());

    DecompositionResult result;
    result.seed = cfg.seed;
    result.tensors = init ? *init : init_factors(format, data.dims(), cfg.seed);
    const DenseAccessor acc(data);
    const auto order = format.update_order();
    const double data_norm = frobenius_norm(data);

    using Clock = std::chrono::steady_clock;
    double elapsed = 0.0;
    std::optional<double> prev;
    Index it = 0;
    while (it < cfg.max_iters) {
        ++it;
        const auto start = Clock::now();
        for (std::size_t k = 0; k < order.size(); ++k) {
            const auto& node = order[k];
            result.tensors[node] =
                cfg.mode == SolveMode::exact
                    ? update_exact(acc, format, result.tensors, node, cfg)
                    : update_sampled(acc, format, result.tensors, node, cfg,
                                     stream_seed(cfg.seed, static_cast<std::uint64_t>(it), k, update_stream_tag));
        }
        elapsed += std::chrono::duration<double>(Clock::now() - start).count();

        if (it % cfg.error_every != 0 && it != cfg.max_iters) continue;
        const double err = model_error(data, data_norm, format, result.tensors);
        result.history.push_back({it, elapsed, err});
        if (prev && std::abs(*prev - err) / std::max(*prev, 1e-15) < cfg.rel_change_tol) break;
        prev = err;
    }
    result.iterations = it;
    return result;
}

DecompositionResult als(const DenseTensor& data, const TNFormat& format, ALSConfig cfg, const NodeTensors* init) {
    cfg.mode = SolveMode::exact;
    return decompose(data, format, cfg, init);
}

DecompositionResult sampled_als(const DenseTensor& data, const TNFormat& format, ALSConfig cfg,
                                const NodeTensors* init) {
    cfg.mode = SolveMode::sampled;
    return decompose(data, format, cfg, init);
}

DecompositionResult cp_decompose(const DenseTensor& data, Index rank, ALSConfig cfg) {
    if (data.order() < 3) throw ParamError("cp_decompose: data must have at least 3 modes");
    if (rank < 1) throw ParamError("cp_decompose: rank must be positive");
    cfg.fast_path = FastPath::cp;
    return decompose(data, cp_format(data.order(), rank), cfg);
}

DecompositionResult tr_decompose(const DenseTensor& data, std::span<const Index> ranks, ALSConfig cfg) {
    if (data.order() < 3) throw ParamError("tr_decompose: data must have at least 3 modes");
    for (Index r : ranks)
        if (r < 1) throw ParamError("tr_decompose: ranks must be positive");
    cfg.fast_path = FastPath::tr;
    return decompose(data, tr_format(data.order(), ranks), cfg);
}

DecompositionResult tr_decompose(const DenseTensor& data, Index rank, ALSConfig cfg) {
    const std::vector<Index> ranks(static_cast<std::size_t>(data.order()), rank);
    return tr_decompose(data, ranks, std::move(cfg));
}

}  // namespace tns
