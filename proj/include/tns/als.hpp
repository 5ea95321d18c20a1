#pragma once

#include <atomic>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tns/format.hpp"
#include "tns/sampler.hpp"

namespace tns {

/// Read access to the entries of a data tensor by flat (first-index-fastest) offset.
class DataAccessor {
public:
    virtual ~DataAccessor() = default;
    virtual const Dims& dims() const = 0;
    virtual double read(Index flat) const = 0;
};

class DenseAccessor final : public DataAccessor {
public:
    explicit DenseAccessor(const DenseTensor& t) : t_(t) {}
    const Dims& dims() const override { return t_.dims(); }
    double read(Index flat) const override { return t_[flat]; }

private:
    const DenseTensor& t_;
};

/// Forwards reads and counts them.
class CountingAccessor final : public DataAccessor {
public:
    explicit CountingAccessor(const DataAccessor& inner) : inner_(inner) {}
    const Dims& dims() const override { return inner_.dims(); }
    double read(Index flat) const override {
        reads_.fetch_add(1, std::memory_order_relaxed);
        return inner_.read(flat);
    }
    Index reads() const { return reads_.load(); }
    void reset() { reads_.store(0); }

private:
    const DataAccessor& inner_;
    mutable std::atomic<Index> reads_{0};
};

enum class SolveMode { exact, sampled };

/// Which structure the subproblems may exploit. cp and tr require the
/// canonical formats from cp_format / tr_format.
enum class FastPath { generic, cp, tr };

struct ALSConfig {
    SolveMode mode = SolveMode::exact;
    /// Sampled mode: either a fixed sample count or (epsilon, delta).
    std::optional<Index> samples;
    std::optional<double> epsilon;
    std::optional<double> delta;
    double oversample = 1.0;
    Index max_iters = 50;
    double rel_change_tol = 1e-4;
    std::uint64_t seed = 0;
    /// Exact mode refuses design matrices with more entries than this.
    Index max_dense_entries = default_materialize_limit;
    /// Evaluate the error every k sweeps (and after the last one).
    Index error_every = 1;
    double pinv_tol = default_pinv_tol;
    FastPath fast_path = FastPath::generic;
};

/// Throws ParamError for inconsistent settings.
void check_config(const ALSConfig& cfg);

struct IterationRecord {
    Index iter = 0;
    double time_s = 0.0;
    double rel_error = 0.0;
};

struct DecompositionResult {
    NodeTensors tensors;
    /// One record per evaluated sweep; every sweep when error_every == 1.
    std::vector<IterationRecord> history;
    Index iterations = 0;
    std::uint64_t seed = 0;

    std::vector<double> errors() const;
};

/// Random start: free nodes i.i.d. uniform on [-1, 1], fixed nodes superdiagonal ones.
NodeTensors init_factors(const TNFormat& format, std::span<const Index> data_dims, std::uint64_t seed);

/// Minimum-norm least-squares solution of design * X = rhs.
DenseMatrix ls_solve(const DenseMatrix& design, const DenseMatrix& rhs);

/// ||X - TN(tensors)||_F / ||X||_F. Throws ZeroDataError for a zero tensor.
double relative_error(const DenseTensor& data, const TNFormat& format, const NodeTensors& tensors);

/// Full unfolding for a subproblem (reads every entry once).
DenseMatrix gather_unfolding(const DataAccessor& data, const SubproblemLayout& layout);

/// Weighted unfolding rows picked by a sketch; reads J times the product of
/// the extents of the node's own data modes.
DenseMatrix gather_sketched_rows(const DataAccessor& data, const SubproblemLayout& layout, const SketchSpec& spec);

/// Row sampler for the design of `node` under the configured fast path.
std::unique_ptr<RowSampler> make_row_sampler(const TNFormat& format, const NodeTensors& tensors,
                                             const std::string& node, const ALSConfig& cfg);

/// Dense design matrix of `node` under the configured fast path.
DenseMatrix dense_design(const TNFormat& format, const NodeTensors& tensors, const std::string& node,
                         const ALSConfig& cfg);

/// Exact argmin for one node.
DenseTensor update_exact(const DataAccessor& data, const TNFormat& format, const NodeTensors& tensors,
                         const std::string& node, const ALSConfig& cfg);

/// Sketched argmin for one node; `stream` keys the sampling RNG.
DenseTensor update_sampled(const DataAccessor& data, const TNFormat& format, const NodeTensors& tensors,
                           const std::string& node, const ALSConfig& cfg, std::uint64_t stream);

/// Sample count used by update_sampled for a design with `cols` columns.
Index resolve_sample_count(const ALSConfig& cfg, Index cols);

/// Runs cfg.mode; `init` overrides the random start.
DecompositionResult decompose(const DenseTensor& data, const TNFormat& format, const ALSConfig& cfg,
                              const NodeTensors* init = nullptr);
DecompositionResult als(const DenseTensor& data, const TNFormat& format, ALSConfig cfg,
                        const NodeTensors* init = nullptr);
DecompositionResult sampled_als(const DenseTensor& data, const TNFormat& format, ALSConfig cfg,
                                const NodeTensors* init = nullptr);

DecompositionResult cp_decompose(const DenseTensor& data, Index rank, ALSConfig cfg);
DecompositionResult tr_decompose(const DenseTensor& data, std::span<const Index> ranks, ALSConfig cfg);
DecompositionResult tr_decompose(const DenseTensor& data, Index rank, ALSConfig cfg);

/// Factor matrices of a CP format in data-mode order.
std::vector<DenseMatrix> cp_factors(const TNFormat& format, const NodeTensors& tensors);
/// Cores of a TR format in data-mode order.
std::vector<DenseTensor> tr_cores(const TNFormat& format, const NodeTensors& tensors);

}  // namespace tns
