#pragma once

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "tns/als.hpp"

namespace tns {

/// "TNSR1" padded with zeros to 8 bytes.
inline constexpr char tensor_magic[8] = {'T', 'N', 'S', 'R', '1', '\0', '\0', '\0'};

/// TNSR1 encoding: magic, u64 order, u64 extents, f64 values (all little-endian).
std::string encode_tensor(const DenseTensor& t);
/// Throws ParseError for a malformed header, CorruptFileError for a bad payload.
DenseTensor decode_tensor(const std::string& bytes);

DenseTensor read_tensor(const std::filesystem::path& path);
void write_tensor(const DenseTensor& t, const std::filesystem::path& path);

enum class GenKind { cp, tr, noise };

GenKind parse_gen_kind(const std::string& s);

struct GenSpec {
    GenKind kind = GenKind::cp;
    Dims dims;
    Index rank = 1;
    double noise_level = 0.0;
    std::uint64_t seed = 0;
};

struct Generated {
    DenseTensor signal;
    DenseTensor data;
};

/// Standard normal draws from a seeded stream.
class NormalStream {
public:
    explicit NormalStream(std::uint64_t seed);
    double next();

private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// Synthetic tensor: CP or TR model with standard normal factors, plus
/// Gaussian noise scaled to noise_level * ||signal||. The noise kind is pure
/// standard normal noise and ignores noise_level.
Generated generate(const GenSpec& spec);

/// TN matrix description:
///   { "nodes": [{"id": "A", "tensor": "a.tnsr"} | {"id": "A", "dims": [..], "values": [..]}],
///     "bonds": [["A.1", "B.0"]],
///     "rows": [{"label": "i", "slot": "A.0"}],
///     "cols": [{"label": "j", "slot": "B.1"}] }
/// Tensor paths are relative to `base_dir`.
TNMatrix parse_tn_matrix(const std::string& text, const std::filesystem::path& base_dir = {});
TNMatrix load_tn_matrix(const std::filesystem::path& path);

/// One line per draw: draw,linear,prob,weight,i1,...,iK (1-based indices).
void write_sketch_csv(const SketchSpec& spec, std::ostream& out);

/// iter,time_s,rel_error with 17 significant digits.
void write_metrics_csv(const std::vector<IterationRecord>& history, std::ostream& out, bool zero_times = false);

std::string read_text(const std::filesystem::path& path);

}  // namespace tns
