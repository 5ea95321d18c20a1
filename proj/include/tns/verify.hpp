#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "tns/als.hpp"

namespace tns {

/// Outcome of one property check.
struct CheckResult {
    std::string name;
    bool passed = false;
    bool skipped = false;
    double measured = 0.0;
    double threshold = 0.0;
    std::string detail;
    double seconds = 0.0;
};

/// Random TN matrix plus whatever structure a fast path needs.
struct VerifyInstance {
    enum class Kind { cp, tr, generic };
    std::string name;
    Kind kind = Kind::generic;
    TNMatrix a;
    std::vector<DenseMatrix> factors;  // cp
    std::vector<DenseTensor> cores;    // tr
    Index excluded = 0;                // cp, tr
};

/// 8 CP designs (N in {3,4}, I in {3,5}, R in {2,3}), 4 TR designs (N=4, I=4,
/// R=2, each core left out once) and 8 hand-built networks, some rank deficient.
std::vector<VerifyInstance> verify_instances(std::uint64_t seed = 1);

/// Tensor with standard normal entries.
DenseTensor random_normal(const Dims& dims, std::uint64_t seed);

/// Product of sequential conditionals for every row of the sampler, in
/// linear row order.
Eigen::VectorXd sequential_probabilities(const RowSampler& sampler);

CheckResult check_exactness(std::uint64_t seed = 1);
CheckResult check_gram_equivalence(std::uint64_t seed = 1);
CheckResult check_sketch_guarantee(Index trials = 200, std::uint64_t seed = 1);
CheckResult check_monotonicity(std::uint64_t seed = 1);
CheckResult check_recovery(std::uint64_t seed = 1);
CheckResult check_read_count(std::uint64_t seed = 1);
/// Skipped unless a path is given.
CheckResult check_coil(const std::optional<std::string>& path);

/// "PASS|FAIL|SKIP name: detail (measured m, threshold t, s s)".
std::string format_check(const CheckResult& r);

/// Named suites: exactness, gram, guarantee, monotonicity, recovery, reads,
/// oracles (exactness + gram), all. Throws ParamError for an unknown name.
std::vector<CheckResult> run_suite(const std::string& suite, std::uint64_t seed = 1);

}  // namespace tns
