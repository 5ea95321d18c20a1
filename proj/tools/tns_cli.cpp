#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tns/io.hpp"
#include "tns/verify.hpp"

namespace fs = std::filesystem;
using namespace tns;

namespace {

struct GenArgs {
    std::string kind = "cp";
    std::vector<Index> dims;
    Index rank = 3;
    double noise = 0.0;
    std::uint64_t seed = 0;
    std::string output;
    std::string signal_output;
};

struct DecomposeArgs {
    std::string input;
    std::string format = "cp";
    Index rank = 3;
    std::vector<Index> ranks;
    std::string mode = "exact";
    std::optional<Index> samples;
    std::optional<double> epsilon;
    std::optional<double> delta;
    double oversample = 1.0;
    Index iters = 50;
    double tol = 1e-4;
    std::uint64_t seed = 0;
    Index error_every = 1;
    std::string output = ".";
    bool deterministic = false;
};

struct SampleArgs {
    std::string input;
    std::optional<Index> samples;
    std::optional<double> epsilon;
    std::optional<double> delta;
    double oversample = 1.0;
    std::uint64_t seed = 0;
    std::string output;
};

struct VerifyArgs {
    std::string suite = "all";
    std::uint64_t seed = 1;
    bool json = false;
};

int run_gen(const GenArgs& a) {
    const Generated g = generate(GenSpec{parse_gen_kind(a.kind), a.dims, a.rank, a.noise, a.seed});
    write_tensor(g.data, a.output);
    if (!a.signal_output.empty()) write_tensor(g.signal, a.signal_output);
    return 0;
}

void add_sampling_options(CLI::App* app, std::optional<Index>& samples, std::optional<double>& epsilon,
                          std::optional<double>& delta, double& oversample) {
    app->add_option("--samples", samples, "Sample count J");
    app->add_option("--epsilon", epsilon, "Accuracy parameter for the sample-count bound");
    app->add_option("--delta", delta, "Failure probability for the sample-count bound");
    app->add_option("--oversample-c", oversample, "Constant in the sample-count bound")->capture_default_str();
}

int run_decompose(const DecomposeArgs& a) {
    const DenseTensor data = read_tensor(a.input);

    ALSConfig cfg;
    if (a.mode == "exact")
        cfg.mode = SolveMode::exact;
    else if (a.mode == "sampled")
        cfg.mode = SolveMode::sampled;
    else
        throw ParamError("--mode must be exact or sampled");
    cfg.samples = a.samples;
    cfg.epsilon = a.epsilon;
    cfg.delta = a.delta;
    cfg.oversample = a.oversample;
    cfg.max_iters = a.iters;
    cfg.rel_change_tol = a.tol;
    cfg.seed = a.seed;
    cfg.error_every = a.error_every;

    DecompositionResult result;
    std::string method;
    if (a.format == "cp") {
        result = cp_decompose(data, a.rank, cfg);
        method = "cp R=" + std::to_string(a.rank);
    } else if (a.format == "tr") {
        std::vector<Index> ranks = a.ranks;
        if (ranks.empty()) ranks.assign(static_cast<std::size_t>(data.order()), a.rank);
        if (static_cast<Index>(ranks.size()) != data.order())
            throw ParamError("--ranks needs one rank per data mode");
        result = tr_decompose(data, ranks, cfg);
        method = "tr";
    } else {
        result = decompose(data, load_format(a.format), cfg);
        method = fs::path(a.format).stem().string();
    }
    method += a.mode == "sampled" ? " sampled" : " exact";

    const fs::path out(a.output);
    fs::create_directories(out);
    {
        std::ofstream csv(out / "metrics.csv", std::ios::binary | std::ios::trunc);
        write_metrics_csv(result.history, csv, a.deterministic);
        if (!csv) throw Error("cannot write metrics.csv");
    }
    {
        std::ofstream log(out / "timing.log", std::ios::binary | std::ios::trunc);
        write_metrics_csv(result.history, log);
    }
    for (const auto& [id, t] : result.tensors) write_tensor(t, out / (id + ".tnsr"));

    const double time_s = result.history.empty() ? 0.0 : result.history.back().time_s;
    const double err = result.history.empty() ? 0.0 : result.history.back().rel_error;
    std::cout << std::left << std::setw(24) << "method" << std::right << std::setw(8) << "iters" << std::setw(14)
              << "time_s" << std::setw(16) << "rel_error" << '\n'
              << std::left << std::setw(24) << method << std::right << std::setw(8) << result.iterations
              << std::setw(14) << std::fixed << std::setprecision(3) << time_s << std::setw(16)
              << std::defaultfloat << std::setprecision(6) << err << '\n';
    return 0;
}

int run_sample(const SampleArgs& a) {
    const TNMatrix m = load_tn_matrix(a.input);
    if (a.samples.has_value() == (a.epsilon.has_value() || a.delta.has_value()))
        throw ParamError("give either --samples or --epsilon with --delta");
    if (!a.samples && !(a.epsilon && a.delta)) throw ParamError("--epsilon and --delta must be given together");
    const NetworkRowSampler sampler(m, compute_phi(m));
    const Index j = a.samples ? *a.samples : sample_size(sampler.phi().rank, *a.epsilon, *a.delta, a.oversample);
    const SketchSpec spec = draw_samples(sampler, j, a.seed);
    if (a.output.empty()) {
        write_sketch_csv(spec, std::cout);
    } else {
        std::ofstream out(a.output, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write '" + a.output + "'");
        write_sketch_csv(spec, out);
    }
    return 0;
}

int run_verify(const VerifyArgs& a) {
    auto results = run_suite(a.suite, a.seed);
    if (a.json) {
        nlohmann::json out = nlohmann::json::array();
        for (const auto& r : results)
            out.push_back({{"name", r.name},
                           {"status", r.skipped ? "skip" : r.passed ? "pass" : "fail"},
                           {"measured", r.measured},
                           {"threshold", r.threshold},
                           {"seconds", r.seconds},
                           {"detail", r.detail}});
        std::cout << out.dump(2) << '\n';
    } else {
        for (const auto& r : results) std::cout << format_check(r) << '\n';
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Tensor-network leverage-score sampling and ALS"};
    app.require_subcommand(1);

    GenArgs gen;
    auto* g = app.add_subcommand("gen", "Write a synthetic tensor");
    g->add_option("--kind", gen.kind, "cp, tr or noise")->capture_default_str();
    g->add_option("--dims", gen.dims, "Extents, e.g. --dims 20 20 20")->required()->delimiter(',');
    g->add_option("--rank", gen.rank, "Model rank")->capture_default_str();
    g->add_option("--noise", gen.noise, "Noise norm relative to the signal norm")->capture_default_str();
    g->add_option("--seed", gen.seed)->capture_default_str();
    g->add_option("--output", gen.output, "TNSR1 output path")->required();
    g->add_option("--signal-output", gen.signal_output, "Also write the noiseless signal");

    DecomposeArgs dec;
    auto* d = app.add_subcommand("decompose", "Fit a decomposition with exact or sampled ALS");
    d->add_option("--input", dec.input, "TNSR1 data tensor")->required();
    d->add_option("--format", dec.format, "cp, tr or a format description file")->capture_default_str();
    d->add_option("--rank", dec.rank, "CP rank, or uniform TR rank")->capture_default_str();
    d->add_option("--ranks", dec.ranks, "TR ranks, e.g. --ranks 5,5,5,5")->delimiter(',');
    d->add_option("--mode", dec.mode, "exact or sampled")->capture_default_str();
    add_sampling_options(d, dec.samples, dec.epsilon, dec.delta, dec.oversample);
    d->add_option("--iters", dec.iters, "Maximum sweeps")->capture_default_str();
    d->add_option("--tol", dec.tol, "Stop when the relative error change drops below this")->capture_default_str();
    d->add_option("--seed", dec.seed)->capture_default_str();
    d->add_option("--error-every", dec.error_every, "Evaluate the error every k sweeps")->capture_default_str();
    d->add_option("--output", dec.output, "Output directory")->capture_default_str();
    d->add_flag("--deterministic-metrics", dec.deterministic,
                "Write time_s as 0 in metrics.csv (timings stay in timing.log)");

    SampleArgs smp;
    auto* s = app.add_subcommand("sample", "Draw leverage-score row samples from a TN matrix file");
    s->add_option("--input", smp.input, "TN matrix description (JSON)")->required();
    add_sampling_options(s, smp.samples, smp.epsilon, smp.delta, smp.oversample);
    s->add_option("--seed", smp.seed)->capture_default_str();
    s->add_option("--output", smp.output, "CSV output path (default stdout)");

    VerifyArgs ver;
    auto* v = app.add_subcommand("verify", "Run property checks");
    v->add_option("suite", ver.suite, "exactness, gram, guarantee, monotonicity, recovery, reads, oracles or all")
        ->capture_default_str();
    v->add_option("--seed", ver.seed)->capture_default_str();
    v->add_flag("--json", ver.json, "Print a JSON report");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*g) return run_gen(gen);
        if (*d) return run_decompose(dec);
        if (*s) return run_sample(smp);
        if (*v) return run_verify(ver);
    } catch (const tns::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
