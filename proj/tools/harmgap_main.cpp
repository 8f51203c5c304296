#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <limits>
#include <numbers>
#include <string>

#include "harmgap/experiments.hpp"
#include "harmgap/io.hpp"
#include "harmgap/pencil.hpp"
#include "harmgap/signal_model.hpp"
#include "harmgap/version.hpp"

namespace {

using namespace harmgap;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitEstimation = 3;

struct SynthOptions {
    std::string scenario;
    std::string config_path;
    std::string out_path;
    double snr_db = std::numeric_limits<double>::infinity();
    std::uint64_t seed = 1;
    double delta_t = 0.004;
    bool trim_last_sample = false;
};

struct EstimateOptions {
    std::string in_path;
    std::string out_path;
    std::size_t order = 0;
    double auto_order_eps = 0.0;
    bool auto_order = false;
    std::size_t pencil_p = 0;
    bool svd_pair = false;
};

struct BenchOptions {
    std::string scenario;
    std::string out_path;
    std::size_t runs = 200;
    std::uint64_t seed = 1;
    double snr_min = -10.0;
    double snr_max = 20.0;
    double snr_step = 2.0;
    bool snr_override = false;
    std::size_t threads = 0;
    bool threads_given = false;
    double delta_t = 0.004;
    bool trim_last_sample = false;
};

Scenario build_scenario(const std::string& name, double delta_t, bool trim_last_sample) {
    Scenario s;
    if (name == "4a") {
        s = scenario_4a(trim_last_sample);
    } else if (name == "4b") {
        s = scenario_4b(delta_t);
        if (trim_last_sample) s.segments.back().length -= 1;
    } else if (name == "4c") {
        s = scenario_4c();
        if (trim_last_sample) s.segments.back().length -= 1;
    } else {
        throw std::invalid_argument("unknown scenario: " + name);
    }
    return s;
}

SegmentedSignal synth_custom(const std::string& config_path) {
    std::ifstream in(config_path);
    if (!in) throw FormatError("cannot open config: " + config_path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("bad config JSON: " + std::string(e.what()));
    }
    try {
        HarmonicModel model;
        for (const auto& c : doc.at("components")) {
            ComponentParams params;
            params.amplitude = Complex(c.value("amplitude_re", 1.0), c.value("amplitude_im", 0.0));
            params.damping = c.value("damping", 0.0);
            params.angular_frequency =
                2.0 * std::numbers::pi * c.at("frequency_hz").get<double>();
            model.components.push_back(params);
        }
        std::vector<SegmentSpec> specs;
        for (const auto& seg : doc.at("segments")) {
            specs.push_back({seg.at("start_time").get<double>(),
                             seg.at("length").get<std::size_t>()});
        }
        return synthesize(model, doc.at("dt").get<double>(), specs);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("bad config JSON: " + std::string(e.what()));
    }
}

int run_synth(const SynthOptions& opt) {
    SegmentedSignal signal;
    if (opt.scenario == "custom") {
        if (opt.config_path.empty()) {
            std::cerr << "synth: --scenario custom requires --config\n";
            return kExitUsage;
        }
        signal = synth_custom(opt.config_path);
    } else {
        signal = synthesize_scenario(build_scenario(opt.scenario, opt.delta_t, opt.trim_last_sample));
    }
    if (std::isfinite(opt.snr_db)) {
        signal = add_noise(signal, opt.snr_db, opt.seed);
    }
    write_segments(opt.out_path, signal);
    return kExitOk;
}

int run_estimate(const EstimateOptions& opt) {
    const SegmentedSignal signal = load_segments(opt.in_path);

    PencilConfig cfg;
    cfg.p = opt.pencil_p;
    cfg.svd_target = opt.svd_pair ? SvdTarget::pair_stack : SvdTarget::hankel;
    if (opt.auto_order) {
        cfg.order = 0;
        cfg.order_threshold = opt.auto_order_eps;
    } else {
        cfg.order = opt.order;
    }

    const EstimationResult result = gmpa_estimate(signal, cfg);
    write_result(opt.out_path, result, cfg, opt.in_path);
    return kExitOk;
}

int run_bench(const BenchOptions& opt) {
    Scenario s = build_scenario(opt.scenario, opt.delta_t, opt.trim_last_sample);
    s.runs = opt.runs;
    s.seed = opt.seed;
    if (opt.snr_override) {
        if (!(opt.snr_step > 0.0) || opt.snr_max < opt.snr_min) {
            std::cerr << "bench: bad SNR sweep\n";
            return kExitUsage;
        }
        s.snr_grid_db.clear();
        for (double snr = opt.snr_min; snr <= opt.snr_max + 1e-9; snr += opt.snr_step) {
            s.snr_grid_db.push_back(snr);
        }
    }

    std::size_t threads = 0;
    if (opt.threads_given) {
        threads = opt.threads;
    } else if (const char* env = std::getenv("HARMGAP_THREADS")) {
        char* end = nullptr;
        const unsigned long value = std::strtoul(env, &end, 10);
        if (end != env && *end == '\0' && value > 0) {
            threads = static_cast<std::size_t>(value);
        } else {
            std::cerr << "warning: ignoring invalid HARMGAP_THREADS='" << env << "'\n";
        }
    }

    const MonteCarloReport report = run_monte_carlo(s, threads);
    write_report(opt.out_path, report);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Super-resolution estimation of complex-exponential components from gapped, segmented samples"};
    app.set_version_flag("--version", std::string(kToolName) + " " + kToolVersion);
    app.require_subcommand(1);

    SynthOptions synth_opt;
    CLI::App* synth = app.add_subcommand("synth", "Synthesize a segmented signal CSV");
    synth->add_option("--scenario", synth_opt.scenario, "4a, 4b, 4c, or custom")
        ->required()
        ->check(CLI::IsMember({"4a", "4b", "4c", "custom"}));
    synth->add_option("--config", synth_opt.config_path, "JSON model/geometry for --scenario custom");
    synth->add_option("--snr-db", synth_opt.snr_db, "SNR in dB (omit for noiseless)");
    synth->add_option("--seed", synth_opt.seed, "noise seed");
    synth->add_option("--delta-t", synth_opt.delta_t, "second-segment start drift for 4b, seconds");
    synth->add_flag("--trim-last-sample", synth_opt.trim_last_sample,
                    "use 61 samples in the third canonical segment");
    synth->add_option("--out", synth_opt.out_path, "output signal CSV")->required();

    EstimateOptions est_opt;
    CLI::App* estimate = app.add_subcommand("estimate", "Estimate poles/amplitudes from a signal CSV");
    estimate->add_option("--in", est_opt.in_path, "input signal CSV")->required();
    CLI::Option* order_opt =
        estimate->add_option("--order", est_opt.order, "model order (number of components)")
            ->check(CLI::PositiveNumber);
    CLI::Option* auto_opt = estimate->add_option(
        "--auto-order", est_opt.auto_order_eps,
        "select the order from the singular-value spectrum with this ratio threshold");
    order_opt->excludes(auto_opt);
    estimate->add_option("--pencil", est_opt.pencil_p, "pencil parameter p (default: half the shortest segment)");
    estimate->add_flag("--svd-pair", est_opt.svd_pair,
                       "run the truncated SVD on the stacked shift pair instead of the Hankel matrix");
    estimate->add_option("--out", est_opt.out_path, "output result JSON")->required();

    BenchOptions bench_opt;
    CLI::App* bench = app.add_subcommand("bench", "Run a Monte Carlo benchmark sweep");
    bench->add_option("--scenario", bench_opt.scenario, "4a, 4b, or 4c")
        ->required()
        ->check(CLI::IsMember({"4a", "4b", "4c"}));
    bench->add_option("--runs", bench_opt.runs, "Monte Carlo runs per SNR point");
    bench->add_option("--seed", bench_opt.seed, "master seed");
    CLI::Option* snr_min = bench->add_option("--snr-min", bench_opt.snr_min, "sweep start, dB");
    CLI::Option* snr_max = bench->add_option("--snr-max", bench_opt.snr_max, "sweep end, dB");
    CLI::Option* snr_step = bench->add_option("--snr-step", bench_opt.snr_step, "sweep step, dB");
    bench->add_option("--threads", bench_opt.threads, "worker threads (0 = all cores)");
    bench->add_option("--delta-t", bench_opt.delta_t, "second-segment start drift for 4b, seconds");
    bench->add_flag("--trim-last-sample", bench_opt.trim_last_sample,
                    "use 61 samples in the third canonical segment");
    bench->add_option("--out", bench_opt.out_path, "output report CSV")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }
    bench_opt.snr_override = snr_min->count() || snr_max->count() || snr_step->count();
    bench_opt.threads_given = bench->count("--threads") > 0;
    est_opt.auto_order = estimate->count("--auto-order") > 0;
    if (estimate->parsed() && !est_opt.auto_order && estimate->count("--order") == 0) {
        std::cerr << "estimate: one of --order or --auto-order is required\n";
        return kExitUsage;
    }

    try {
        if (synth->parsed()) return run_synth(synth_opt);
        if (estimate->parsed()) return run_estimate(est_opt);
        if (bench->parsed()) return run_bench(bench_opt);
    } catch (const FormatError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitData;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitData;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "estimation failed: " << e.what() << '\n';
        return kExitEstimation;
    }
    return kExitUsage;
}
