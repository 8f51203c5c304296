#include "harmgap/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <numbers>
#include <thread>

namespace harmgap {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

HarmonicModel two_tone_model(double f1_hz, double a1, double f2_hz, double a2) {
    HarmonicModel model;
    model.components = {
        {Complex(a1, 0.0), 0.0, kTwoPi * f1_hz},
        {Complex(a2, 0.0), 0.0, kTwoPi * f2_hz},
    };
    return model;
}

std::vector<double> snr_sweep(double lo_db, double hi_db, double step_db) {
    std::vector<double> grid;
    for (double snr = lo_db; snr <= hi_db + 1e-9; snr += step_db) grid.push_back(snr);
    return grid;
}

/// One (method, segment) error stream of the report.
struct Stream {
    Method method;
    std::string label;
    int segment = -1;  ///< -1 = all segments
};

std::vector<Stream> enumerate_streams(const Scenario& s) {
    std::vector<Stream> streams;
    for (Method m : s.methods) {
        switch (m) {
            case Method::gmpa_all:
            case Method::periodogram_baseline:
                streams.push_back({m, "all", -1});
                break;
            case Method::mpa_per_segment:
                for (std::size_t i = 0; i < s.segments.size(); ++i) {
                    streams.push_back({m, "seg" + std::to_string(i + 1), static_cast<int>(i)});
                }
                break;
        }
    }
    return streams;
}

std::vector<double> run_stream(const Stream& stream, const SegmentedSignal& noisy,
                               const Scenario& s) {
    switch (stream.method) {
        case Method::gmpa_all:
            return gmpa_estimate(noisy, s.pencil).frequencies_hz;
        case Method::mpa_per_segment: {
            SegmentedSignal single;
            single.dt = noisy.dt;
            single.segments = {noisy.segments[static_cast<std::size_t>(stream.segment)]};
            return mpa_estimate(single, s.pencil).frequencies_hz;
        }
        case Method::periodogram_baseline:
            return periodogram_estimate(noisy, s.baseline_grid_hz, s.model.order());
    }
    throw std::logic_error("run_stream: unknown method");
}

struct RunCell {
    bool failed = false;
    std::vector<double> errors;  ///< signed, aligned with the true components
};

}  // namespace

std::string method_name(Method m) {
    switch (m) {
        case Method::gmpa_all: return "gmpa_all";
        case Method::mpa_per_segment: return "mpa_per_segment";
        case Method::periodogram_baseline: return "periodogram_baseline";
    }
    throw std::logic_error("method_name: unknown method");
}

Scenario scenario_4a(bool drop_last_sample) {
    Scenario s;
    s.model = two_tone_model(3.0, 1.0, 8.0, 0.8);
    s.dt = 0.01;
    s.segments = {
        {0.0, 80},
        {0.99, 111},
        {2.39, drop_last_sample ? std::size_t{61} : std::size_t{62}},
    };
    s.snr_grid_db = snr_sweep(-10.0, 20.0, 2.0);
    s.runs = 200;
    s.seed = 1;
    s.methods = {Method::gmpa_all, Method::mpa_per_segment};
    s.pencil.order = 2;
    return s;
}

Scenario scenario_4b(double delta_t) {
    Scenario s = scenario_4a();
    s.drift = delta_t;
    s.drift_segments = {1};
    return s;
}

Scenario scenario_4c() {
    Scenario s = scenario_4a();
    s.model = two_tone_model(8.0, 1.0, 11.4, 0.8);
    s.methods.push_back(Method::periodogram_baseline);
    s.baseline_grid_hz = 0.125;
    return s;
}

SegmentedSignal synthesize_scenario(const Scenario& s) {
    std::vector<SegmentSpec> specs = s.segments;
    for (std::size_t index : s.drift_segments) {
        if (index >= specs.size()) {
            throw std::invalid_argument("synthesize_scenario: drift segment out of range");
        }
        specs[index].start_time += s.drift;
    }
    return synthesize(s.model, s.dt, specs);
}

double mean_squared_error(std::span<const double> errors) {
    if (errors.empty()) throw std::invalid_argument("mean_squared_error: empty input");
    double acc = 0.0;
    for (double e : errors) acc += e * e;
    return acc / static_cast<double>(errors.size());
}

double rmse(std::span<const double> errors) {
    return std::sqrt(mean_squared_error(errors));
}

std::vector<double> match_frequencies(std::span<const double> estimated,
                                      std::span<const double> truth) {
    if (estimated.size() < truth.size()) {
        throw std::invalid_argument("match_frequencies: fewer estimates than true components");
    }
    std::vector<double> errors(truth.size(), 0.0);
    std::vector<bool> est_used(estimated.size(), false);
    std::vector<bool> truth_used(truth.size(), false);
    for (std::size_t pick = 0; pick < truth.size(); ++pick) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t best_e = 0, best_t = 0;
        for (std::size_t e = 0; e < estimated.size(); ++e) {
            if (est_used[e]) continue;
            for (std::size_t t = 0; t < truth.size(); ++t) {
                if (truth_used[t]) continue;
                const double d = std::abs(estimated[e] - truth[t]);
                if (d < best) {
                    best = d;
                    best_e = e;
                    best_t = t;
                }
            }
        }
        est_used[best_e] = true;
        truth_used[best_t] = true;
        errors[best_t] = estimated[best_e] - truth[best_t];
    }
    return errors;
}

std::vector<double> periodogram_estimate(const SegmentedSignal& signal, double grid_hz,
                                         std::size_t n_components) {
    if (!(signal.dt > 0.0)) throw std::invalid_argument("periodogram: dt must be positive");
    if (!(grid_hz > 0.0)) throw std::invalid_argument("periodogram: grid spacing must be positive");
    if (n_components < 1) throw std::invalid_argument("periodogram: need at least one component");

    const double fs = 1.0 / signal.dt;
    const double bins = fs / grid_hz;
    const auto nfft = static_cast<long long>(std::llround(bins));
    if (nfft < 2 || std::abs(bins - static_cast<double>(nfft)) > 1e-6) {
        throw std::invalid_argument("periodogram: grid spacing must divide the sampling rate");
    }

    // Global sample positions on the integer dt grid; the zero-filled DFT is
    // evaluated directly over the retained samples only.
    std::vector<long long> index;
    std::vector<Complex> value;
    for (const auto& seg : signal.segments) {
        const double start = seg.start_time / signal.dt;
        const auto g0 = static_cast<long long>(std::llround(start));
        if (std::abs(start - static_cast<double>(g0)) > 1e-6) {
            throw std::invalid_argument(
                "periodogram: segment start times must sit on the sampling grid");
        }
        for (std::size_t k = 0; k < seg.samples.size(); ++k) {
            index.push_back(g0 + static_cast<long long>(k));
            value.push_back(seg.samples[k]);
        }
    }

    std::vector<Complex> twiddle(static_cast<std::size_t>(nfft));
    for (long long j = 0; j < nfft; ++j) {
        twiddle[static_cast<std::size_t>(j)] =
            std::polar(1.0, -kTwoPi * static_cast<double>(j) / static_cast<double>(nfft));
    }

    std::vector<double> magnitude(static_cast<std::size_t>(nfft), 0.0);
    for (long long m = 0; m < nfft; ++m) {
        Complex acc = 0.0;
        for (std::size_t k = 0; k < index.size(); ++k) {
            const long long g = ((index[k] % nfft) + nfft) % nfft;
            acc += value[k] * twiddle[static_cast<std::size_t>((m * g) % nfft)];
        }
        magnitude[static_cast<std::size_t>(m)] = std::abs(acc);
    }

    // Cyclic local maxima, strongest first; plain bins fill in if the
    // spectrum has fewer peaks than requested.
    const auto n = static_cast<std::size_t>(nfft);
    std::vector<std::size_t> peaks;
    for (std::size_t i = 0; i < n; ++i) {
        const double left = magnitude[(i + n - 1) % n];
        const double right = magnitude[(i + 1) % n];
        if (magnitude[i] > left && magnitude[i] >= right) peaks.push_back(i);
    }
    std::sort(peaks.begin(), peaks.end(),
              [&](std::size_t a, std::size_t b) { return magnitude[a] > magnitude[b]; });
    if (peaks.size() < n_components) {
        std::vector<std::size_t> rest;
        for (std::size_t i = 0; i < n; ++i) {
            if (std::find(peaks.begin(), peaks.end(), i) == peaks.end()) rest.push_back(i);
        }
        std::sort(rest.begin(), rest.end(),
                  [&](std::size_t a, std::size_t b) { return magnitude[a] > magnitude[b]; });
        peaks.insert(peaks.end(), rest.begin(), rest.end());
    }

    std::vector<double> freqs;
    for (std::size_t i = 0; i < n_components && i < peaks.size(); ++i) {
        double f = static_cast<double>(peaks[i]) * grid_hz;
        if (f > fs / 2.0) f -= fs;  // fold into (-fs/2, fs/2]
        freqs.push_back(f);
    }
    std::sort(freqs.begin(), freqs.end());
    return freqs;
}

std::uint64_t derive_run_seed(std::uint64_t master, std::size_t snr_index,
                              std::size_t run_index) {
    std::uint64_t h = splitmix64(master);
    h = splitmix64(h ^ static_cast<std::uint64_t>(snr_index + 1));
    h = splitmix64(h ^ static_cast<std::uint64_t>(run_index + 1));
    return h;
}

MonteCarloReport run_monte_carlo(const Scenario& s, std::size_t max_threads) {
    if (s.runs < 1) throw std::invalid_argument("run_monte_carlo: runs must be >= 1");
    if (s.snr_grid_db.empty()) throw std::invalid_argument("run_monte_carlo: empty SNR grid");
    if (s.methods.empty()) throw std::invalid_argument("run_monte_carlo: no methods");

    const SegmentedSignal clean = synthesize_scenario(s);
    std::vector<double> true_freqs;
    for (const auto& c : s.model.components) true_freqs.push_back(c.angular_frequency / kTwoPi);

    const std::vector<Stream> streams = enumerate_streams(s);
    const std::size_t n_snr = s.snr_grid_db.size();
    const std::size_t n_jobs = n_snr * s.runs;

    // Every (snr, run, stream) cell is filled independently, then reduced in a
    // fixed order; the result does not depend on the thread count.
    std::vector<RunCell> cells(n_jobs * streams.size());
    std::atomic<std::size_t> next_job{0};
    std::vector<std::exception_ptr> worker_errors(n_jobs);

    auto worker = [&]() {
        for (;;) {
            const std::size_t job = next_job.fetch_add(1);
            if (job >= n_jobs) return;
            const std::size_t si = job / s.runs;
            const std::size_t ri = job % s.runs;
            try {
                const SegmentedSignal noisy =
                    add_noise(clean, s.snr_grid_db[si], derive_run_seed(s.seed, si, ri));
                for (std::size_t st = 0; st < streams.size(); ++st) {
                    RunCell& cell = cells[job * streams.size() + st];
                    try {
                        const std::vector<double> est = run_stream(streams[st], noisy, s);
                        cell.errors = match_frequencies(est, true_freqs);
                    } catch (const RankDeficientError&) {
                        cell.failed = true;
                    } catch (const ZeroSignalError&) {
                        cell.failed = true;
                    }
                }
            } catch (...) {
                worker_errors[job] = std::current_exception();
            }
        }
    };

    std::size_t n_threads = max_threads != 0 ? max_threads : std::thread::hardware_concurrency();
    n_threads = std::clamp<std::size_t>(n_threads, 1, n_jobs);
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(n_threads);
        for (std::size_t i = 0; i < n_threads; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    for (const auto& err : worker_errors) {
        if (err) std::rethrow_exception(err);
    }

    MonteCarloReport report;
    for (std::size_t st = 0; st < streams.size(); ++st) {
        for (std::size_t si = 0; si < n_snr; ++si) {
            std::vector<std::vector<double>> per_freq(true_freqs.size());
            std::size_t failures = 0;
            for (std::size_t ri = 0; ri < s.runs; ++ri) {
                const RunCell& cell = cells[(si * s.runs + ri) * streams.size() + st];
                if (cell.failed) {
                    ++failures;
                    continue;
                }
                for (std::size_t f = 0; f < true_freqs.size(); ++f) {
                    per_freq[f].push_back(cell.errors[f]);
                }
            }
            for (std::size_t f = 0; f < true_freqs.size(); ++f) {
                ReportRow row;
                row.method = method_name(streams[st].method);
                row.segment_label = streams[st].label;
                row.snr_db = s.snr_grid_db[si];
                row.f_true_hz = true_freqs[f];
                if (!per_freq[f].empty()) {
                    row.rmse_hz = rmse(per_freq[f]);
                    double sum = 0.0;
                    for (double e : per_freq[f]) sum += e;
                    row.bias_hz = sum / static_cast<double>(per_freq[f].size());
                } else {
                    row.rmse_hz = std::numeric_limits<double>::quiet_NaN();
                    row.bias_hz = std::numeric_limits<double>::quiet_NaN();
                }
                row.runs = s.runs;
                row.failures = failures;
                report.rows.push_back(std::move(row));
            }
        }
    }
    return report;
}

}  // namespace harmgap
