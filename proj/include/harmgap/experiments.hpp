#ifndef HARMGAP_EXPERIMENTS_HPP
#define HARMGAP_EXPERIMENTS_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "harmgap/pencil.hpp"
#include "harmgap/signal_model.hpp"

namespace harmgap {

enum class Method {
    gmpa_all,              ///< joint estimation over all segments
    mpa_per_segment,       ///< classic pencil on each segment separately
    periodogram_baseline,  ///< zero-filled FFT-grid peak picker
};

std::string method_name(Method m);

/// One benchmark configuration: a ground-truth model, a sampling geometry,
/// and the Monte Carlo sweep to run over it.
struct Scenario {
    HarmonicModel model;
    double dt = 0.01;  ///< seconds
    std::vector<SegmentSpec> segments;
    double drift = 0.0;                       ///< extra start-time shift, seconds
    std::vector<std::size_t> drift_segments;  ///< segment indices the drift applies to
    std::vector<double> snr_grid_db;
    std::size_t runs = 200;
    std::uint64_t seed = 1;
    std::vector<Method> methods;
    PencilConfig pencil;
    double baseline_grid_hz = 0.125;  ///< periodogram frequency-grid spacing
};

struct ReportRow {
    std::string method;
    std::string segment_label;  ///< "all" or "segK"
    double snr_db = 0.0;
    double f_true_hz = 0.0;
    double rmse_hz = 0.0;
    double bias_hz = 0.0;
    std::size_t runs = 0;      ///< attempted runs
    std::size_t failures = 0;  ///< runs excluded from rmse/bias
};

struct MonteCarloReport {
    std::vector<ReportRow> rows;
};

/// Two undamped tones at 3 Hz (amplitude 1) and 8 Hz (amplitude 0.8),
/// dt = 10 ms, three seconds of data with two gaps: segments of 80, 111 and
/// 62 samples starting at 0, 0.99 and 2.39 s. SNR sweep -10..20 dB in 2 dB
/// steps. drop_last_sample switches the third segment to 61 samples.
Scenario scenario_4a(bool drop_last_sample = false);

/// scenario_4a with the second segment's start time shifted by delta_t, a
/// non-integer fraction of the sampling interval.
Scenario scenario_4b(double delta_t = 0.004);

/// scenario_4a geometry with tones at 8 Hz and 11.4 Hz; adds the
/// periodogram baseline on its 0.125 Hz grid, where 11.4 Hz falls between
/// grid points.
Scenario scenario_4c();

/// Clean samples of the scenario (drift applied, no noise).
SegmentedSignal synthesize_scenario(const Scenario& s);

/// sqrt(mean of squares). Throws std::invalid_argument on empty input.
double rmse(std::span<const double> errors);

/// Mean of squares. Throws std::invalid_argument on empty input.
double mean_squared_error(std::span<const double> errors);

/// Greedy nearest-frequency assignment: repeatedly pairs the globally
/// closest (estimate, truth) and returns signed errors estimate - truth in
/// truth order. Requires at least as many estimates as truths.
std::vector<double> match_frequencies(std::span<const double> estimated,
                                      std::span<const double> truth);

/// Frequencies of the n strongest peaks of the zero-filled spectrum sampled
/// on a uniform grid of spacing grid_hz. Samples must sit on the integer dt
/// grid; the grid spacing must divide the sampling rate. A stand-in for
/// grid-search estimators, deliberately subject to their off-grid error.
std::vector<double> periodogram_estimate(const SegmentedSignal& signal, double grid_hz,
                                         std::size_t n_components);

/// Stable per-run seed: a splitmix64 chain over (master, snr index, run
/// index), so any subset of the sweep can be recomputed independently.
std::uint64_t derive_run_seed(std::uint64_t master, std::size_t snr_index,
                              std::size_t run_index);

/// Runs the scenario's Monte Carlo sweep. Per-run estimator failures
/// (rank-deficient data) are counted and excluded from the error stats.
/// Deterministic for a given scenario regardless of max_threads
/// (0 = hardware concurrency).
MonteCarloReport run_monte_carlo(const Scenario& s, std::size_t max_threads = 0);

}  // namespace harmgap

#endif  // HARMGAP_EXPERIMENTS_HPP
