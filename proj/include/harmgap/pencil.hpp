#ifndef HARMGAP_PENCIL_HPP
#define HARMGAP_PENCIL_HPP

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "harmgap/linalg.hpp"
#include "harmgap/signal_model.hpp"

namespace harmgap {

/// Which matrix the noisy-case truncated SVD runs on. Both choices span the
/// same signal subspace on clean data; they differ only in how noise enters.
enum class SvdTarget {
    hankel,      ///< the p-row stacked Hankel matrix (default)
    pair_stack,  ///< the vertical stack [h_down; h_up]
};

struct PencilConfig {
    /// Hankel row count. 0 picks floor(K_min/2) clamped into [N+1, K_min-N];
    /// rows between a third and half of the shortest segment give the best
    /// noise robustness.
    std::size_t p = 0;
    /// Model order N. 0 selects the order from the singular-value spectrum
    /// using order_threshold.
    std::size_t order = 0;
    /// Auto-selection keeps the largest r with sigma_r/sigma_1 >= threshold.
    double order_threshold = 1e-2;
    /// Relative singular-value floor below which a requested order is
    /// rejected as exceeding the numerical rank.
    double rank_tol = 1e-12;
    SvdTarget svd_target = SvdTarget::hankel;
};

/// Row-shifted halves of a (stacked) Hankel matrix. Column j of h_up is the
/// one-sample-advanced window of column j of h_down.
struct PencilPair {
    MatrixC h_down;  ///< rows 0..p-2 of each segment block, concatenated
    MatrixC h_up;    ///< rows 1..p-1 of each segment block, concatenated
};

struct Diagnostics {
    VectorR singular_values;  ///< spectrum of the SVD target
    std::size_t pencil_p = 0;
    std::size_t order = 0;
    bool order_auto_selected = false;
    std::vector<double> amplitude_conditions;  ///< per-segment Vandermonde condition
    bool amplitude_ill_conditioned = false;    ///< any condition above 1e8
};

struct EstimationResult {
    std::vector<Pole> poles;  ///< sorted by ascending frequency
    std::vector<double> frequencies_hz;
    std::vector<double> dampings;  ///< 1/s
    MatrixC amplitudes;            ///< M x N per-segment complex amplitudes
    std::vector<double> residuals; ///< per-segment relative fit residual
    Diagnostics diagnostics;
};

struct SegmentTooShortError : std::invalid_argument {
    SegmentTooShortError(std::size_t index, std::size_t length, std::size_t p);
    std::size_t segment_index;
};

/// Requested order exceeds what the data supports; carries the observed
/// singular-value spectrum.
struct RankDeficientError : std::runtime_error {
    RankDeficientError(const std::string& message, std::vector<double> observed_spectrum);
    std::vector<double> spectrum;
};

struct ZeroSignalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// p x (K-p+1) Hankel matrix with entry (r, c) = samples[r + c].
MatrixC build_hankel(std::span<const Complex> samples, std::size_t p);

/// Drops the last row (h_down) and the first row (h_up) of h.
PencilPair shift_pair(const MatrixC& h);

/// Per-segment p-row Hankels concatenated column-wise in segment order.
/// Every segment must supply at least p+1 samples (SegmentTooShortError
/// otherwise); all segments share the same p so the blocks share one
/// row-space basis.
MatrixC stack_hankel(const SegmentedSignal& signal, std::size_t p);

/// Row-shifted halves of stack_hankel(signal, p) with p resolved from cfg.
PencilPair stack_pencil(const SegmentedSignal& signal, const PencilConfig& cfg);

/// Largest r with singular_values[r-1]/singular_values[0] >= threshold.
/// Throws ZeroSignalError on an all-zero spectrum.
std::size_t select_order(const VectorR& singular_values, double threshold);

/// Validates/derives the pencil parameter for the shortest segment length.
/// requested_p = 0 resolves to floor(k_min/2) clamped into the admissible
/// range; an explicit value outside the range throws std::invalid_argument.
/// With order = 0 (auto) only the structural bounds 2 <= p <= k_min-1 apply.
std::size_t resolve_pencil_parameter(std::size_t requested_p, std::size_t k_min,
                                     std::size_t order);

/// Signal poles from the shift structure of the pair: truncated SVD of the
/// configured target, then the eigenvalues of pinv(U_down) * U_up where
/// U_down/U_up are the subspace basis with last/first row dropped. Exact on
/// clean rank-N data; the standard total-least-squares realization otherwise.
std::vector<Pole> estimate_poles(const PencilPair& pair, std::size_t order,
                                 const PencilConfig& cfg = {});

struct AmplitudeFit {
    MatrixC amplitudes;              ///< M x N
    std::vector<double> residuals;   ///< per-segment relative residual
    std::vector<double> conditions;  ///< per-segment Vandermonde condition
};

/// Per-segment least-squares amplitude recovery: segment i's samples are fit
/// as sum_n a_in z_n^k independently of every other segment. Ill-conditioned
/// systems are solved anyway and reported through the condition estimates.
AmplitudeFit estimate_amplitudes(const SegmentedSignal& signal,
                                 const std::vector<Pole>& poles);

/// Full multi-segment estimation: stack, truncate, extract poles, recover
/// per-segment amplitudes. Deterministic.
EstimationResult gmpa_estimate(const SegmentedSignal& signal, const PencilConfig& cfg = {});

/// Global component amplitudes from the per-segment ones. Only meaningful
/// when the segment start times are trusted absolutely (the per-segment
/// amplitudes themselves never rely on them): each segment's amplitude is
/// rotated back by exp[-(damping + j w)(start_time)] and the segments are
/// averaged.
std::vector<Complex> global_amplitudes(const EstimationResult& result,
                                       const SegmentedSignal& signal);

/// Classic single-segment pencil estimation; requires exactly one segment.
EstimationResult mpa_estimate(const SegmentedSignal& signal, const PencilConfig& cfg = {});

}  // namespace harmgap

#endif  // HARMGAP_PENCIL_HPP
