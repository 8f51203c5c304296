#include "harmgap/pencil.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

namespace harmgap {

namespace {

std::string segment_too_short_message(std::size_t index, std::size_t length, std::size_t p) {
    std::ostringstream os;
    os << "segment " << (index + 1) << " has " << length
       << " samples; pencil parameter " << p << " requires at least " << (p + 1);
    return os.str();
}

void validate_signal(const SegmentedSignal& signal) {
    if (!(signal.dt > 0.0)) throw std::invalid_argument("pencil: dt must be positive");
    if (signal.segments.empty()) throw std::invalid_argument("pencil: no segments");
    for (const auto& seg : signal.segments) {
        if (seg.samples.empty()) throw std::invalid_argument("pencil: empty segment");
    }
}

/// Full p-row stack recovered from the shifted halves: the first p-1 rows are
/// h_down, the final row is the last row of h_up.
MatrixC full_from_pair(const PencilPair& pair) {
    const Eigen::Index rows = pair.h_down.rows() + 1;
    MatrixC full(rows, pair.h_down.cols());
    full.topRows(rows - 1) = pair.h_down;
    full.row(rows - 1) = pair.h_up.row(pair.h_up.rows() - 1);
    return full;
}

struct SubspacePoles {
    std::vector<Pole> poles;
    VectorR spectrum;
    std::size_t order = 0;
};

/// Shared pole-extraction kernel. target is either the p-row stacked Hankel
/// (overlapping_split: drop last/first row of the basis) or the vertical
/// [h_down; h_up] stack (disjoint top/bottom halves). order = 0 auto-selects.
SubspacePoles poles_from_target(const MatrixC& target, bool overlapping_split,
                                std::size_t order, double order_threshold,
                                double rank_tol) {
    const Eigen::Index max_rank = std::min(target.rows(), target.cols());
    const SvdTruncation svd = svd_truncated(target, max_rank);

    SubspacePoles out;
    out.spectrum = svd.singular_values;

    out.order = order != 0 ? order : select_order(out.spectrum, order_threshold);
    const std::size_t n = out.order;

    // Rows of each split half: overlapping keeps rows-1 of them, the vertical
    // stack splits evenly. The shift operator needs at least n rows per half.
    const std::size_t split_rows =
        overlapping_split ? static_cast<std::size_t>(target.rows()) - 1
                          : static_cast<std::size_t>(target.rows()) / 2;
    if (n > split_rows || static_cast<Eigen::Index>(n) > max_rank ||
        !(out.spectrum(static_cast<Eigen::Index>(n) - 1) >= rank_tol * out.spectrum(0))) {
        std::ostringstream os;
        os << "order " << n << " exceeds the numerical rank of the data";
        throw RankDeficientError(
            os.str(), {out.spectrum.data(), out.spectrum.data() + out.spectrum.size()});
    }

    const MatrixC basis = svd.left_vectors.leftCols(static_cast<Eigen::Index>(n));
    MatrixC basis_down, basis_up;
    if (overlapping_split) {
        basis_down = basis.topRows(basis.rows() - 1);
        basis_up = basis.bottomRows(basis.rows() - 1);
    } else {
        const Eigen::Index half = basis.rows() / 2;
        basis_down = basis.topRows(half);
        basis_up = basis.bottomRows(half);
    }
    // One-sample shift acts on the signal subspace as an N x N operator whose
    // eigenvalues are the poles.
    const MatrixC shift_op = lstsq_matrix(basis_down, basis_up);
    out.poles = eig_square(shift_op);
    return out;
}

MatrixC svd_target_matrix(const MatrixC& full, SvdTarget target) {
    if (target == SvdTarget::hankel) return full;
    const Eigen::Index half = full.rows() - 1;
    MatrixC stacked(2 * half, full.cols());
    stacked.topRows(half) = full.topRows(half);
    stacked.bottomRows(half) = full.bottomRows(half);
    return stacked;
}

void sort_by_frequency(std::vector<Pole>& poles, double dt) {
    std::sort(poles.begin(), poles.end(), [dt](Pole a, Pole b) {
        const PoleParams pa = pole_to_params(a, dt);
        const PoleParams pb = pole_to_params(b, dt);
        if (pa.frequency_hz != pb.frequency_hz) return pa.frequency_hz < pb.frequency_hz;
        return pa.damping < pb.damping;
    });
}

/// Resolves p for a signal. An explicit p that starves any segment of
/// columns is reported as that segment being too short; the order-based
/// bound is checked after.
std::size_t resolve_for_signal(const SegmentedSignal& signal, const PencilConfig& cfg) {
    if (cfg.p != 0) {
        for (std::size_t i = 0; i < signal.segments.size(); ++i) {
            const std::size_t k = signal.segments[i].samples.size();
            if (k < cfg.p + 1) throw SegmentTooShortError(i, k, cfg.p);
        }
    }
    return resolve_pencil_parameter(cfg.p, signal.min_segment_length(), cfg.order);
}

EstimationResult assemble_result(const SegmentedSignal& signal, std::vector<Pole> poles,
                                 SubspacePoles&& sub, std::size_t p, bool order_auto) {
    sort_by_frequency(poles, signal.dt);
    AmplitudeFit fit = estimate_amplitudes(signal, poles);

    EstimationResult result;
    result.poles = std::move(poles);
    result.frequencies_hz.reserve(result.poles.size());
    result.dampings.reserve(result.poles.size());
    for (Pole z : result.poles) {
        const PoleParams params = pole_to_params(z, signal.dt);
        result.frequencies_hz.push_back(params.frequency_hz);
        result.dampings.push_back(params.damping);
    }
    result.amplitudes = std::move(fit.amplitudes);
    result.residuals = std::move(fit.residuals);

    result.diagnostics.singular_values = std::move(sub.spectrum);
    result.diagnostics.pencil_p = p;
    result.diagnostics.order = sub.order;
    result.diagnostics.order_auto_selected = order_auto;
    result.diagnostics.amplitude_ill_conditioned =
        std::any_of(fit.conditions.begin(), fit.conditions.end(),
                    [](double c) { return c > kConditionWarnThreshold; });
    result.diagnostics.amplitude_conditions = std::move(fit.conditions);
    return result;
}

}  // namespace

SegmentTooShortError::SegmentTooShortError(std::size_t index, std::size_t length, std::size_t p)
    : std::invalid_argument(segment_too_short_message(index, length, p)), segment_index(index) {}

RankDeficientError::RankDeficientError(const std::string& message,
                                       std::vector<double> observed_spectrum)
    : std::runtime_error(message), spectrum(std::move(observed_spectrum)) {}

MatrixC build_hankel(std::span<const Complex> samples, std::size_t p) {
    const std::size_t k = samples.size();
    if (p < 1 || p > k) throw std::invalid_argument("build_hankel: p out of range");
    const std::size_t cols = k - p + 1;
    MatrixC h(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(cols));
    for (std::size_t c = 0; c < cols; ++c) {
        for (std::size_t r = 0; r < p; ++r) {
            h(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = samples[r + c];
        }
    }
    return h;
}

PencilPair shift_pair(const MatrixC& h) {
    if (h.rows() < 2) throw std::invalid_argument("shift_pair: need at least two rows");
    return {h.topRows(h.rows() - 1), h.bottomRows(h.rows() - 1)};
}

MatrixC stack_hankel(const SegmentedSignal& signal, std::size_t p) {
    validate_signal(signal);
    if (p < 2) throw std::invalid_argument("stack_hankel: p must be >= 2");

    Eigen::Index total_cols = 0;
    for (std::size_t i = 0; i < signal.segments.size(); ++i) {
        const std::size_t k = signal.segments[i].samples.size();
        if (k < p + 1) throw SegmentTooShortError(i, k, p);
        total_cols += static_cast<Eigen::Index>(k - p + 1);
    }

    MatrixC stacked(static_cast<Eigen::Index>(p), total_cols);
    Eigen::Index col = 0;
    for (const auto& seg : signal.segments) {
        const Eigen::Index cols = static_cast<Eigen::Index>(seg.samples.size() - p + 1);
        stacked.middleCols(col, cols) = build_hankel(seg.samples, p);
        col += cols;
    }
    return stacked;
}

PencilPair stack_pencil(const SegmentedSignal& signal, const PencilConfig& cfg) {
    validate_signal(signal);
    return shift_pair(stack_hankel(signal, resolve_for_signal(signal, cfg)));
}

std::size_t select_order(const VectorR& singular_values, double threshold) {
    if (singular_values.size() == 0) {
        throw std::invalid_argument("select_order: empty spectrum");
    }
    if (!(singular_values(0) > 0.0)) {
        throw ZeroSignalError("select_order: all singular values are zero");
    }
    std::size_t order = 1;
    for (Eigen::Index i = 1; i < singular_values.size(); ++i) {
        if (singular_values(i) / singular_values(0) >= threshold) {
            order = static_cast<std::size_t>(i) + 1;
        }
    }
    return order;
}

std::size_t resolve_pencil_parameter(std::size_t requested_p, std::size_t k_min,
                                     std::size_t order) {
    if (k_min < 2) throw std::invalid_argument("pencil: shortest segment must have >= 2 samples");

    // With a known order the pencil needs N+1 <= p <= k_min - N so the basis
    // split keeps N rows and every segment contributes at least N+1 columns.
    std::size_t lo = 2;
    std::size_t hi = k_min - 1;
    if (order > 0) {
        lo = order + 1;
        if (k_min < 2 * order + 1) {
            std::ostringstream os;
            os << "pencil bound is empty: order " << order
               << " requires the shortest segment to have at least " << (2 * order + 1)
               << " samples (have " << k_min << ")";
            throw std::invalid_argument(os.str());
        }
        hi = k_min - order;
    }

    if (requested_p == 0) {
        return std::clamp(k_min / 2, lo, hi);
    }
    if (requested_p < lo || requested_p > hi) {
        std::ostringstream os;
        os << "pencil parameter " << requested_p << " outside the admissible bound ["
           << lo << ", " << hi << "] for order " << order << " and shortest segment "
           << k_min;
        throw std::invalid_argument(os.str());
    }
    return requested_p;
}

std::vector<Pole> estimate_poles(const PencilPair& pair, std::size_t order,
                                 const PencilConfig& cfg) {
    if (order < 1) throw std::invalid_argument("estimate_poles: order must be >= 1");
    if (pair.h_down.rows() != pair.h_up.rows() || pair.h_down.cols() != pair.h_up.cols() ||
        pair.h_down.size() == 0) {
        throw std::invalid_argument("estimate_poles: malformed pencil pair");
    }
    const MatrixC target =
        svd_target_matrix(full_from_pair(pair), cfg.svd_target);
    return poles_from_target(target, cfg.svd_target == SvdTarget::hankel, order,
                             cfg.order_threshold, cfg.rank_tol)
        .poles;
}

AmplitudeFit estimate_amplitudes(const SegmentedSignal& signal,
                                 const std::vector<Pole>& poles) {
    validate_signal(signal);
    const std::size_t n = poles.size();
    if (n == 0) throw std::invalid_argument("estimate_amplitudes: no poles");
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (poles[i] == poles[j]) {
                throw std::invalid_argument("estimate_amplitudes: poles must be pairwise distinct");
            }
        }
    }

    const std::size_t m = signal.segments.size();
    AmplitudeFit fit;
    fit.amplitudes.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
    fit.residuals.reserve(m);
    fit.conditions.reserve(m);

    for (std::size_t i = 0; i < m; ++i) {
        const auto& samples = signal.segments[i].samples;
        const std::size_t k = samples.size();
        if (k < n) throw std::invalid_argument("estimate_amplitudes: segment shorter than order");

        // Geometric-progression columns z_n^k; the segments decouple, so each
        // is an independent K_i x N solve.
        MatrixC vand(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(n));
        for (std::size_t j = 0; j < n; ++j) {
            Complex power = 1.0;
            for (std::size_t row = 0; row < k; ++row) {
                vand(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(j)) = power;
                power *= poles[j];
            }
        }
        const VectorC rhs = Eigen::Map<const VectorC>(samples.data(),
                                                      static_cast<Eigen::Index>(k));
        const LstsqResult ls = lstsq(vand, rhs);
        fit.amplitudes.row(static_cast<Eigen::Index>(i)) = ls.solution.transpose();

        const double rhs_norm = rhs.norm();
        const double res_norm = (vand * ls.solution - rhs).norm();
        fit.residuals.push_back(rhs_norm > 0.0 ? res_norm / rhs_norm : res_norm);
        fit.conditions.push_back(ls.condition);
    }
    return fit;
}

EstimationResult gmpa_estimate(const SegmentedSignal& signal, const PencilConfig& cfg) {
    validate_signal(signal);
    const std::size_t k_min = signal.min_segment_length();
    const std::size_t p = resolve_for_signal(signal, cfg);

    const MatrixC full = stack_hankel(signal, p);
    const MatrixC target = svd_target_matrix(full, cfg.svd_target);
    const bool order_auto = cfg.order == 0;

    SubspacePoles sub = poles_from_target(target, cfg.svd_target == SvdTarget::hankel,
                                          cfg.order, cfg.order_threshold, cfg.rank_tol);
    if (order_auto) {
        // The structural bound could not be checked before the order was known.
        resolve_pencil_parameter(p, k_min, sub.order);
    }
    std::vector<Pole> poles = sub.poles;
    return assemble_result(signal, std::move(poles), std::move(sub), p, order_auto);
}

std::vector<Complex> global_amplitudes(const EstimationResult& result,
                                       const SegmentedSignal& signal) {
    const auto m = static_cast<Eigen::Index>(signal.segments.size());
    const auto n = static_cast<Eigen::Index>(result.poles.size());
    if (result.amplitudes.rows() != m || result.amplitudes.cols() != n) {
        throw std::invalid_argument("global_amplitudes: result does not match signal");
    }
    std::vector<Complex> global(static_cast<std::size_t>(n), Complex(0.0, 0.0));
    for (Eigen::Index j = 0; j < n; ++j) {
        const Complex rate(result.dampings[static_cast<std::size_t>(j)],
                           2.0 * std::numbers::pi * result.frequencies_hz[static_cast<std::size_t>(j)]);
        for (Eigen::Index i = 0; i < m; ++i) {
            const double t_i = signal.segments[static_cast<std::size_t>(i)].start_time;
            global[static_cast<std::size_t>(j)] +=
                result.amplitudes(i, j) * std::exp(-rate * t_i);
        }
        global[static_cast<std::size_t>(j)] /= static_cast<double>(m);
    }
    return global;
}

EstimationResult mpa_estimate(const SegmentedSignal& signal, const PencilConfig& cfg) {
    validate_signal(signal);
    if (signal.segments.size() != 1) {
        throw std::invalid_argument("mpa_estimate: expects exactly one segment");
    }
    const std::size_t k = signal.segments[0].samples.size();
    const std::size_t p = resolve_for_signal(signal, cfg);

    const MatrixC hankel = build_hankel(signal.segments[0].samples, p);
    const MatrixC target = svd_target_matrix(hankel, cfg.svd_target);
    const bool order_auto = cfg.order == 0;

    SubspacePoles sub = poles_from_target(target, cfg.svd_target == SvdTarget::hankel,
                                          cfg.order, cfg.order_threshold, cfg.rank_tol);
    if (order_auto) {
        resolve_pencil_parameter(p, k, sub.order);
    }
    std::vector<Pole> poles = sub.poles;
    return assemble_result(signal, std::move(poles), std::move(sub), p, order_auto);
}

}  // namespace harmgap
