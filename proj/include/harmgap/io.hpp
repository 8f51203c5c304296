#ifndef HARMGAP_IO_HPP
#define HARMGAP_IO_HPP

#include <filesystem>
#include <stdexcept>
#include <string>

#include "harmgap/experiments.hpp"
#include "harmgap/pencil.hpp"
#include "harmgap/signal_model.hpp"

namespace harmgap {

struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Signal CSV: header "segment_index,sample_index,time_s,re,im", rows sorted
/// by (segment_index, sample_index), LF line endings, 17 significant digits.
void write_segments(const std::filesystem::path& path, const SegmentedSignal& signal);

/// Loads a signal CSV. dt is inferred from within-segment time deltas and
/// checked consistent across all segments to 1e-9 relative; start times come
/// from each segment's first row. Throws FormatError (with the offending row
/// numbers) on schema violations, non-monotone sample indices, or mixed
/// sampling intervals.
SegmentedSignal load_segments(const std::filesystem::path& path);

/// Structured-text result document (JSON, schema field "format": 1) with the
/// estimate, the effective configuration, and provenance.
void write_result(const std::filesystem::path& path, const EstimationResult& result,
                  const PencilConfig& cfg, const std::string& input_path);

/// Report CSV: header "method,segment_label,snr_db,f_true_hz,rmse_hz,bias_hz,runs,failures".
void write_report(const std::filesystem::path& path, const MonteCarloReport& report);

}  // namespace harmgap

#endif  // HARMGAP_IO_HPP
