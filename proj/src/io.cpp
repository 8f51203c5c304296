#include "harmgap/io.hpp"

#include <json.hpp>

#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string_view>

#include "harmgap/version.hpp"

namespace harmgap {

namespace {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

/// Writes through a sibling temp file and renames, so readers never see a
/// truncated file.
void atomic_write(const std::filesystem::path& path, const std::string& contents) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw FormatError("cannot open for writing: " + tmp.string());
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        if (!out) throw FormatError("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

double parse_double(std::string_view field, std::size_t line_no, const char* what) {
    double value = 0.0;
    const auto* end = field.data() + field.size();
    const auto [ptr, ec] = std::from_chars(field.data(), end, value);
    if (ec != std::errc() || ptr != end) {
        throw FormatError("row " + std::to_string(line_no) + ": bad " + what + " value '" +
                          std::string(field) + "'");
    }
    return value;
}

std::size_t parse_index(std::string_view field, std::size_t line_no, const char* what) {
    std::size_t value = 0;
    const auto* end = field.data() + field.size();
    const auto [ptr, ec] = std::from_chars(field.data(), end, value);
    if (ec != std::errc() || ptr != end) {
        throw FormatError("row " + std::to_string(line_no) + ": bad " + what + " value '" +
                          std::string(field) + "'");
    }
    return value;
}

constexpr std::string_view kSignalHeader = "segment_index,sample_index,time_s,re,im";
constexpr std::string_view kReportHeader =
    "method,segment_label,snr_db,f_true_hz,rmse_hz,bias_hz,runs,failures";

const char* svd_target_name(SvdTarget t) {
    return t == SvdTarget::hankel ? "hankel" : "pair_stack";
}

}  // namespace

void write_segments(const std::filesystem::path& path, const SegmentedSignal& signal) {
    std::ostringstream os;
    os << kSignalHeader << '\n';
    for (std::size_t i = 0; i < signal.segments.size(); ++i) {
        const Segment& seg = signal.segments[i];
        for (std::size_t k = 0; k < seg.samples.size(); ++k) {
            const double t = seg.start_time + static_cast<double>(k) * signal.dt;
            os << i << ',' << k << ',' << format_double(t) << ','
               << format_double(seg.samples[k].real()) << ','
               << format_double(seg.samples[k].imag()) << '\n';
        }
    }
    atomic_write(path, os.str());
}

SegmentedSignal load_segments(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open: " + path.string());

    std::string line;
    if (!std::getline(in, line)) throw FormatError("empty file: " + path.string());
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kSignalHeader) {
        throw FormatError("bad header, expected '" + std::string(kSignalHeader) + "'");
    }

    SegmentedSignal signal;
    double dt = 0.0;
    std::size_t dt_row = 0;  // row that established dt, for error messages
    double prev_time = 0.0;
    std::size_t prev_line = 0;
    std::size_t line_no = 1;

    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;

        std::string_view row(line);
        std::array<std::string_view, 5> fields;
        for (std::size_t f = 0; f < 5; ++f) {
            const std::size_t comma = row.find(',');
            if (f < 4) {
                if (comma == std::string_view::npos) {
                    throw FormatError("row " + std::to_string(line_no) + ": expected 5 fields");
                }
                fields[f] = row.substr(0, comma);
                row.remove_prefix(comma + 1);
            } else {
                if (comma != std::string_view::npos) {
                    throw FormatError("row " + std::to_string(line_no) + ": expected 5 fields");
                }
                fields[f] = row;
            }
        }

        const std::size_t seg_index = parse_index(fields[0], line_no, "segment_index");
        const std::size_t sample_index = parse_index(fields[1], line_no, "sample_index");
        const double time_s = parse_double(fields[2], line_no, "time_s");
        const double re = parse_double(fields[3], line_no, "re");
        const double im = parse_double(fields[4], line_no, "im");
        if (!std::isfinite(time_s) || !std::isfinite(re) || !std::isfinite(im)) {
            throw FormatError("row " + std::to_string(line_no) + ": non-finite value");
        }

        if (seg_index == signal.segments.size()) {
            if (sample_index != 0) {
                throw FormatError("row " + std::to_string(line_no) +
                                  ": segment must start at sample_index 0");
            }
            Segment seg;
            seg.start_time = time_s;
            signal.segments.push_back(std::move(seg));
        } else if (seg_index + 1 == signal.segments.size()) {
            if (sample_index != signal.segments.back().samples.size()) {
                throw FormatError("row " + std::to_string(line_no) +
                                  ": non-monotone sample_index");
            }
            // Within a segment consecutive rows are one sampling interval apart.
            const double delta = time_s - prev_time;
            if (dt == 0.0) {
                if (!(delta > 0.0)) {
                    throw FormatError("row " + std::to_string(line_no) +
                                      ": non-increasing time within segment");
                }
                dt = delta;
                dt_row = line_no;
            } else if (std::abs(delta - dt) > 1e-9 * std::max(std::abs(delta), dt)) {
                throw FormatError("rows " + std::to_string(prev_line) + "-" +
                                  std::to_string(line_no) + ": sampling interval " +
                                  format_double(delta) + " conflicts with " +
                                  format_double(dt) + " established at row " +
                                  std::to_string(dt_row));
            }
        } else {
            throw FormatError("row " + std::to_string(line_no) +
                              ": segment_index out of order");
        }

        signal.segments.back().samples.emplace_back(re, im);
        prev_time = time_s;
        prev_line = line_no;
    }

    if (signal.segments.empty()) throw FormatError("no data rows in " + path.string());
    if (dt == 0.0) {
        throw FormatError("cannot infer sampling interval: no segment has two samples");
    }
    signal.dt = dt;
    return signal;
}

void write_result(const std::filesystem::path& path, const EstimationResult& result,
                  const PencilConfig& cfg, const std::string& input_path) {
    nlohmann::json doc;
    doc["format"] = 1;
    doc["tool"] = {{"name", kToolName}, {"version", kToolVersion}};
    doc["config"] = {
        {"pencil_p", result.diagnostics.pencil_p},
        {"order", result.diagnostics.order},
        {"order_auto_selected", result.diagnostics.order_auto_selected},
        {"order_threshold", cfg.order_threshold},
        {"rank_tol", cfg.rank_tol},
        {"svd_target", svd_target_name(cfg.svd_target)},
    };

    nlohmann::json poles = nlohmann::json::array();
    for (Pole z : result.poles) poles.push_back({{"re", z.real()}, {"im", z.imag()}});
    doc["poles"] = std::move(poles);
    doc["frequencies_hz"] = result.frequencies_hz;
    doc["dampings_per_s"] = result.dampings;

    nlohmann::json amplitudes = nlohmann::json::array();
    for (Eigen::Index i = 0; i < result.amplitudes.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index j = 0; j < result.amplitudes.cols(); ++j) {
            row.push_back({{"re", result.amplitudes(i, j).real()},
                           {"im", result.amplitudes(i, j).imag()}});
        }
        amplitudes.push_back(std::move(row));
    }
    doc["amplitudes"] = std::move(amplitudes);
    doc["residuals"] = result.residuals;

    std::vector<double> spectrum(result.diagnostics.singular_values.data(),
                                 result.diagnostics.singular_values.data() +
                                     result.diagnostics.singular_values.size());
    doc["diagnostics"] = {
        {"singular_values", spectrum},
        {"amplitude_conditions", result.diagnostics.amplitude_conditions},
        {"amplitude_ill_conditioned", result.diagnostics.amplitude_ill_conditioned},
    };
    doc["provenance"] = {{"input", input_path}, {"seed", nullptr}};

    atomic_write(path, doc.dump(2) + "\n");
}

void write_report(const std::filesystem::path& path, const MonteCarloReport& report) {
    std::ostringstream os;
    os << kReportHeader << '\n';
    for (const ReportRow& row : report.rows) {
        os << row.method << ',' << row.segment_label << ',' << format_double(row.snr_db)
           << ',' << format_double(row.f_true_hz) << ',' << format_double(row.rmse_hz)
           << ',' << format_double(row.bias_hz) << ',' << row.runs << ',' << row.failures
           << '\n';
    }
    atomic_write(path, os.str());
}

}  // namespace harmgap
