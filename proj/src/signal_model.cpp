#include "harmgap/signal_model.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace harmgap {

std::size_t SegmentedSignal::total_samples() const {
    std::size_t n = 0;
    for (const auto& seg : segments) n += seg.samples.size();
    return n;
}

std::size_t SegmentedSignal::min_segment_length() const {
    if (segments.empty()) return 0;
    std::size_t k = std::numeric_limits<std::size_t>::max();
    for (const auto& seg : segments) k = std::min(k, seg.samples.size());
    return k;
}

Pole params_to_pole(const ComponentParams& c, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("params_to_pole: dt must be positive");
    if (!std::isfinite(c.damping) || !std::isfinite(c.angular_frequency) ||
        !std::isfinite(c.amplitude.real()) || !std::isfinite(c.amplitude.imag())) {
        throw std::invalid_argument("params_to_pole: non-finite component parameters");
    }
    return std::exp(Complex(c.damping * dt, c.angular_frequency * dt));
}

PoleParams pole_to_params(Pole z, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("pole_to_params: dt must be positive");
    if (z == Complex(0.0, 0.0)) throw DegeneratePoleError("pole_to_params: zero pole");
    double angle = std::arg(z);
    if (angle == -std::numbers::pi) angle = std::numbers::pi;  // arg in (-pi, pi]
    return {std::log(std::abs(z)) / dt, angle / (2.0 * std::numbers::pi * dt)};
}

SegmentedSignal synthesize(const HarmonicModel& model, double dt,
                           const std::vector<SegmentSpec>& segment_specs) {
    if (model.components.empty()) throw std::invalid_argument("synthesize: empty model");
    if (!(dt > 0.0)) throw std::invalid_argument("synthesize: dt must be positive");

    SegmentedSignal out;
    out.dt = dt;
    out.segments.reserve(segment_specs.size());
    for (const auto& spec : segment_specs) {
        if (spec.length < 1) throw std::invalid_argument("synthesize: segment length must be >= 1");
        Segment seg;
        seg.start_time = spec.start_time;
        seg.samples.resize(spec.length);
        for (std::size_t k = 0; k < spec.length; ++k) {
            const double t = spec.start_time + static_cast<double>(k) * dt;
            Complex acc = 0.0;
            for (const auto& c : model.components) {
                acc += c.amplitude * std::exp(Complex(c.damping * t, c.angular_frequency * t));
            }
            seg.samples[k] = acc;
        }
        out.segments.push_back(std::move(seg));
    }
    return out;
}

double mean_power(const SegmentedSignal& signal) {
    const std::size_t n = signal.total_samples();
    if (n == 0) throw std::invalid_argument("mean_power: signal has no samples");
    double acc = 0.0;
    for (const auto& seg : signal.segments) {
        for (const auto& y : seg.samples) acc += std::norm(y);
    }
    return acc / static_cast<double>(n);
}

SegmentedSignal add_noise(const SegmentedSignal& signal, double snr_db, std::uint64_t seed) {
    if (signal.total_samples() == 0) throw std::invalid_argument("add_noise: signal has no samples");
    if (std::isinf(snr_db) && snr_db > 0.0) return signal;
    if (!std::isfinite(snr_db)) throw std::invalid_argument("add_noise: snr_db must be finite or +inf");

    const double sigma = std::sqrt(mean_power(signal) / std::pow(10.0, snr_db / 10.0));
    std::mt19937_64 rng(seed);

    SegmentedSignal out = signal;
    for (auto& seg : out.segments) {
        for (auto& y : seg.samples) {
            // One Box-Muller pair per complex sample: radius sigma*sqrt(-ln u1),
            // uniform angle. Total variance sigma^2, half per quadrature.
            const double u1 = (static_cast<double>(rng() >> 11) + 1.0) * 0x1.0p-53;  // (0, 1]
            const double u2 = static_cast<double>(rng() >> 11) * 0x1.0p-53;          // [0, 1)
            const double r = sigma * std::sqrt(-std::log(u1));
            const double phi = 2.0 * std::numbers::pi * u2;
            y += Complex(r * std::cos(phi), r * std::sin(phi));
        }
    }
    return out;
}

}  // namespace harmgap
