#ifndef HARMGAP_SIGNAL_MODEL_HPP
#define HARMGAP_SIGNAL_MODEL_HPP

#include <complex>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace harmgap {

using Complex = std::complex<double>;

/// One complex-exponential term: amplitude * exp[(damping + j*angular_frequency) * t].
/// Any phase lives in the complex amplitude. damping <= 0 for decaying, 0 for undamped.
struct ComponentParams {
    Complex amplitude{1.0, 0.0};
    double damping = 0.0;            ///< 1/s
    double angular_frequency = 0.0;  ///< rad/s
};

/// Ordered component set; the model order is components.size(). Components must
/// map to pairwise distinct poles for any sampling interval in use.
struct HarmonicModel {
    std::vector<ComponentParams> components;

    std::size_t order() const { return components.size(); }
};

/// Per-sample ratio z = exp[(damping + j*angular_frequency) * dt].
/// |z| = 1 characterizes undamped components, |z| < 1 decaying ones.
using Pole = Complex;

/// One uniformly sampled run of complex data.
struct Segment {
    double start_time = 0.0;  ///< seconds
    std::vector<Complex> samples;
};

/// Segments sharing a common sampling interval. Start times are arbitrary
/// reals; inter-segment delays need not be multiples of dt.
struct SegmentedSignal {
    double dt = 0.0;  ///< seconds
    std::vector<Segment> segments;

    std::size_t segment_count() const { return segments.size(); }
    std::size_t total_samples() const;
    std::size_t min_segment_length() const;
};

/// Geometry request for synthesize().
struct SegmentSpec {
    double start_time = 0.0;  ///< seconds
    std::size_t length = 0;   ///< sample count, >= 1
};

/// Physical view of a pole at a given sampling interval.
struct PoleParams {
    double damping = 0.0;       ///< 1/s
    double frequency_hz = 0.0;  ///< in (-1/(2 dt), 1/(2 dt)]
};

struct DegeneratePoleError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

Pole params_to_pole(const ComponentParams& c, double dt);

/// Inverse of params_to_pole: damping = ln|z|/dt, frequency = arg(z)/(2 pi dt)
/// with arg taken in (-pi, pi]. Throws DegeneratePoleError for z = 0.
PoleParams pole_to_params(Pole z, double dt);

/// Noiseless samples of the model over the requested segments: segment i,
/// sample k is sum_n amplitude_n * exp[(damping_n + j w_n)(k dt + start_i)].
SegmentedSignal synthesize(const HarmonicModel& model, double dt,
                           const std::vector<SegmentSpec>& segment_specs);

/// Mean |sample|^2 over all segments.
double mean_power(const SegmentedSignal& signal);

/// Adds i.i.d. circular complex Gaussian noise with total variance
/// mean_power(signal) / 10^(snr_db/10); real and imaginary parts carry half
/// each. snr_db = +infinity returns the input unchanged. Deterministic and
/// platform-portable for a given seed: mt19937_64 draws fed through an
/// explicit Box-Muller transform (std::normal_distribution is
/// implementation-defined and would not reproduce across toolchains).
SegmentedSignal add_noise(const SegmentedSignal& signal, double snr_db, std::uint64_t seed);

}  // namespace harmgap

#endif  // HARMGAP_SIGNAL_MODEL_HPP
