#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace usckd {

// rf drive of one AOM. All arms share the same nominal carrier (80 MHz),
// which cancels in every inter-arm difference; only detune and the
// programmed rf phase offset are observable.
struct ArmDrive {
    double base_freq = 80e6;    // Hz
    double detune = 0.0;        // Hz away from the common carrier
    double phase_offset = 0.0;  // programmed rf phase, radians
};

struct ArmPair {
    ArmDrive upper;
    ArmDrive lower;
    double detune_difference() const { return upper.detune - lower.detune; }
    double offset_difference() const { return upper.phase_offset - lower.phase_offset; }
};

// Convenience: put the whole detune/offset difference on the upper arm.
ArmPair make_arms(double detune_difference_hz, double phase_difference_rad = 0.0);

struct DriveSegment {
    double start_time = 0.0;  // s
    ArmPair bob;
    ArmPair alice;
};

// Phase ramp from manually rotating a thin glass plate in Alice's upper arm:
// zero before start_time, total_phase * x^exponent for x = (t-start)/duration
// in [0, 1], held at total_phase afterwards.
struct GlassRamp {
    double start_time = 0.0;
    double duration = 1.0;
    double total_phase = 2.0 * std::numbers::pi;
    double acceleration_exponent = 2.0;  // >= 1

    double value_at(double t) const;
    void validate() const;
};

enum class NoiseKind { None, RandomWalk };

struct NoiseModel {
    NoiseKind kind = NoiseKind::None;
    double sigma_per_sample = 0.0;  // radians per walk step
    std::uint64_t seed = 0;
};

const char* to_string(NoiseKind k);

// Piecewise AOM program. Frequency toggles preserve the accumulated phase
// (a segment boundary changes slope, not value); a change of phase_offset
// between segments is an explicit programmed rf phase step.
struct DriveSchedule {
    std::vector<DriveSegment> segments;
    std::optional<GlassRamp> ramp;

    // Fraction of the first-MZI fringe mixed into the final ports, for
    // reproducing imperfect isolation in bench data. 0 = ideal.
    double first_mzi_leakage = 0.0;

    void validate() const;
    double max_abs_detune() const;

    static DriveSchedule constant(ArmPair bob, ArmPair alice);
    // Appends a segment at time t with new detunes; rf offsets carry over.
    void toggle_detunes_at(double t, double bob_detune_hz, double alice_detune_hz);
};

enum class Side { Bob, Alice };

// Inter-arm phase difference (upper - lower) of the given side at time t,
// including the glass-ramp term on Alice's upper arm. Noise is added on top
// of this inside simulate_trace only.
// Throws std::domain_error("time before schedule start") for t < 0.
double phase_at(const DriveSchedule& schedule, Side side, double t);

struct TimeTrace {
    double sample_rate = 0.0;  // Hz
    double t0 = 0.0;           // s
    std::vector<double> i_a;      // coupled output, port A
    std::vector<double> i_b;      // coupled output, port B
    std::vector<double> i_alpha;  // first-MZI reference output

    std::size_t size() const { return i_a.size(); }
    double time_at(std::size_t k) const {
        return t0 + static_cast<double>(k) / sample_rate;
    }
};

// Samples phi(t), psi(t) and evaluates the fringe laws per sample. With
// RandomWalk noise, one independent walker per side perturbs the phase
// difference; energy is never touched (I_A + I_B == 1 per sample).
// Requires sample_rate > 4 * max |detune| (throws "undersampled" otherwise)
// and duration > 0.
TimeTrace simulate_trace(const DriveSchedule& schedule, const NoiseModel& noise,
                         double sample_rate, double duration);

struct DominantFrequency {
    double frequency_hz = 0.0;
    double resolution_hz = 0.0;  // one DFT bin, sample_rate / sample_count
    bool oscillating = false;    // false: constant channel, frequency_hz = 0
};

// Maximum-magnitude non-DC bin of the mean-subtracted DFT; ties resolve to
// the lowest frequency.
DominantFrequency dominant_frequency(std::span<const double> channel, double sample_rate);

// Constant port-A level after the final frequency toggle, which freezes
// phi - psi at its switch-time value. The final segment must have equal
// Bob/Alice detune differences (throws "not in USCKD regime" otherwise);
// schedules without a toggle are rejected.
double toggle_level(const DriveSchedule& schedule);

// Finds sigma_per_sample such that the mean RMS fluctuation of I_A over 100
// seeded trials of a window-long trace at the half-fringe operating point
// hits target_rms (fraction of input intensity, valid range (0, 0.5]).
// Throws std::domain_error mentioning the best achieved value when the
// target is unattainable.
NoiseModel calibrate_noise(double target_rms, double window_s, double sample_rate,
                           std::uint64_t seed = 0x75c5u);

// CSV export: header "t,I_A,I_B,I_alpha", one row per sample, 17 significant
// digits, LF line endings.
void write_csv(const TimeTrace& trace, std::ostream& os);
std::string to_csv(const TimeTrace& trace);

}  // namespace usckd
