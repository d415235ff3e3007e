#include "usckd/drive.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "usckd/interferometer.hpp"
#include "usckd/rng.hpp"

namespace usckd {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Accumulated phase of one arm at time t: programmed offset of the current
// segment plus the detune integral over all elapsed segments. The integral
// is what a phase-continuous synthesizer accumulates across frequency
// toggles.
double arm_phase(const DriveSchedule& schedule, Side side, bool upper, double t) {
    const auto& segments = schedule.segments;
    std::size_t k = 0;
    while (k + 1 < segments.size() && segments[k + 1].start_time <= t) {
        ++k;
    }
    const auto arm_of = [&](const DriveSegment& seg) -> const ArmDrive& {
        const ArmPair& pair = (side == Side::Bob) ? seg.bob : seg.alice;
        return upper ? pair.upper : pair.lower;
    };
    double integral = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
        integral += kTwoPi * arm_of(segments[j]).detune *
                    (segments[j + 1].start_time - segments[j].start_time);
    }
    integral += kTwoPi * arm_of(segments[k]).detune * (t - segments[k].start_time);
    return arm_of(segments[k]).phase_offset + integral;
}

}  // namespace

ArmPair make_arms(double detune_difference_hz, double phase_difference_rad) {
    ArmPair pair;
    pair.upper.detune = detune_difference_hz;
    pair.upper.phase_offset = phase_difference_rad;
    return pair;
}

double GlassRamp::value_at(double t) const {
    if (t <= start_time) {
        return 0.0;
    }
    if (t >= start_time + duration) {
        return total_phase;
    }
    const double x = (t - start_time) / duration;
    return total_phase * std::pow(x, acceleration_exponent);
}

void GlassRamp::validate() const {
    if (!(duration > 0.0)) {
        throw std::invalid_argument("glass ramp duration must be positive");
    }
    if (!(acceleration_exponent >= 1.0)) {
        throw std::invalid_argument("glass ramp acceleration exponent must be >= 1");
    }
    if (total_phase < 0.0) {
        throw std::invalid_argument("glass ramp total phase must be non-negative");
    }
}

const char* to_string(NoiseKind k) {
    return k == NoiseKind::RandomWalk ? "random_walk" : "none";
}

void DriveSchedule::validate() const {
    if (segments.empty()) {
        throw std::invalid_argument("schedule has no segments");
    }
    if (segments.front().start_time != 0.0) {
        throw std::invalid_argument("first segment must start at t = 0");
    }
    for (std::size_t i = 1; i < segments.size(); ++i) {
        if (!(segments[i].start_time > segments[i - 1].start_time)) {
            throw std::invalid_argument("segment start times must be strictly increasing");
        }
    }
    if (first_mzi_leakage < 0.0 || first_mzi_leakage > 1.0) {
        throw std::invalid_argument("leakage must lie in [0, 1]");
    }
    if (ramp) {
        ramp->validate();
    }
}

double DriveSchedule::max_abs_detune() const {
    double m = 0.0;
    for (const auto& seg : segments) {
        for (const ArmDrive* arm : {&seg.bob.upper, &seg.bob.lower, &seg.alice.upper, &seg.alice.lower}) {
            m = std::max(m, std::abs(arm->detune));
        }
    }
    return m;
}

DriveSchedule DriveSchedule::constant(ArmPair bob, ArmPair alice) {
    DriveSchedule s;
    s.segments.push_back({0.0, bob, alice});
    return s;
}

void DriveSchedule::toggle_detunes_at(double t, double bob_detune_hz, double alice_detune_hz) {
    if (segments.empty()) {
        throw std::invalid_argument("schedule has no segments");
    }
    DriveSegment seg = segments.back();
    seg.start_time = t;
    seg.bob.upper.detune = bob_detune_hz;
    seg.bob.lower.detune = 0.0;
    seg.alice.upper.detune = alice_detune_hz;
    seg.alice.lower.detune = 0.0;
    segments.push_back(seg);
}

double phase_at(const DriveSchedule& schedule, Side side, double t) {
    if (schedule.segments.empty()) {
        throw std::invalid_argument("schedule has no segments");
    }
    if (t < schedule.segments.front().start_time) {
        throw std::domain_error("time before schedule start");
    }
    const PhasePair arms{arm_phase(schedule, side, true, t),
                         arm_phase(schedule, side, false, t)};
    double diff = arms.difference();
    if (side == Side::Alice && schedule.ramp) {
        diff += schedule.ramp->value_at(t);
    }
    return diff;
}

TimeTrace simulate_trace(const DriveSchedule& schedule, const NoiseModel& noise,
                         double sample_rate, double duration) {
    schedule.validate();
    if (!(duration > 0.0)) {
        throw std::invalid_argument("duration must be positive");
    }
    if (!(sample_rate > 0.0) || sample_rate <= 4.0 * schedule.max_abs_detune()) {
        throw std::domain_error("undersampled: sample_rate must exceed 4x the largest arm detune");
    }
    const auto n = static_cast<std::size_t>(std::llround(duration * sample_rate));
    if (n == 0) {
        throw std::invalid_argument("duration too short for one sample");
    }

    const bool walk = noise.kind == NoiseKind::RandomWalk && noise.sigma_per_sample != 0.0;
    Rng rng_phi(mix_seed(noise.seed, 0));
    Rng rng_psi(mix_seed(noise.seed, 1));
    double w_phi = 0.0;
    double w_psi = 0.0;

    TimeTrace trace;
    trace.sample_rate = sample_rate;
    trace.t0 = 0.0;
    trace.i_a.reserve(n);
    trace.i_b.reserve(n);
    trace.i_alpha.reserve(n);

    const double eps = schedule.first_mzi_leakage;
    for (std::size_t k = 0; k < n; ++k) {
        const double t = static_cast<double>(k) / sample_rate;
        if (walk && k > 0) {
            w_phi += noise.sigma_per_sample * rng_phi.gauss();
            w_psi += noise.sigma_per_sample * rng_psi.gauss();
        }
        const double phi = phase_at(schedule, Side::Bob, t) + w_phi;
        const double psi = phase_at(schedule, Side::Alice, t) + w_psi;
        const PortIntensities first = mzi_intensities(phi);
        const PortIntensities coupled = coupled_intensities(phi, psi);
        trace.i_alpha.push_back(first.upper);
        trace.i_a.push_back((1.0 - eps) * coupled.upper + eps * first.upper);
        trace.i_b.push_back((1.0 - eps) * coupled.lower + eps * first.lower);
    }
    return trace;
}

DominantFrequency dominant_frequency(std::span<const double> channel, double sample_rate) {
    const std::size_t n = channel.size();
    DominantFrequency result;
    if (n == 0 || sample_rate <= 0.0) {
        return result;
    }
    result.resolution_hz = sample_rate / static_cast<double>(n);

    const auto [mn, mx] = std::minmax_element(channel.begin(), channel.end());
    if (*mn == *mx) {
        return result;  // flat channel: no oscillation
    }

    double mean = 0.0;
    for (double v : channel) {
        mean += v;
    }
    mean /= static_cast<double>(n);

    // Goertzel per bin on the mean-subtracted series; first strictly larger
    // magnitude wins, so ties go to the lowest frequency.
    double best_power = -1.0;
    std::size_t best_bin = 1;
    for (std::size_t bin = 1; bin <= n / 2; ++bin) {
        const double w = kTwoPi * static_cast<double>(bin) / static_cast<double>(n);
        const double coeff = 2.0 * std::cos(w);
        double s1 = 0.0;
        double s2 = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double s0 = (channel[j] - mean) + coeff * s1 - s2;
            s2 = s1;
            s1 = s0;
        }
        const double power = s1 * s1 + s2 * s2 - coeff * s1 * s2;
        if (power > best_power) {
            best_power = power;
            best_bin = bin;
        }
    }
    result.frequency_hz = static_cast<double>(best_bin) * result.resolution_hz;
    result.oscillating = true;
    return result;
}

double toggle_level(const DriveSchedule& schedule) {
    schedule.validate();
    if (schedule.segments.size() < 2) {
        throw std::invalid_argument("no toggle event in schedule");
    }
    const DriveSegment& last = schedule.segments.back();
    if (last.bob.detune_difference() != last.alice.detune_difference()) {
        throw std::domain_error("not in USCKD regime: post-toggle detune differences unequal");
    }
    const double t_s = last.start_time;
    return coupled_intensities(phase_at(schedule, Side::Bob, t_s),
                               phase_at(schedule, Side::Alice, t_s))
        .upper;
}

namespace {

// RMS of I_A about its window mean, averaged over seeded trials, for the
// static half-fringe operating point (phi - psi = pi/2).
double mean_rms_at_half_fringe(double sigma, double window_s, double sample_rate,
                               std::uint64_t seed, int trials) {
    DriveSchedule schedule =
        DriveSchedule::constant(make_arms(0.0, 0.0), make_arms(0.0, -std::numbers::pi / 2.0));
    double acc = 0.0;
    for (int trial = 0; trial < trials; ++trial) {
        NoiseModel noise{NoiseKind::RandomWalk, sigma, mix_seed(seed, 0x1000 + static_cast<std::uint64_t>(trial))};
        const TimeTrace trace = simulate_trace(schedule, noise, sample_rate, window_s);
        double mean = 0.0;
        for (double v : trace.i_a) {
            mean += v;
        }
        mean /= static_cast<double>(trace.size());
        double var = 0.0;
        for (double v : trace.i_a) {
            var += (v - mean) * (v - mean);
        }
        var /= static_cast<double>(trace.size());
        acc += std::sqrt(var);
    }
    return acc / trials;
}

}  // namespace

NoiseModel calibrate_noise(double target_rms, double window_s, double sample_rate,
                           std::uint64_t seed) {
    if (!(target_rms > 0.0) || target_rms > 0.5) {
        throw std::invalid_argument("target RMS must lie in (0, 0.5]");
    }
    if (!(window_s > 0.0) || !(sample_rate > 0.0)) {
        throw std::invalid_argument("window and sample rate must be positive");
    }
    constexpr int kTrials = 100;
    const auto measure = [&](double sigma) {
        return mean_rms_at_half_fringe(sigma, window_s, sample_rate, seed, kTrials);
    };

    // Bracket the target, then bisect. measure() is deterministic in (sigma,
    // seed) and increases with sigma until the uniform-phase plateau.
    double lo = 0.0;
    double hi = 1e-3;
    double best_sigma = hi;
    double best_rms = measure(hi);
    while (best_rms < target_rms && hi < 64.0) {
        lo = hi;
        hi *= 2.0;
        best_rms = measure(hi);
        best_sigma = hi;
    }
    if (best_rms < 0.8 * target_rms) {
        std::ostringstream msg;
        msg << "unattainable target RMS " << target_rms << "; best achieved " << best_rms;
        throw std::domain_error(msg.str());
    }
    double sigma = hi;
    double rms = best_rms;
    for (int iter = 0; iter < 48 && std::abs(rms - target_rms) > 0.05 * target_rms; ++iter) {
        sigma = 0.5 * (lo + hi);
        rms = measure(sigma);
        if (std::abs(rms - target_rms) < std::abs(best_rms - target_rms)) {
            best_rms = rms;
            best_sigma = sigma;
        }
        if (rms < target_rms) {
            lo = sigma;
        } else {
            hi = sigma;
        }
    }
    if (std::abs(best_rms - target_rms) > 0.2 * target_rms) {
        std::ostringstream msg;
        msg << "unattainable target RMS " << target_rms << "; best achieved " << best_rms;
        throw std::domain_error(msg.str());
    }
    return NoiseModel{NoiseKind::RandomWalk, best_sigma, seed};
}

void write_csv(const TimeTrace& trace, std::ostream& os) {
    os << "t,I_A,I_B,I_alpha\n";
    char row[160];
    for (std::size_t k = 0; k < trace.size(); ++k) {
        std::snprintf(row, sizeof(row), "%.17g,%.17g,%.17g,%.17g\n", trace.time_at(k),
                      trace.i_a[k], trace.i_b[k], trace.i_alpha[k]);
        os << row;
    }
}

std::string to_csv(const TimeTrace& trace) {
    std::ostringstream os;
    write_csv(trace, os);
    return os.str();
}

}  // namespace usckd
