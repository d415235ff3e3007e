#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "usckd/field.hpp"
#include "usckd/protocol.hpp"

namespace usckd {

enum class TapPlacement { OutboundOnly, ReturnOnly, BothPasses };

// Beam-splitter tap pair on the two transmission lines: amplitude sqrt(r)
// diverted to Eve, sqrt(1-r) transmitted, independently per line.
struct TapConfig {
    double ratio = 0.0;  // r in [0, 1)
    TapPlacement placement = TapPlacement::OutboundOnly;

    void validate() const;
    bool taps_outbound() const;
    bool taps_return() const;
};

enum class Pass { Outbound, Return };

struct EveObservation {
    Pass pass = Pass::Outbound;
    double i_e1 = 0.0;  // tapped upper-line intensity
    double i_e2 = 0.0;  // tapped lower-line intensity
    // Outputs of Eve's own combining beam splitter fed with the two tapped
    // lines; conserves the tapped energy (upper + lower == i_e1 + i_e2).
    PortIntensities coherent;
};

// What Eve feeds her decision rule: bare line powers, or the ports of her
// interfering BS.
enum class EveStrategyKind { IntensityOnly, CoherentCombine };

const char* to_string(TapPlacement p);
const char* to_string(EveStrategyKind k);

// Splits a line field into (eve, through) = (sqrt(r) f, sqrt(1-r) f).
std::pair<TwoModeField, TwoModeField> tap(const TwoModeField& field, double ratio);

// Field on the two transmission lines, untapped. Outbound: after Bob's BS
// and his phase plates. Return: after Alice's mirror re-injection through
// her BS and her phase plates.
TwoModeField channel_fields(Pass pass, double phi, double psi);

// One full round trip with taps: Eve's per-pass observations plus the
// (attenuated) legitimate detector readings.
struct RoundTrip {
    EveObservation outbound;
    EveObservation ret;
    PortIntensities alice;  // (I_alpha, I_beta) Alice receives
    PortIntensities bob;    // (I_A, I_B) Bob receives
};

RoundTrip propagate_round_trip(double phi, double psi, const TapConfig& tap_cfg);

struct EveAccuracy {
    double phi = 0.5;  // probability of recovering Bob's basis
    double key = 0.5;  // probability of recovering the key bit
};

enum class EveMode { ExactEnumeration, MonteCarlo };

const char* to_string(EveMode m);

// Bayes-optimal guessing accuracy for the declared observable set, uniform
// prior over the four basis pairs. ExactEnumeration groups the (quantized)
// noiseless observations and scores the majority rule in closed form;
// MonteCarlo replays the same rule over n seeded draws.
EveAccuracy eve_accuracy(EveStrategyKind strategy, const TapConfig& tap_cfg,
                         EveMode mode, long n = 0, std::uint64_t seed = 0);

// I(key bit; observations) in bits, exact over the four equiprobable cases.
double mutual_information(EveStrategyKind strategy, const TapConfig& tap_cfg);

struct AttackedSessionResult {
    SessionResult session;
    std::vector<int> eve_phi_guess;  // basis bit per round
    std::vector<int> eve_key_guess;  // key bit per round
    double eve_accuracy_phi = 0.0;   // against the true bases, all rounds
    double eve_accuracy_key = 0.0;
};

// run_session with the taps in place: legitimate readings attenuated by
// (1-r) per tapped pass, Eve guessing per round from her observations.
// ratio = 0 reproduces run_session exactly.
AttackedSessionResult run_attacked_session(int n_rounds, const TapConfig& tap_cfg,
                                           EveStrategyKind strategy,
                                           const NoiseModel& noise,
                                           const DetectorConfig& det,
                                           std::uint64_t seed);

// JSON report {tap, strategy, mode, accuracy_phi, accuracy_key,
// mutual_information_bits, n, seed}.
std::string eve_report_json(EveStrategyKind strategy, const TapConfig& tap_cfg,
                            EveMode mode, const EveAccuracy& acc, double mi_bits,
                            long n, std::uint64_t seed, int indent = 2);

}  // namespace usckd
