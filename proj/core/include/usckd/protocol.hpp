#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "usckd/drive.hpp"
#include "usckd/interferometer.hpp"
#include "usckd/rng.hpp"

namespace usckd {

// Analog-to-bit discrimination policy for a detector pair. A reading inside
// (threshold - band, threshold + band) is inconclusive and erases the round.
struct DetectorConfig {
    double threshold = 0.5;     // fraction of input intensity
    double erasure_band = 0.1;  // half-width of the inconclusive band

    void validate() const;  // 0 < threshold < 1, 0 <= band < min(thr, 1-thr)
};

struct RoundRecord {
    int index = 0;
    PhaseBasis phi = PhaseBasis::Zero;  // Bob's prepared basis
    PhaseBasis psi = PhaseBasis::Zero;  // Alice's chosen basis
    double phi_actual = 0.0;  // basis angle + outbound channel noise, rad
    double psi_actual = 0.0;  // basis angle + return channel noise, rad
    PortIntensities alice_intensities;  // (I_alpha, I_beta) at Alice
    PortIntensities bob_intensities;    // (I_A, I_B) back at Bob
    std::optional<PhaseBasis> alice_inferred_phi;  // nullopt = erasure
    std::optional<bool> bob_inferred_match;        // nullopt = erasure
    std::optional<int> alice_bit;
    std::optional<int> bob_bit;
    std::optional<int> key_bit;  // XNOR of the true bases; nullopt if erased
};

struct SessionResult {
    std::vector<RoundRecord> rounds;
    std::string bob_key;    // '0'/'1' per kept round
    std::string alice_key;  // same length as bob_key
    int erasure_count = 0;
    double bit_error_rate = 0.0;  // mismatches / compared bits
};

PhaseBasis random_basis(Rng& rng);
PhaseBasis bob_prepare(Rng& rng);

// Threshold decisions on an already-computed detector reading; shared by the
// ideal and the attacked (attenuated) paths.
std::optional<PhaseBasis> classify_alice(const PortIntensities& alice, const DetectorConfig& det);
std::optional<bool> classify_bob(const PortIntensities& bob, const DetectorConfig& det);

// Alice reads (I_alpha, I_beta) for the perturbed phase and infers Bob's
// basis: Pi when I_alpha is above the band, Zero below, Erasure inside.
std::optional<PhaseBasis> alice_measure(double phi_actual, const DetectorConfig& det);

// Bob reads the coupled outputs for his basis against the perturbed return
// phase; match == true means the bases agree (port A bright).
std::optional<bool> bob_verify(PhaseBasis phi, double psi_actual, const DetectorConfig& det);

// Shared key bit: 1 iff phi == psi (port A bright in Table form).
int key_bit(PhaseBasis phi, PhaseBasis psi);

// Full deterministic round trip per round: Bob draws phi, channel adds a
// quasi-static noise offset, Alice infers phi and draws psi, the return
// channel adds its own offset, Bob verifies. Erased rounds are dropped from
// both keys; BER compares the two sifting-free keys.
SessionResult run_session(int n_rounds, const NoiseModel& noise,
                          const DetectorConfig& det, std::uint64_t seed);

// JSON transcript {params, seed, rounds[], bob_key, alice_key, ber,
// erasures}; keys sorted, LF endings, trailing newline.
std::string session_to_json(const SessionResult& result, int n_rounds,
                            const NoiseModel& noise, const DetectorConfig& det,
                            std::uint64_t seed, int indent = 2);

}  // namespace usckd
