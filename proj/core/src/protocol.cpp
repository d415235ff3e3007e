#include "usckd/protocol.hpp"

#include <stdexcept>

#include "json.hpp"

namespace usckd {

void DetectorConfig::validate() const {
    if (!(threshold > 0.0) || !(threshold < 1.0)) {
        throw std::invalid_argument("threshold must lie in (0, 1)");
    }
    if (erasure_band < 0.0 || erasure_band >= std::min(threshold, 1.0 - threshold)) {
        throw std::invalid_argument("erasure band must lie in [0, min(threshold, 1 - threshold))");
    }
}

PhaseBasis random_basis(Rng& rng) {
    return rng.bit() ? PhaseBasis::Pi : PhaseBasis::Zero;
}

PhaseBasis bob_prepare(Rng& rng) {
    return random_basis(rng);
}

std::optional<PhaseBasis> classify_alice(const PortIntensities& alice, const DetectorConfig& det) {
    if (alice.upper >= det.threshold + det.erasure_band) {
        return PhaseBasis::Pi;
    }
    if (alice.upper <= det.threshold - det.erasure_band) {
        return PhaseBasis::Zero;
    }
    return std::nullopt;
}

std::optional<bool> classify_bob(const PortIntensities& bob, const DetectorConfig& det) {
    if (bob.upper >= det.threshold + det.erasure_band) {
        return true;
    }
    if (bob.upper <= det.threshold - det.erasure_band) {
        return false;
    }
    return std::nullopt;
}

std::optional<PhaseBasis> alice_measure(double phi_actual, const DetectorConfig& det) {
    return classify_alice(mzi_intensities(phi_actual), det);
}

std::optional<bool> bob_verify(PhaseBasis phi, double psi_actual, const DetectorConfig& det) {
    return classify_bob(coupled_intensities(to_radians(phi), psi_actual), det);
}

int key_bit(PhaseBasis phi, PhaseBasis psi) {
    return phi == psi ? 1 : 0;
}

SessionResult run_session(int n_rounds, const NoiseModel& noise,
                          const DetectorConfig& det, std::uint64_t seed) {
    if (n_rounds < 1) {
        throw std::invalid_argument("n_rounds must be >= 1");
    }
    det.validate();

    Rng bob_rng(mix_seed(seed, 0));
    Rng alice_rng(mix_seed(seed, 1));
    Rng walk_phi_rng(mix_seed(seed, 2));
    Rng walk_psi_rng(mix_seed(seed, 3));
    const bool walk = noise.kind == NoiseKind::RandomWalk && noise.sigma_per_sample != 0.0;
    double w_phi = 0.0;
    double w_psi = 0.0;

    SessionResult result;
    result.rounds.reserve(static_cast<std::size_t>(n_rounds));
    long compared = 0;
    long mismatches = 0;

    for (int i = 0; i < n_rounds; ++i) {
        RoundRecord rec;
        rec.index = i;
        rec.phi = bob_prepare(bob_rng);
        if (walk) {
            w_phi += noise.sigma_per_sample * walk_phi_rng.gauss();
            w_psi += noise.sigma_per_sample * walk_psi_rng.gauss();
        }
        rec.phi_actual = to_radians(rec.phi) + w_phi;
        rec.alice_intensities = mzi_intensities(rec.phi_actual);
        rec.alice_inferred_phi = classify_alice(rec.alice_intensities, det);

        rec.psi = random_basis(alice_rng);
        rec.psi_actual = to_radians(rec.psi) + w_psi;
        rec.bob_intensities = coupled_intensities(to_radians(rec.phi), rec.psi_actual);
        rec.bob_inferred_match = classify_bob(rec.bob_intensities, det);

        if (rec.alice_inferred_phi && rec.bob_inferred_match) {
            rec.alice_bit = (*rec.alice_inferred_phi == rec.psi) ? 1 : 0;
            rec.bob_bit = *rec.bob_inferred_match ? 1 : 0;
            rec.key_bit = key_bit(rec.phi, rec.psi);
            result.alice_key.push_back(static_cast<char>('0' + *rec.alice_bit));
            result.bob_key.push_back(static_cast<char>('0' + *rec.bob_bit));
            ++compared;
            if (*rec.alice_bit != *rec.bob_bit) {
                ++mismatches;
            }
        } else {
            ++result.erasure_count;
        }
        result.rounds.push_back(rec);
    }
    result.bit_error_rate =
        compared > 0 ? static_cast<double>(mismatches) / static_cast<double>(compared) : 0.0;
    return result;
}

namespace {

nlohmann::json optional_int_json(const std::optional<int>& v) {
    if (v) {
        return *v;
    }
    return nullptr;
}

}  // namespace

std::string session_to_json(const SessionResult& result, int n_rounds,
                            const NoiseModel& noise, const DetectorConfig& det,
                            std::uint64_t seed, int indent) {
    nlohmann::json j;
    j["params"] = {
        {"n_rounds", n_rounds},
        {"noise",
         {{"kind", to_string(noise.kind)},
          {"sigma_per_sample", noise.sigma_per_sample},
          {"seed", noise.seed}}},
        {"detectors", {{"threshold", det.threshold}, {"erasure_band", det.erasure_band}}},
    };
    j["seed"] = seed;
    j["bob_key"] = result.bob_key;
    j["alice_key"] = result.alice_key;
    j["ber"] = result.bit_error_rate;
    j["erasures"] = result.erasure_count;

    nlohmann::json rounds = nlohmann::json::array();
    for (const RoundRecord& rec : result.rounds) {
        nlohmann::json r;
        r["index"] = rec.index;
        r["phi"] = to_radians(rec.phi);
        r["psi"] = to_radians(rec.psi);
        r["phi_actual"] = rec.phi_actual;
        r["psi_actual"] = rec.psi_actual;
        r["i_alpha"] = rec.alice_intensities.upper;
        r["i_beta"] = rec.alice_intensities.lower;
        r["i_a"] = rec.bob_intensities.upper;
        r["i_b"] = rec.bob_intensities.lower;
        r["alice_inferred_phi"] =
            rec.alice_inferred_phi ? nlohmann::json(to_radians(*rec.alice_inferred_phi)) : nullptr;
        r["bob_match"] = rec.bob_inferred_match ? nlohmann::json(*rec.bob_inferred_match) : nullptr;
        r["alice_bit"] = optional_int_json(rec.alice_bit);
        r["bob_bit"] = optional_int_json(rec.bob_bit);
        r["key_bit"] = optional_int_json(rec.key_bit);
        rounds.push_back(std::move(r));
    }
    j["rounds"] = std::move(rounds);
    return j.dump(indent) + "\n";
}

}  // namespace usckd
