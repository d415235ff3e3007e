#include "usckd/adversary.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include "json.hpp"
#include "usckd/interferometer.hpp"
#include "usckd/rng.hpp"

namespace usckd {

void TapConfig::validate() const {
    if (ratio < 0.0 || ratio >= 1.0) {
        throw std::invalid_argument("tap ratio must lie in [0, 1)");
    }
}

bool TapConfig::taps_outbound() const {
    return placement == TapPlacement::OutboundOnly || placement == TapPlacement::BothPasses;
}

bool TapConfig::taps_return() const {
    return placement == TapPlacement::ReturnOnly || placement == TapPlacement::BothPasses;
}

const char* to_string(TapPlacement p) {
    switch (p) {
        case TapPlacement::OutboundOnly: return "outbound";
        case TapPlacement::ReturnOnly: return "return";
        case TapPlacement::BothPasses: return "both";
    }
    return "outbound";
}

const char* to_string(EveStrategyKind k) {
    return k == EveStrategyKind::IntensityOnly ? "intensity_only" : "coherent_combine";
}

const char* to_string(EveMode m) {
    return m == EveMode::ExactEnumeration ? "exact_enumeration" : "monte_carlo";
}

std::pair<TwoModeField, TwoModeField> tap(const TwoModeField& field, double ratio) {
    if (ratio < 0.0 || ratio >= 1.0) {
        throw std::invalid_argument("tap ratio must lie in [0, 1)");
    }
    const double eve_amp = std::sqrt(ratio);
    const double through_amp = std::sqrt(1.0 - ratio);
    return {TwoModeField{eve_amp * field.a, eve_amp * field.b},
            TwoModeField{through_amp * field.a, through_amp * field.b}};
}

TwoModeField channel_fields(Pass pass, double phi, double psi) {
    const TwoModeField input{{1.0, 0.0}, {}};
    const TwoModeField outbound = apply(make_phase(0.0, phi), apply(make_bs(), input));
    if (pass == Pass::Outbound) {
        return outbound;
    }
    // Alice receives through her BS and mirror-returns the full field through
    // the same BS and her phase plates back onto the lines.
    const TwoModeField at_alice = apply(make_bs(), outbound);
    return apply(make_phase(0.0, psi), apply(make_bs(), at_alice));
}

namespace {

EveObservation observe(Pass pass, const TwoModeField& eve_field) {
    EveObservation obs;
    obs.pass = pass;
    obs.i_e1 = std::norm(eve_field.a);
    obs.i_e2 = std::norm(eve_field.b);
    obs.coherent = intensities(apply(make_bs(), eve_field));
    return obs;
}

}  // namespace

RoundTrip propagate_round_trip(double phi, double psi, const TapConfig& tap_cfg) {
    tap_cfg.validate();
    RoundTrip rt;
    rt.outbound.pass = Pass::Outbound;
    rt.ret.pass = Pass::Return;

    const TwoModeField input{{1.0, 0.0}, {}};
    TwoModeField line = apply(make_phase(0.0, phi), apply(make_bs(), input));
    if (tap_cfg.taps_outbound()) {
        auto [eve, through] = tap(line, tap_cfg.ratio);
        rt.outbound = observe(Pass::Outbound, eve);
        line = through;
    }
    const TwoModeField at_alice = apply(make_bs(), line);
    rt.alice = intensities(at_alice);

    TwoModeField ret_line = apply(make_phase(0.0, psi), apply(make_bs(), at_alice));
    if (tap_cfg.taps_return()) {
        auto [eve, through] = tap(ret_line, tap_cfg.ratio);
        rt.ret = observe(Pass::Return, eve);
        ret_line = through;
    }
    rt.bob = intensities(apply(make_bs(), ret_line));
    return rt;
}

namespace {

constexpr double kQuantum = 1e-9;  // observation grouping tolerance

std::vector<double> observation_vector(EveStrategyKind kind, const TapConfig& tap_cfg,
                                       const RoundTrip& rt) {
    std::vector<double> obs;
    const auto push = [&](const EveObservation& o) {
        if (kind == EveStrategyKind::IntensityOnly) {
            obs.push_back(o.i_e1);
            obs.push_back(o.i_e2);
        } else {
            obs.push_back(o.coherent.upper);
            obs.push_back(o.coherent.lower);
        }
    };
    if (tap_cfg.taps_outbound()) {
        push(rt.outbound);
    }
    if (tap_cfg.taps_return()) {
        push(rt.ret);
    }
    return obs;
}

std::vector<long long> quantize(const std::vector<double>& obs) {
    std::vector<long long> q;
    q.reserve(obs.size());
    for (double v : obs) {
        q.push_back(std::llround(v / kQuantum));
    }
    return q;
}

// Bayes decision table over the four equiprobable basis pairs.
struct EnumerationTable {
    struct Group {
        std::vector<double> representative;
        std::array<int, 2> phi_counts{0, 0};
        std::array<int, 2> key_counts{0, 0};
        int total = 0;
    };
    std::vector<Group> groups;

    static EnumerationTable build(EveStrategyKind kind, const TapConfig& tap_cfg) {
        EnumerationTable table;
        std::map<std::vector<long long>, std::size_t> index;
        for (int phi_bit = 0; phi_bit < 2; ++phi_bit) {
            for (int psi_bit = 0; psi_bit < 2; ++psi_bit) {
                const double phi = to_radians(basis_from_bit(phi_bit));
                const double psi = to_radians(basis_from_bit(psi_bit));
                const RoundTrip rt = propagate_round_trip(phi, psi, tap_cfg);
                const std::vector<double> obs = observation_vector(kind, tap_cfg, rt);
                const auto key = quantize(obs);
                auto it = index.find(key);
                if (it == index.end()) {
                    it = index.emplace(key, table.groups.size()).first;
                    table.groups.push_back(Group{obs, {0, 0}, {0, 0}, 0});
                }
                Group& g = table.groups[it->second];
                g.phi_counts[phi_bit] += 1;
                g.key_counts[phi_bit == psi_bit ? 1 : 0] += 1;
                g.total += 1;
            }
        }
        return table;
    }

    const Group& nearest(const std::vector<double>& obs) const {
        double best = std::numeric_limits<double>::infinity();
        const Group* best_group = &groups.front();
        for (const Group& g : groups) {
            double d = 0.0;
            for (std::size_t i = 0; i < obs.size(); ++i) {
                const double diff = obs[i] - g.representative[i];
                d += diff * diff;
            }
            if (d < best) {
                best = d;
                best_group = &g;
            }
        }
        return *best_group;
    }

    static int majority(const std::array<int, 2>& counts, Rng& rng) {
        if (counts[0] > counts[1]) {
            return 0;
        }
        if (counts[1] > counts[0]) {
            return 1;
        }
        return rng.bit();
    }
};

}  // namespace

EveAccuracy eve_accuracy(EveStrategyKind strategy, const TapConfig& tap_cfg,
                         EveMode mode, long n, std::uint64_t seed) {
    tap_cfg.validate();
    const EnumerationTable table = EnumerationTable::build(strategy, tap_cfg);

    if (mode == EveMode::ExactEnumeration) {
        double phi_correct = 0.0;
        double key_correct = 0.0;
        for (const auto& g : table.groups) {
            phi_correct += std::max(g.phi_counts[0], g.phi_counts[1]);
            key_correct += std::max(g.key_counts[0], g.key_counts[1]);
        }
        return {phi_correct / 4.0, key_correct / 4.0};
    }

    if (n < 1) {
        throw std::invalid_argument("Monte-Carlo mode needs n >= 1");
    }
    Rng rng(mix_seed(seed, 0xe5e));
    long phi_hits = 0;
    long key_hits = 0;
    for (long i = 0; i < n; ++i) {
        const int phi_bit = rng.bit();
        const int psi_bit = rng.bit();
        const RoundTrip rt = propagate_round_trip(to_radians(basis_from_bit(phi_bit)),
                                                  to_radians(basis_from_bit(psi_bit)), tap_cfg);
        const auto obs = observation_vector(strategy, tap_cfg, rt);
        const auto& g = table.nearest(obs);
        if (EnumerationTable::majority(g.phi_counts, rng) == phi_bit) {
            ++phi_hits;
        }
        if (EnumerationTable::majority(g.key_counts, rng) == (phi_bit == psi_bit ? 1 : 0)) {
            ++key_hits;
        }
    }
    return {static_cast<double>(phi_hits) / static_cast<double>(n),
            static_cast<double>(key_hits) / static_cast<double>(n)};
}

double mutual_information(EveStrategyKind strategy, const TapConfig& tap_cfg) {
    tap_cfg.validate();
    const EnumerationTable table = EnumerationTable::build(strategy, tap_cfg);

    const auto entropy = [](double p0, double p1) {
        double h = 0.0;
        if (p0 > 0.0) {
            h -= p0 * std::log2(p0);
        }
        if (p1 > 0.0) {
            h -= p1 * std::log2(p1);
        }
        return h;
    };

    std::array<double, 2> marginal{0.0, 0.0};
    for (const auto& g : table.groups) {
        marginal[0] += g.key_counts[0];
        marginal[1] += g.key_counts[1];
    }
    const double h_key = entropy(marginal[0] / 4.0, marginal[1] / 4.0);

    double h_conditional = 0.0;
    for (const auto& g : table.groups) {
        const double p_group = static_cast<double>(g.total) / 4.0;
        h_conditional += p_group * entropy(static_cast<double>(g.key_counts[0]) / g.total,
                                           static_cast<double>(g.key_counts[1]) / g.total);
    }
    return std::max(0.0, h_key - h_conditional);
}

AttackedSessionResult run_attacked_session(int n_rounds, const TapConfig& tap_cfg,
                                           EveStrategyKind strategy,
                                           const NoiseModel& noise,
                                           const DetectorConfig& det,
                                           std::uint64_t seed) {
    if (n_rounds < 1) {
        throw std::invalid_argument("n_rounds must be >= 1");
    }
    tap_cfg.validate();
    det.validate();
    const EnumerationTable table = EnumerationTable::build(strategy, tap_cfg);

    // Same stream layout as run_session so ratio = 0 reproduces it exactly;
    // Eve's tie-break coins draw from their own stream.
    Rng bob_rng(mix_seed(seed, 0));
    Rng alice_rng(mix_seed(seed, 1));
    Rng walk_phi_rng(mix_seed(seed, 2));
    Rng walk_psi_rng(mix_seed(seed, 3));
    Rng eve_rng(mix_seed(seed, 4));
    const bool walk = noise.kind == NoiseKind::RandomWalk && noise.sigma_per_sample != 0.0;
    double w_phi = 0.0;
    double w_psi = 0.0;

    const double scale_out = tap_cfg.taps_outbound() ? 1.0 - tap_cfg.ratio : 1.0;
    const double scale_ret = tap_cfg.taps_return() ? 1.0 - tap_cfg.ratio : 1.0;

    AttackedSessionResult result;
    result.session.rounds.reserve(static_cast<std::size_t>(n_rounds));
    long compared = 0;
    long mismatches = 0;
    long eve_phi_hits = 0;
    long eve_key_hits = 0;

    for (int i = 0; i < n_rounds; ++i) {
        RoundRecord rec;
        rec.index = i;
        rec.phi = bob_prepare(bob_rng);
        if (walk) {
            w_phi += noise.sigma_per_sample * walk_phi_rng.gauss();
            w_psi += noise.sigma_per_sample * walk_psi_rng.gauss();
        }
        rec.phi_actual = to_radians(rec.phi) + w_phi;
        const PortIntensities alice_raw = mzi_intensities(rec.phi_actual);
        rec.alice_intensities = {scale_out * alice_raw.upper, scale_out * alice_raw.lower};
        rec.alice_inferred_phi = classify_alice(rec.alice_intensities, det);

        rec.psi = random_basis(alice_rng);
        rec.psi_actual = to_radians(rec.psi) + w_psi;
        const PortIntensities bob_raw = coupled_intensities(to_radians(rec.phi), rec.psi_actual);
        rec.bob_intensities = {scale_out * scale_ret * bob_raw.upper,
                               scale_out * scale_ret * bob_raw.lower};
        rec.bob_inferred_match = classify_bob(rec.bob_intensities, det);

        if (rec.alice_inferred_phi && rec.bob_inferred_match) {
            rec.alice_bit = (*rec.alice_inferred_phi == rec.psi) ? 1 : 0;
            rec.bob_bit = *rec.bob_inferred_match ? 1 : 0;
            rec.key_bit = key_bit(rec.phi, rec.psi);
            result.session.alice_key.push_back(static_cast<char>('0' + *rec.alice_bit));
            result.session.bob_key.push_back(static_cast<char>('0' + *rec.bob_bit));
            ++compared;
            if (*rec.alice_bit != *rec.bob_bit) {
                ++mismatches;
            }
        } else {
            ++result.session.erasure_count;
        }

        const RoundTrip rt = propagate_round_trip(rec.phi_actual, rec.psi_actual, tap_cfg);
        const auto obs = observation_vector(strategy, tap_cfg, rt);
        const auto& g = table.nearest(obs);
        const int phi_guess = EnumerationTable::majority(g.phi_counts, eve_rng);
        const int key_guess = EnumerationTable::majority(g.key_counts, eve_rng);
        result.eve_phi_guess.push_back(phi_guess);
        result.eve_key_guess.push_back(key_guess);
        if (phi_guess == basis_bit(rec.phi)) {
            ++eve_phi_hits;
        }
        if (key_guess == key_bit(rec.phi, rec.psi)) {
            ++eve_key_hits;
        }
        result.session.rounds.push_back(rec);
    }

    result.session.bit_error_rate =
        compared > 0 ? static_cast<double>(mismatches) / static_cast<double>(compared) : 0.0;
    result.eve_accuracy_phi = static_cast<double>(eve_phi_hits) / n_rounds;
    result.eve_accuracy_key = static_cast<double>(eve_key_hits) / n_rounds;
    return result;
}

std::string eve_report_json(EveStrategyKind strategy, const TapConfig& tap_cfg,
                            EveMode mode, const EveAccuracy& acc, double mi_bits,
                            long n, std::uint64_t seed, int indent) {
    nlohmann::json j;
    j["tap"] = {{"ratio", tap_cfg.ratio}, {"placement", to_string(tap_cfg.placement)}};
    j["strategy"] = to_string(strategy);
    j["mode"] = to_string(mode);
    j["accuracy_phi"] = acc.phi;
    j["accuracy_key"] = acc.key;
    j["mutual_information_bits"] = mi_bits;
    j["n"] = n;
    j["seed"] = seed;
    return j.dump(indent) + "\n";
}

}  // namespace usckd
