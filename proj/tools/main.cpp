// usckd: deterministic command-line front end for the coupled-MZI key
// distribution simulator. Subcommands: sweep, trace, keygen, eve.
//
// Option values resolve in layers: built-in defaults, then --preset, then
// --config (flat `key = value` file), then explicit flags. Every output
// embeds its resolved configuration and seed.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "usckd/adversary.hpp"
#include "usckd/drive.hpp"
#include "usckd/interferometer.hpp"
#include "usckd/protocol.hpp"
#include "usckd/rng.hpp"

namespace {

using usckd::ArmPair;
using usckd::DetectorConfig;
using usckd::DriveSchedule;
using usckd::GlassRamp;
using usckd::NoiseKind;
using usckd::NoiseModel;
using usckd::TimeTrace;

using ConfigMap = std::map<std::string, std::string>;

// Usage problems (bad values, bad files, unknown keys): exit code 1.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

double parse_double(const ConfigMap& cfg, const std::string& key) {
    const std::string& raw = cfg.at(key);
    try {
        std::size_t pos = 0;
        const double v = std::stod(raw, &pos);
        if (pos != raw.size()) {
            throw std::invalid_argument(raw);
        }
        return v;
    } catch (const std::exception&) {
        throw UsageError("invalid numeric value for '" + key + "': " + raw);
    }
}

long parse_long(const ConfigMap& cfg, const std::string& key) {
    const std::string& raw = cfg.at(key);
    try {
        std::size_t pos = 0;
        const long v = std::stol(raw, &pos);
        if (pos != raw.size()) {
            throw std::invalid_argument(raw);
        }
        return v;
    } catch (const std::exception&) {
        throw UsageError("invalid integer value for '" + key + "': " + raw);
    }
}

std::uint64_t parse_u64(const ConfigMap& cfg, const std::string& key) {
    const std::string& raw = cfg.at(key);
    try {
        std::size_t pos = 0;
        const std::uint64_t v = std::stoull(raw, &pos);
        if (pos != raw.size()) {
            throw std::invalid_argument(raw);
        }
        return v;
    } catch (const std::exception&) {
        throw UsageError("invalid seed value for '" + key + "': " + raw);
    }
}

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) {
        return "";
    }
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

// Flat `key = value` file; '#' starts a comment.
ConfigMap load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw UsageError("cannot read config file: " + path);
    }
    ConfigMap cfg;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) {
            line.erase(hash);
        }
        const std::string text = trim(line);
        if (text.empty()) {
            continue;
        }
        const auto eq = text.find('=');
        if (eq == std::string::npos) {
            throw UsageError("config line " + std::to_string(line_no) + " is not `key = value`");
        }
        cfg[trim(text.substr(0, eq))] = trim(text.substr(eq + 1));
    }
    return cfg;
}

void overlay(ConfigMap& base, const ConfigMap& layer, const std::string& origin) {
    for (const auto& [key, value] : layer) {
        if (base.find(key) == base.end()) {
            throw UsageError("unknown option '" + key + "' from " + origin);
        }
        base[key] = value;
    }
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw UsageError("cannot write output path: " + path.string());
    }
    out << content;
    if (!out) {
        throw UsageError("cannot write output path: " + path.string());
    }
}

nlohmann::json config_json(const ConfigMap& cfg) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [key, value] : cfg) {
        j[key] = value;
    }
    return j;
}

// ---- commands --------------------------------------------------------------

struct CommandSpec {
    ConfigMap defaults;
    std::map<std::string, ConfigMap> presets;
};

ConfigMap resolve(const CommandSpec& spec, const std::string& preset,
                  const std::string& config_path, const ConfigMap& cli) {
    ConfigMap cfg = spec.defaults;
    if (!preset.empty()) {
        const auto it = spec.presets.find(preset);
        if (it == spec.presets.end()) {
            std::string known;
            for (const auto& [name, unused] : spec.presets) {
                (void)unused;
                known += known.empty() ? name : ", " + name;
            }
            throw UsageError("unknown preset '" + preset + "' (available: " +
                             (known.empty() ? "none" : known) + ")");
        }
        overlay(cfg, it->second, "preset " + preset);
    }
    if (!config_path.empty()) {
        overlay(cfg, load_config_file(config_path), "config file " + config_path);
    }
    overlay(cfg, cli, "command line");
    return cfg;
}

int run_sweep(const ConfigMap& cfg) {
    const long resolution = parse_long(cfg, "resolution");
    if (resolution < 2) {
        throw UsageError("resolution must be >= 2");
    }
    std::ostringstream os;
    os << "# usckd sweep\n";
    for (const auto& [key, value] : cfg) {
        os << "# " << key << " = " << value << "\n";
    }
    os << "phi,psi,I_A,I_B\n";
    char row[160];
    for (long i = 0; i < resolution; ++i) {
        const double phi = 2.0 * std::numbers::pi * static_cast<double>(i) /
                           static_cast<double>(resolution - 1);
        for (long j = 0; j < resolution; ++j) {
            const double psi = 2.0 * std::numbers::pi * static_cast<double>(j) /
                               static_cast<double>(resolution - 1);
            const auto out = usckd::coupled_intensities(phi, psi);
            std::snprintf(row, sizeof(row), "%.17g,%.17g,%.17g,%.17g\n", phi, psi, out.upper,
                          out.lower);
            os << row;
        }
    }
    write_text_file(cfg.at("out"), os.str());
    return 0;
}

struct TraceSetup {
    DriveSchedule schedule;
    NoiseModel noise;
    double sample_rate = 0.0;
    double duration = 0.0;
    std::optional<double> toggle_time;
    std::optional<double> calibrated_sigma;
};

TraceSetup build_trace_setup(const ConfigMap& cfg) {
    TraceSetup setup;
    setup.sample_rate = parse_double(cfg, "sample-rate");
    setup.duration = parse_double(cfg, "duration");
    const double bob_detune = parse_double(cfg, "bob-detune");
    const double alice_detune = parse_double(cfg, "alice-detune");

    setup.schedule = DriveSchedule::constant(
        usckd::make_arms(bob_detune, parse_double(cfg, "phi-offset")),
        usckd::make_arms(alice_detune, parse_double(cfg, "psi-offset")));

    if (!cfg.at("toggle-at").empty()) {
        const double t = parse_double(cfg, "toggle-at");
        const double post_bob =
            cfg.at("post-bob-detune").empty() ? bob_detune : parse_double(cfg, "post-bob-detune");
        const double post_alice = cfg.at("post-alice-detune").empty()
                                      ? post_bob
                                      : parse_double(cfg, "post-alice-detune");
        setup.schedule.toggle_detunes_at(t, post_bob, post_alice);
        setup.toggle_time = t;
    }

    if (parse_double(cfg, "ramp-duration") > 0.0) {
        setup.schedule.ramp = GlassRamp{
            parse_double(cfg, "ramp-start"), parse_double(cfg, "ramp-duration"),
            parse_double(cfg, "ramp-phase"), parse_double(cfg, "ramp-exponent")};
    }
    setup.schedule.first_mzi_leakage = parse_double(cfg, "leakage");

    const std::uint64_t seed = parse_u64(cfg, "seed");
    if (!cfg.at("calibrate-rms").empty()) {
        NoiseModel model =
            usckd::calibrate_noise(parse_double(cfg, "calibrate-rms"), setup.duration,
                                   setup.sample_rate, usckd::mix_seed(seed, 0xca11));
        setup.calibrated_sigma = model.sigma_per_sample;
        model.seed = usckd::mix_seed(seed, 2);
        setup.noise = model;
    } else {
        const std::string& kind = cfg.at("noise");
        if (kind == "walk") {
            setup.noise = NoiseModel{NoiseKind::RandomWalk, parse_double(cfg, "noise-sigma"),
                                     usckd::mix_seed(seed, 2)};
        } else if (kind == "none") {
            setup.noise = NoiseModel{};
        } else {
            throw UsageError("noise must be 'none' or 'walk', got '" + kind + "'");
        }
    }
    return setup;
}

nlohmann::json window_stats(const TimeTrace& trace, std::size_t begin, std::size_t end) {
    nlohmann::json channels = nlohmann::json::object();
    const auto stat = [&](const std::vector<double>& series, const char* name) {
        const std::span<const double> window{series.data() + begin, end - begin};
        const auto peak = usckd::dominant_frequency(window, trace.sample_rate);
        double mean = 0.0;
        for (double v : window) {
            mean += v;
        }
        mean /= static_cast<double>(window.size());
        double var = 0.0;
        for (double v : window) {
            var += (v - mean) * (v - mean);
        }
        var /= static_cast<double>(window.size());
        channels[name] = {{"dominant_hz", peak.frequency_hz},
                          {"resolution_hz", peak.resolution_hz},
                          {"oscillating", peak.oscillating},
                          {"mean", mean},
                          {"variance", var},
                          {"rms_fluctuation", std::sqrt(var)}};
    };
    stat(trace.i_a, "I_A");
    stat(trace.i_b, "I_B");
    stat(trace.i_alpha, "I_alpha");
    return {{"t_start", trace.time_at(begin)},
            {"t_end", trace.time_at(end - 1)},
            {"samples", end - begin},
            {"channels", channels}};
}

int run_trace(const ConfigMap& cfg) {
    const TraceSetup setup = build_trace_setup(cfg);
    const TimeTrace trace =
        usckd::simulate_trace(setup.schedule, setup.noise, setup.sample_rate, setup.duration);

    const std::filesystem::path csv_path = cfg.at("out");
    write_text_file(csv_path, usckd::to_csv(trace));

    nlohmann::json summary;
    summary["command"] = "trace";
    summary["config"] = config_json(cfg);
    summary["seed"] = parse_u64(cfg, "seed");
    summary["samples"] = trace.size();
    summary["sample_rate"] = trace.sample_rate;
    if (setup.calibrated_sigma) {
        summary["calibrated_sigma"] = *setup.calibrated_sigma;
    }
    summary["windows"]["full"] = window_stats(trace, 0, trace.size());
    if (setup.toggle_time) {
        const auto split = static_cast<std::size_t>(
            std::ceil(*setup.toggle_time * trace.sample_rate));
        nlohmann::json toggle;
        toggle["time"] = *setup.toggle_time;
        if (split >= 2 && split + 2 <= trace.size()) {
            toggle["pre"] = window_stats(trace, 0, split);
            toggle["post"] = window_stats(trace, split, trace.size());
        }
        try {
            toggle["usckd_level"] = usckd::toggle_level(setup.schedule);
        } catch (const std::exception&) {
            toggle["usckd_level"] = nullptr;
        }
        summary["toggle"] = toggle;
    } else {
        summary["toggle"] = nullptr;
    }

    std::filesystem::path summary_path = csv_path;
    summary_path.replace_extension();
    summary_path += ".summary.json";
    write_text_file(summary_path, summary.dump(2) + "\n");
    return 0;
}

int run_keygen(const ConfigMap& cfg) {
    const long rounds = parse_long(cfg, "rounds");
    if (rounds < 1) {
        throw UsageError("rounds must be >= 1");
    }
    NoiseModel noise;
    const std::string& kind = cfg.at("noise");
    const std::uint64_t seed = parse_u64(cfg, "seed");
    if (kind == "walk") {
        noise = NoiseModel{NoiseKind::RandomWalk, parse_double(cfg, "noise-sigma"),
                           usckd::mix_seed(seed, 2)};
    } else if (kind != "none") {
        throw UsageError("noise must be 'none' or 'walk', got '" + kind + "'");
    }
    const DetectorConfig det{parse_double(cfg, "threshold"), parse_double(cfg, "erasure-band")};

    const usckd::SessionResult result =
        usckd::run_session(static_cast<int>(rounds), noise, det, seed);
    nlohmann::json j = nlohmann::json::parse(
        usckd::session_to_json(result, static_cast<int>(rounds), noise, det, seed));
    j["params"]["config"] = config_json(cfg);
    write_text_file(cfg.at("out"), j.dump(2) + "\n");

    if (noise.kind == NoiseKind::None && result.bit_error_rate != 0.0) {
        std::fprintf(stderr, "noiseless session produced BER %g\n", result.bit_error_rate);
        return 2;
    }
    return 0;
}

int run_eve(const ConfigMap& cfg) {
    usckd::TapConfig tap_cfg;
    tap_cfg.ratio = parse_double(cfg, "ratio");
    const std::string& placement = cfg.at("placement");
    if (placement == "outbound") {
        tap_cfg.placement = usckd::TapPlacement::OutboundOnly;
    } else if (placement == "return") {
        tap_cfg.placement = usckd::TapPlacement::ReturnOnly;
    } else if (placement == "both") {
        tap_cfg.placement = usckd::TapPlacement::BothPasses;
    } else {
        throw UsageError("placement must be outbound|return|both, got '" + placement + "'");
    }

    const std::string& strategy_name = cfg.at("strategy");
    usckd::EveStrategyKind strategy;
    if (strategy_name == "intensity_only") {
        strategy = usckd::EveStrategyKind::IntensityOnly;
    } else if (strategy_name == "coherent_combine") {
        strategy = usckd::EveStrategyKind::CoherentCombine;
    } else {
        throw UsageError("strategy must be intensity_only|coherent_combine, got '" +
                         strategy_name + "'");
    }

    const std::string& mode_name = cfg.at("mode");
    usckd::EveMode mode;
    if (mode_name == "exact") {
        mode = usckd::EveMode::ExactEnumeration;
    } else if (mode_name == "mc") {
        mode = usckd::EveMode::MonteCarlo;
    } else {
        throw UsageError("mode must be exact|mc, got '" + mode_name + "'");
    }

    const std::uint64_t seed = parse_u64(cfg, "seed");
    const long samples = parse_long(cfg, "samples");
    const long n = mode == usckd::EveMode::MonteCarlo ? samples : 4;
    const usckd::EveAccuracy acc = usckd::eve_accuracy(strategy, tap_cfg, mode, samples, seed);
    const double mi = usckd::mutual_information(strategy, tap_cfg);

    nlohmann::json j = nlohmann::json::parse(
        usckd::eve_report_json(strategy, tap_cfg, mode, acc, mi, n, seed));
    j["config"] = config_json(cfg);
    write_text_file(cfg.at("out"), j.dump(2) + "\n");
    return 0;
}

const double kPi = std::numbers::pi;

CommandSpec sweep_spec() {
    CommandSpec spec;
    spec.defaults = {{"resolution", "101"}, {"out", "sweep.csv"}, {"seed", "1"}};
    spec.presets["fig2"] = {{"resolution", "101"}};
    return spec;
}

CommandSpec trace_spec() {
    CommandSpec spec;
    spec.defaults = {
        {"sample-rate", "100"},   {"duration", "20"},
        {"bob-detune", "0"},      {"alice-detune", "0"},
        {"toggle-at", ""},        {"post-bob-detune", ""},
        {"post-alice-detune", ""},{"phi-offset", "0"},
        {"psi-offset", "0"},      {"noise", "none"},
        {"noise-sigma", "0"},     {"calibrate-rms", ""},
        {"leakage", "0"},         {"ramp-start", "0"},
        {"ramp-duration", "0"},   {"ramp-phase", format_double(2.0 * kPi)},
        {"ramp-exponent", "2"},   {"out", "trace.csv"},
        {"seed", "1"},
    };
    // Bench stability run: static arms at the half-fringe point with the
    // channel noise calibrated to a 20% RMS intensity fluctuation.
    const ConfigMap bare_lab = {{"calibrate-rms", "0.2"},
                                {"psi-offset", format_double(-kPi / 2.0)}};
    // Counter-detuned beat (2 Hz) toggled into the matched identity regime.
    const ConfigMap cbw_toggle = {{"bob-detune", "1"},
                                  {"alice-detune", "-1"},
                                  {"toggle-at", "10"}};
    // Manual glass rotation sweeping psi through a full turn.
    const ConfigMap glass_ramp = {{"ramp-start", "5"}, {"ramp-duration", "10"}};
    spec.presets["bare-lab"] = bare_lab;
    spec.presets["fig3a"] = bare_lab;
    spec.presets["cbw-toggle"] = cbw_toggle;
    spec.presets["fig3b"] = cbw_toggle;
    spec.presets["glass-ramp"] = glass_ramp;
    spec.presets["fig4c"] = glass_ramp;
    return spec;
}

CommandSpec keygen_spec() {
    CommandSpec spec;
    spec.defaults = {{"rounds", "1000"},   {"noise", "none"},       {"noise-sigma", "0"},
                     {"threshold", "0.5"}, {"erasure-band", "0.1"}, {"out", "session.json"},
                     {"seed", "1"}};
    return spec;
}

CommandSpec eve_spec() {
    CommandSpec spec;
    spec.defaults = {{"ratio", "0.1"},
                     {"placement", "outbound"},
                     {"strategy", "intensity_only"},
                     {"mode", "exact"},
                     {"samples", "100000"},
                     {"out", "eve.json"},
                     {"seed", "1"}};
    return spec;
}

struct SubcommandState {
    CLI::App* app = nullptr;
    CommandSpec spec;
    std::string preset;
    std::string config_path;
    std::map<std::string, std::string> values;  // bound CLI option storage
};

void attach_options(SubcommandState& state) {
    state.app->add_option("--preset", state.preset, "named parameter preset");
    state.app->add_option("--config", state.config_path, "flat key=value config file");
    for (const auto& [key, value] : state.spec.defaults) {
        state.values[key] = value;
        state.app->add_option("--" + key, state.values[key]);
    }
}

ConfigMap collect_cli_layer(const SubcommandState& state) {
    ConfigMap layer;
    for (const auto& [key, value] : state.values) {
        if (state.app->count("--" + key) > 0) {
            layer[key] = value;
        }
    }
    return layer;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"coupled Mach-Zehnder classical key distribution simulator"};
    app.require_subcommand(1);

    SubcommandState sweep{app.add_subcommand("sweep", "phase-grid of the coupled outputs (CSV)"),
                          sweep_spec(), {}, {}, {}};
    SubcommandState trace{
        app.add_subcommand("trace", "time-domain AOM drive experiment (CSV + JSON summary)"),
        trace_spec(), {}, {}, {}};
    SubcommandState keygen{app.add_subcommand("keygen", "key distribution session (JSON)"),
                           keygen_spec(), {}, {}, {}};
    SubcommandState eve{app.add_subcommand("eve", "tap-attack analysis (JSON)"), eve_spec(), {},
                        {}, {}};

    attach_options(sweep);
    attach_options(trace);
    attach_options(keygen);
    attach_options(eve);

    try {
        app.parse(argc, argv);

        SubcommandState* active = nullptr;
        int (*runner)(const ConfigMap&) = nullptr;
        if (sweep.app->parsed()) {
            active = &sweep;
            runner = run_sweep;
        } else if (trace.app->parsed()) {
            active = &trace;
            runner = run_trace;
        } else if (keygen.app->parsed()) {
            active = &keygen;
            runner = run_keygen;
        } else {
            active = &eve;
            runner = run_eve;
        }
        const ConfigMap cfg =
            resolve(active->spec, active->preset, active->config_path, collect_cli_layer(*active));
        return runner(cfg);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const UsageError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        // Core preconditions (undersampled schedules, invalid ranges, ...).
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}
