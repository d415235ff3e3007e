#include "usckd/interferometer.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace usckd {

double to_radians(PhaseBasis b) {
    return b == PhaseBasis::Pi ? std::numbers::pi : 0.0;
}

int basis_bit(PhaseBasis b) {
    return b == PhaseBasis::Pi ? 1 : 0;
}

PhaseBasis basis_from_bit(int bit) {
    return bit ? PhaseBasis::Pi : PhaseBasis::Zero;
}

const char* to_string(PhaseBasis b) {
    return b == PhaseBasis::Pi ? "pi" : "0";
}

TwoPortOperator mzi_transfer(double phi) {
    return compose(make_bs(), compose(make_phase(0.0, phi), make_bs()));
}

PortIntensities mzi_intensities(double phi) {
    const double c = std::cos(phi);
    return {0.5 * (1.0 - c), 0.5 * (1.0 + c)};
}

TwoPortOperator coupled_transfer(double phi, double psi) {
    return compose(mzi_transfer(psi), mzi_transfer(phi));
}

PortIntensities coupled_intensities(double phi, double psi) {
    const double c = std::cos(phi - psi);
    return {0.5 * (1.0 + c), 0.5 * (1.0 - c)};
}

PortOutcome basis_outcome(PhaseBasis phi, PhaseBasis psi) {
    const PortIntensities out = coupled_intensities(to_radians(phi), to_radians(psi));
    return {out.upper > out.lower ? Port::A : Port::B, out.upper, out.lower};
}

TwoPortOperator chain_transfer(std::span<const double> stage_phases) {
    if (stage_phases.empty()) {
        throw std::invalid_argument("empty chain");
    }
    TwoPortOperator m = mzi_transfer(stage_phases[0]);
    for (std::size_t i = 1; i < stage_phases.size(); ++i) {
        m = compose(mzi_transfer(stage_phases[i]), m);
    }
    return m;
}

PortIntensities chain_intensities(std::span<const double> stage_phases) {
    return intensities(apply(chain_transfer(stage_phases), TwoModeField{{1.0, 0.0}, {}}));
}

}  // namespace usckd
