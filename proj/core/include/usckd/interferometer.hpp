#pragma once

#include <span>

#include "usckd/field.hpp"

namespace usckd {

// Binary phase basis available to each party: 0 or pi between the two arms.
enum class PhaseBasis { Zero, Pi };

double to_radians(PhaseBasis b);
int basis_bit(PhaseBasis b);  // Zero -> 0, Pi -> 1
PhaseBasis basis_from_bit(int bit);
const char* to_string(PhaseBasis b);

// Absolute phases of the two arms; only the difference is observable.
struct PhasePair {
    double upper = 0.0;
    double lower = 0.0;
    double difference() const { return upper - lower; }
};

enum class Port { A, B };

struct PortOutcome {
    Port bright_port = Port::A;
    double i_a = 0.0;
    double i_b = 0.0;
};

// Transfer matrix of one Mach-Zehnder stage: BS, inter-arm shift phi, BS.
TwoPortOperator mzi_transfer(double phi);

// Output intensities of a single MZI fed with unit intensity in the upper
// port: ((1 - cos phi)/2, (1 + cos phi)/2).
PortIntensities mzi_intensities(double phi);

// Two MZI stages in series (stage phi feeds stage psi).
TwoPortOperator coupled_transfer(double phi, double psi);

// Final port intensities of the coupled pair for unit input. Depends on the
// phases only through phi - psi: (cos^2((phi-psi)/2), sin^2((phi-psi)/2)).
PortIntensities coupled_intensities(double phi, double psi);

// The four basis combinations: bright port A iff phi == psi, with the bright
// intensity exactly 1 and the dark port exactly 0.
PortOutcome basis_outcome(PhaseBasis phi, PhaseBasis psi);

// n MZI stages in series; stage_phases[0] is applied first.
// Throws std::invalid_argument("empty chain") for an empty list.
TwoPortOperator chain_transfer(std::span<const double> stage_phases);

// Port intensities of chain_transfer applied to unit input on the upper port.
PortIntensities chain_intensities(std::span<const double> stage_phases);

}  // namespace usckd
