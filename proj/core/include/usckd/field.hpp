#pragma once

#include <cmath>
#include <complex>

namespace usckd {

using Complex = std::complex<double>;

// Two spatial modes of the optical circuit: upper/lower path inside an
// interferometer, or the two output ports after the final beam splitter.
struct TwoModeField {
    Complex a{};  // upper path / port
    Complex b{};  // lower path / port
};

// 2x2 complex transfer operator acting on a TwoModeField.
struct TwoPortOperator {
    Complex m11{}, m12{}, m21{}, m22{};
};

struct PortIntensities {
    double upper = 0.0;
    double lower = 0.0;
    double total() const { return upper + lower; }
};

// 50/50 beam splitter, (1/sqrt(2)) [[1, i], [i, 1]].
inline TwoPortOperator make_bs() {
    constexpr double r = 0.70710678118654752440;  // 1/sqrt(2)
    return {{r, 0.0}, {0.0, r}, {0.0, r}, {r, 0.0}};
}

// Independent phase plates on the two arms: diag(e^{i phi1}, e^{i phi2}).
// A single inter-arm shift phi is diag(1, e^{i phi}) = make_phase(0, phi);
// the leading global factor never shows up in any intensity.
inline TwoPortOperator make_phase(double phi1, double phi2) {
    return {std::polar(1.0, phi1), {}, {}, std::polar(1.0, phi2)};
}

// Matrix product: `second * first`, i.e. `first` acts on the field first.
inline TwoPortOperator compose(const TwoPortOperator& second, const TwoPortOperator& first) {
    return {second.m11 * first.m11 + second.m12 * first.m21,
            second.m11 * first.m12 + second.m12 * first.m22,
            second.m21 * first.m11 + second.m22 * first.m21,
            second.m21 * first.m12 + second.m22 * first.m22};
}

inline TwoModeField apply(const TwoPortOperator& op, const TwoModeField& f) {
    return {op.m11 * f.a + op.m12 * f.b,
            op.m21 * f.a + op.m22 * f.b};
}

inline PortIntensities intensities(const TwoModeField& f) {
    return {std::norm(f.a), std::norm(f.b)};
}

inline double total_intensity(const TwoModeField& f) {
    return std::norm(f.a) + std::norm(f.b);
}

inline TwoPortOperator dagger(const TwoPortOperator& op) {
    return {std::conj(op.m11), std::conj(op.m21),
            std::conj(op.m12), std::conj(op.m22)};
}

// Entrywise max |M M^dag - I|. Zero (to rounding) for anything built from
// make_bs/make_phase/compose.
inline double unitarity_defect(const TwoPortOperator& op) {
    const TwoPortOperator p = compose(op, dagger(op));
    double d = std::abs(p.m11 - Complex{1.0, 0.0});
    d = std::max(d, std::abs(p.m12));
    d = std::max(d, std::abs(p.m21));
    d = std::max(d, std::abs(p.m22 - Complex{1.0, 0.0}));
    return d;
}

inline bool is_unitary(const TwoPortOperator& op, double tol = 1e-12) {
    return unitarity_defect(op) <= tol;
}

}  // namespace usckd
