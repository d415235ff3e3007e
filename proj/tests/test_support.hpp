#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "usckd/field.hpp"
#include "usckd/rng.hpp"

namespace test_support {

inline constexpr double kPi = std::numbers::pi;

inline double max_entry_diff(const usckd::TwoPortOperator& a, const usckd::TwoPortOperator& b) {
    double d = std::abs(a.m11 - b.m11);
    d = std::max(d, std::abs(a.m12 - b.m12));
    d = std::max(d, std::abs(a.m21 - b.m21));
    d = std::max(d, std::abs(a.m22 - b.m22));
    return d;
}

// Entrywise distance after aligning b to a by the phase of the
// largest-magnitude entry pair; global phases are unobservable.
inline double max_entry_diff_up_to_phase(const usckd::TwoPortOperator& a,
                                         const usckd::TwoPortOperator& b) {
    const usckd::Complex* ea[4] = {&a.m11, &a.m12, &a.m21, &a.m22};
    const usckd::Complex* eb[4] = {&b.m11, &b.m12, &b.m21, &b.m22};
    int best = 0;
    double best_mag = -1.0;
    for (int i = 0; i < 4; ++i) {
        const double mag = std::min(std::abs(*ea[i]), std::abs(*eb[i]));
        if (mag > best_mag) {
            best_mag = mag;
            best = i;
        }
    }
    usckd::Complex c = *ea[best] / *eb[best];
    c /= std::abs(c);
    usckd::TwoPortOperator aligned{c * b.m11, c * b.m12, c * b.m21, c * b.m22};
    return max_entry_diff(a, aligned);
}

// Random unitary as a product of beam splitters and phase plates.
inline usckd::TwoPortOperator random_unitary(usckd::Rng& rng) {
    using namespace usckd;
    TwoPortOperator m = make_phase(2.0 * kPi * rng.uniform(), 2.0 * kPi * rng.uniform());
    for (int i = 0; i < 3; ++i) {
        m = compose(make_bs(), m);
        m = compose(make_phase(2.0 * kPi * rng.uniform(), 2.0 * kPi * rng.uniform()), m);
    }
    return m;
}

inline usckd::TwoModeField random_field(usckd::Rng& rng) {
    return {{rng.uniform() * 2.0 - 1.0, rng.uniform() * 2.0 - 1.0},
            {rng.uniform() * 2.0 - 1.0, rng.uniform() * 2.0 - 1.0}};
}

// Local extrema positions of a 2pi-periodic signal, sampled on [0, 2pi) with
// circular neighbours and refined by parabolic interpolation.
inline std::vector<double> circular_extrema_positions(const std::function<double(double)>& f,
                                                      int samples) {
    const double step = 2.0 * kPi / samples;
    std::vector<double> y(samples);
    for (int i = 0; i < samples; ++i) {
        y[i] = f(i * step);
    }
    std::vector<double> positions;
    for (int i = 0; i < samples; ++i) {
        const double prev = y[(i + samples - 1) % samples];
        const double cur = y[i];
        const double next = y[(i + 1) % samples];
        const bool is_max = cur >= prev && cur > next;
        const bool is_min = cur <= prev && cur < next;
        if (!is_max && !is_min) {
            continue;
        }
        const double denom = prev - 2.0 * cur + next;
        const double offset = denom != 0.0 ? 0.5 * (prev - next) / denom : 0.0;
        double pos = std::fmod(i * step + offset * step, 2.0 * kPi);
        if (pos < 0.0) {
            pos += 2.0 * kPi;
        }
        positions.push_back(pos);
    }
    std::sort(positions.begin(), positions.end());
    return positions;
}

// Circular gaps between consecutive extrema (wraps around 2pi).
inline std::vector<double> circular_spacings(const std::vector<double>& positions) {
    std::vector<double> gaps;
    if (positions.size() < 2) {
        return gaps;
    }
    for (std::size_t i = 1; i < positions.size(); ++i) {
        gaps.push_back(positions[i] - positions[i - 1]);
    }
    gaps.push_back(positions.front() + 2.0 * kPi - positions.back());
    return gaps;
}

inline double mean(const std::vector<double>& v) {
    double acc = 0.0;
    for (double x : v) {
        acc += x;
    }
    return v.empty() ? 0.0 : acc / static_cast<double>(v.size());
}

// ---- CLI helpers -----------------------------------------------------------

inline std::filesystem::path make_temp_dir(const std::string& tag) {
    static int counter = 0;
    const auto dir = std::filesystem::temp_directory_path() /
                     ("usckd_" + tag + "_" + std::to_string(++counter) + "_" +
                      std::to_string(static_cast<unsigned>(std::random_device{}())));
    std::filesystem::create_directories(dir);
    return dir;
}

// Runs a shell command, returns its exit code (-1 if it did not exit).
inline int run_command(const std::string& cmd) {
    const int status = std::system(cmd.c_str());
    if (status == -1) {
        return -1;
    }
#ifdef _WIN32
    return status;
#else
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
#endif
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

}  // namespace test_support
