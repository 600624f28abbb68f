#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <vector>

namespace dstest {

inline std::vector<double> sine(double freq_hz, double amplitude, double rate, std::size_t n, double offset = 0.0) {
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = offset + amplitude * std::sin(2.0 * std::numbers::pi * freq_hz * static_cast<double>(i) / rate);
    }
    return x;
}

/// Amplitude of the `freq_hz` component by a single-bin DFT over
/// x[begin, end). Exact for sinusoids with a whole number of cycles in range.
inline double dft_amplitude(std::span<const double> x, double freq_hz, double rate, std::size_t begin,
                            std::size_t end) {
    std::complex<double> acc{0.0, 0.0};
    for (std::size_t i = begin; i < end; ++i) {
        const double phase = -2.0 * std::numbers::pi * freq_hz * static_cast<double>(i) / rate;
        acc += x[i] * std::complex<double>(std::cos(phase), std::sin(phase));
    }
    return 2.0 * std::abs(acc) / static_cast<double>(end - begin);
}

/// Gain of a zero-phase bandpass at `freq_hz`, measured away from the edges.
inline double measured_gain(const std::vector<double> &in, const std::vector<double> &out, double freq_hz,
                            double rate) {
    // Centre window with a whole number of seconds; every test tone is an
    // integer or half-integer frequency so two seconds hold whole cycles.
    const std::size_t span = static_cast<std::size_t>(2.0 * rate) * ((in.size() / 2) / static_cast<std::size_t>(2.0 * rate));
    const std::size_t begin = (in.size() - span) / 2;
    return dft_amplitude(out, freq_hz, rate, begin, begin + span) / dft_amplitude(in, freq_hz, rate, begin, begin + span);
}

}  // namespace dstest
