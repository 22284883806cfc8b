#pragma once

// FM beat amplitude from the photocurrent in the time domain: build the
// transmitted field carrier + two first-order sidebands, sample |E(t)|² over one
// modulation period and take the DFT bin at +ω_m.

#include <cmath>
#include <complex>
#include <vector>

namespace oracle {

inline std::complex<double> photocurrent_beat(std::complex<double> t_carrier, std::complex<double> t_upper,
                                              std::complex<double> t_lower, double j0, double j1,
                                              int samples = 64) {
    const double two_pi = 6.283185307179586;
    std::complex<double> acc = 0.0;
    for (int k = 0; k < samples; ++k) {
        const double phase = two_pi * k / samples;
        const std::complex<double> e = j0 * t_carrier + j1 * t_upper * std::polar(1.0, phase) -
                                       j1 * t_lower * std::polar(1.0, -phase);
        acc += std::norm(e) * std::polar(1.0, -phase);
    }
    return acc / static_cast<double>(samples);
}

}  // namespace oracle
