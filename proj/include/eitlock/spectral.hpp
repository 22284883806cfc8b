#pragma once

// Welch power spectral densities over FFTW.

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace eitlock::spectral {

enum class Window { hann, rectangular };

struct Psd {
    std::vector<double> frequency;  // Hz, increasing
    std::vector<double> density;    // units²/Hz
    double resolution_bandwidth = 0.0;  // equivalent noise bandwidth, Hz
    std::size_t segments = 0;
};

// One-sided PSD of a real series, frequencies 0 … fs/2.
Psd welch(std::span<const double> x, double sample_rate, std::size_t segment_length,
          double overlap = 0.5, Window window = Window::hann);

// Two-sided PSD of a complex series, frequencies −fs/2 … fs/2.
Psd welch(std::span<const std::complex<double>> z, double sample_rate, std::size_t segment_length,
          double overlap = 0.5, Window window = Window::hann);

// Full width at half maximum of the highest peak, by linear interpolation
// between bins on each flank. Returns 0 for an all-zero spectrum.
double full_width_half_max(const Psd& psd);

// Half-maximum width that stays unbiased on noisy averaged spectra: the PSD is
// smoothed with a boxcar of about a tenth of the width, the peak height comes
// from a parabola through the top of the line, and the flanks are interpolated
// on the smoothed spectrum. The first pass is seeded by the outermost raw
// half-maximum crossings, each later pass by the previous width.
double smoothed_full_width_half_max(const Psd& psd);

}  // namespace eitlock::spectral
