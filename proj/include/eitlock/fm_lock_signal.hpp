#pragma once

// Frequency-modulation spectroscopy of the probe: first-order sidebands at
// ±ω_m pass the cell, beat on the photodiode at ω_m, and are mixed down with
// a phase-shifted copy of the oscillator to form the lock error signal.

#include <complex>
#include <span>
#include <string>
#include <vector>

#include "eitlock/eit_engine.hpp"

namespace eitlock::fm {

struct FmParams {
    double omega_m = mhz_to_angular(10.0);  // rad/s
    double beta = 0.3;                      // modulation index
    double theta = 0.0;                     // demodulation phase, rad
    double electronic_gain = 1.0;           // V per unit beat amplitude
    double detector_rolloff = 1.0;          // scalar attenuation of the beat at ω_m

    void validate() const;
    // J0(β)·J1(β)
    double sideband_product() const;
};

struct ErrorSignalTrace {
    std::vector<double> detunings;  // coupling detuning, rad/s, strictly increasing
    std::vector<double> volts;
    FmParams fm;
    double probe_detuning = 0.0;
    // +1 when the carrier crossing has positive slope (volts rise with coupling frequency).
    double carrier_slope_sign = 1.0;
    std::vector<std::string> warnings;
};

// B = J0 J1 [ t(δ+ω_m) t*(δ) − t(δ) t*(δ−ω_m) ] · rolloff, t from the medium at coupling detuning δc.
std::complex<double> fm_beat_amplitude(double delta_p0, double delta_c, const eit::LadderMedium& medium,
                                       const FmParams& fm);
std::complex<double> fm_beat_amplitude(double delta_p0, double delta_c, const eit::CascadeSystem& sys,
                                       const FmParams& fm, const quad::QuadratureSpec& quad);

// S = gain · Re[B e^{−iθ}]
double demodulate(std::complex<double> beat, const FmParams& fm);

// Complex beat over a coupling-detuning grid; cheap to re-demodulate at any phase.
std::vector<std::complex<double>> beat_scan(std::span<const double> delta_c_grid,
                                            const eit::LadderMedium& medium, const FmParams& fm,
                                            double delta_p0 = 0.0);

ErrorSignalTrace error_signal_scan(std::span<const double> delta_c_grid, const eit::LadderMedium& medium,
                                   const FmParams& fm, double delta_p0 = 0.0);
ErrorSignalTrace error_signal_scan(std::span<const double> delta_c_grid, const eit::CascadeSystem& sys,
                                   const FmParams& fm, const quad::QuadratureSpec& quad,
                                   double delta_p0 = 0.0);

// Demodulation phase that maximizes the positive slope of the carrier feature
// at δc = 0, from a centered difference of width `step` (rad/s).
double dispersive_phase(const eit::LadderMedium& medium, const FmParams& fm, double delta_p0 = 0.0,
                        double step = mhz_to_angular(0.01));

// Time-averaged transmitted probe power (carrier plus both sidebands), relative to the input.
double modulated_transmission(double delta_p0, double delta_c, const eit::LadderMedium& medium,
                              const FmParams& fm);

// Lower bound on the coupling-scan width of an EIT feature: 2γ_2 + Ωc²/(2γ_ge).
double narrowest_feature_width(const eit::CascadeSystem& sys);

struct Crossing {
    double crossing = 0.0;       // rad/s
    double slope = 0.0;          // V per rad/s
    double capture_range = 0.0;  // rad/s between the flanking extrema
    double lower_extremum = 0.0;
    double upper_extremum = 0.0;
};

// Locates the single sign change of the trace within center ± half_window.
// Throws NoCrossing / AmbiguousCrossing.
Crossing zero_crossing_slope(const ErrorSignalTrace& trace, double half_window, double center = 0.0);
Crossing zero_crossing_slope(std::span<const double> x, std::span<const double> y, double half_window,
                             double center = 0.0);

// Coarse uniform grid on [start, stop] plus fine uniform windows around `centers`.
std::vector<double> two_tier_grid(double start, double stop, double coarse_step,
                                  std::span<const double> centers, double fine_half_width,
                                  double fine_step);

}  // namespace eitlock::fm
