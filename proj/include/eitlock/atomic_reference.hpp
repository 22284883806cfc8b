#pragma once

// Atomic constants, laser and vapor parameters, and Rydberg scaling of the
// coupling Rabi frequency. Everything here is a plain value type.

#include <cmath>

#include "eitlock/units.hpp"

namespace eitlock::atomic {

struct LaserParams {
    double wavelength_nm = 780.24;
    double power_w = 0.0;
    double waist_radius_m = 1e-3;     // 1/e^2 intensity radius
    double residual_linewidth_hz = 0.0;  // FWHM of the pre-stabilized laser
    double static_detuning = 0.0;     // rad/s

    double wavelength_m() const { return wavelength_nm * 1e-9; }
    double wavevector() const { return kTwoPi / wavelength_m(); }
    void validate(const char* label) const;
};

// All rates angular (rad/s).
struct DecayRates {
    double gamma_e = mhz_to_angular(6.07);  // intermediate-state population decay
    double gamma_r = 0.0;                    // Rydberg-state decay
    double gamma_transit = 0.0;
    double gamma_rel_laser = 0.0;            // two-photon relative laser dephasing

    void validate() const;
};

enum class Series { S, D };

inline constexpr double kDefaultDefectS = 3.13;
inline constexpr double kDefaultDefectD = 1.35;
inline constexpr double kDefaultSdAmplitudeRatio = 3.1622776601683795;  // sqrt(10)

constexpr double default_quantum_defect(Series s) {
    return s == Series::S ? kDefaultDefectS : kDefaultDefectD;
}

struct RydbergLevel {
    int n = 26;
    Series series = Series::D;
    double quantum_defect = kDefaultDefectD;

    void validate() const;
};

struct VaporParams {
    double temperature_k = 293.0;
    double atomic_mass_kg = kRb87MassAmu * kAtomicMassUnit;
    double cell_length_m = 0.075;
    double peak_optical_depth = 1.0;

    void validate() const;
};

// Calibration point for the coupling Rabi frequency.
struct RabiReference {
    double n_star = 24.65;
    double omega_c = mhz_to_angular(2.0);  // rad/s
    Series series = Series::D;
    double power_w = 1e-3;
    double waist_radius_m = 1e-4;
    // Amplitude ratio between the D and S series dipole elements at equal n*.
    double sd_amplitude_ratio = kDefaultSdAmplitudeRatio;
};

double effective_quantum_number(const RydbergLevel& level);

// Ωc = Ωref · sqrt(P/Pref) · (wref/w) · (n*ref/n*)^{3/2} · s
double coupling_rabi_frequency(const LaserParams& laser, const RydbergLevel& level,
                               const RabiReference& reference);

// k · sqrt(kB T / m), the 1σ Doppler width of the one-photon detuning in rad/s.
double doppler_sigma(const VaporParams& vapor, double wavelength_nm);

}  // namespace eitlock::atomic
