#include "eitlock/atomic_reference.hpp"

#include <string>

#include "eitlock/errors.hpp"

namespace eitlock::atomic {

namespace {
void require(bool ok, const std::string& msg) {
    if (!ok) throw InvalidArgument(msg);
}
}  // namespace

void LaserParams::validate(const char* label) const {
    const std::string l(label);
    require(std::isfinite(wavelength_nm) && wavelength_nm > 0, l + ".wavelength must be > 0");
    require(std::isfinite(power_w) && power_w >= 0, l + ".power must be >= 0");
    require(std::isfinite(waist_radius_m) && waist_radius_m > 0, l + ".waist must be > 0");
    require(std::isfinite(residual_linewidth_hz) && residual_linewidth_hz >= 0,
            l + ".linewidth must be >= 0");
    require(std::isfinite(static_detuning), l + ".detuning must be finite");
}

void DecayRates::validate() const {
    require(gamma_e >= 0 && gamma_r >= 0 && gamma_transit >= 0 && gamma_rel_laser >= 0,
            "decay rates must be >= 0");
}

void RydbergLevel::validate() const {
    require(n >= 5, "rydberg.n must be >= 5");
    require(quantum_defect >= 0 && quantum_defect < n, "rydberg.quantum_defect must be in [0, n)");
}

void VaporParams::validate() const {
    require(temperature_k > 0, "vapor.temperature must be > 0");
    require(atomic_mass_kg > 0, "vapor.mass must be > 0");
    require(peak_optical_depth >= 0, "vapor.peak_optical_depth must be >= 0");
}

double effective_quantum_number(const RydbergLevel& level) {
    level.validate();
    return static_cast<double>(level.n) - level.quantum_defect;
}

double coupling_rabi_frequency(const LaserParams& laser, const RydbergLevel& level,
                               const RabiReference& ref) {
    laser.validate("coupling");
    require(ref.n_star > 0 && ref.omega_c > 0 && ref.power_w > 0 && ref.waist_radius_m > 0,
            "Rabi reference values must be positive");
    require(ref.sd_amplitude_ratio > 0, "S/D amplitude ratio must be positive");

    const double n_star = effective_quantum_number(level);
    double series_factor = 1.0;
    if (ref.series == Series::D && level.series == Series::S) series_factor = 1.0 / ref.sd_amplitude_ratio;
    if (ref.series == Series::S && level.series == Series::D) series_factor = ref.sd_amplitude_ratio;

    return ref.omega_c * std::sqrt(laser.power_w / ref.power_w) *
           (ref.waist_radius_m / laser.waist_radius_m) * std::pow(ref.n_star / n_star, 1.5) *
           series_factor;
}

double doppler_sigma(const VaporParams& vapor, double wavelength_nm) {
    require(wavelength_nm > 0, "wavelength must be > 0");
    require(vapor.temperature_k >= 0 && vapor.atomic_mass_kg > 0, "invalid vapor parameters");
    const double k = kTwoPi / (wavelength_nm * 1e-9);
    return k * std::sqrt(kBoltzmann * vapor.temperature_k / vapor.atomic_mass_kg);
}

}  // namespace eitlock::atomic
