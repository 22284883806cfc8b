#pragma once

// Weak-probe response of the ladder (cascade) system g → e → r, for a single
// velocity class and averaged over the thermal velocity distribution, and the
// resulting complex field transmission through the cell.
//
// Normalization: χ = i γ_ge / (γ_ge − iΔp + (Ωc²/4)/(γ_2 − iΔ2)), so the
// zero-coupling, zero-velocity resonance is χ = i and Im χ ≥ 0 (absorption).

#include <array>
#include <complex>
#include <span>
#include <vector>

#include "eitlock/atomic_reference.hpp"
#include "eitlock/quadrature.hpp"
#include "eitlock/simd/kernels.hpp"

namespace eitlock::eit {

using ComplexResponse = std::complex<double>;

struct CascadeSystem {
    atomic::LaserParams probe{};
    atomic::LaserParams coupling{.wavelength_nm = 480.0};
    atomic::DecayRates rates{};
    atomic::VaporParams vapor{};
    double omega_c = 0.0;  // coupling Rabi frequency, rad/s
    bool counter_propagating = true;

    void validate() const;

    // γ_ge = Γe/2 + π·(probe residual FWHM)
    double gamma_ge() const;
    // γ_2 = γ_r/2 + γ_transit + γ_rel_laser
    double gamma_2() const;
    // Coefficient of the probe Doppler shift in the two-photon detuning.
    double two_photon_ratio() const;
    double doppler_sigma() const;
};

// Single velocity class v (m/s along the probe direction).
ComplexResponse susceptibility_single_velocity(double delta_p, double delta_c, double v,
                                               const CascadeSystem& sys);

ComplexResponse susceptibility_doppler(double delta_p, double delta_c, const CascadeSystem& sys,
                                       const quad::QuadratureSpec& quad);

std::complex<double> field_transmission(double delta_p, double delta_c, const CascadeSystem& sys,
                                        const quad::QuadratureSpec& quad);

// |t|² versus probe detuning for a Doppler-free (cold) sample; the coupling
// sits at sys.coupling.static_detuning.
std::vector<double> cold_spectrum(std::span<const double> delta_p_grid, const CascadeSystem& sys);

// Precomputed Doppler-averaged medium. Construction evaluates the optical-depth
// normalization once; evaluations are const and reentrant.
class LadderMedium {
public:
    LadderMedium(const CascadeSystem& sys, const quad::QuadratureSpec& quad);

    const CascadeSystem& system() const { return sys_; }
    const quad::QuadratureSpec& quadrature() const { return quad_; }

    simd::LadderTerms terms(double delta_p, double delta_c) const;
    // Singularities of χ as a function of the probe Doppler shift u = k_p v.
    std::array<std::complex<double>, 2> poles(double delta_p, double delta_c) const;

    ComplexResponse chi(double delta_p, double delta_c) const;
    std::complex<double> transmission(double delta_p, double delta_c) const;
    std::complex<double> transmission_from_chi(ComplexResponse chi) const;

    // Multiplier taking Im χ̄ to intensity optical depth.
    double od_scale() const { return od_scale_; }

private:
    ComplexResponse average(const simd::LadderTerms& t, const quad::QuadratureSpec& q) const;

    CascadeSystem sys_;
    quad::QuadratureSpec quad_;
    double sigma_;
    double od_scale_ = 0.0;
};

// Cold-sample counterpart: v = 0 only, OD normalized to the bare resonance χ = i.
class ColdMedium {
public:
    explicit ColdMedium(const CascadeSystem& sys);
    ComplexResponse chi(double delta_p, double delta_c) const;
    std::complex<double> transmission(double delta_p, double delta_c) const;

private:
    CascadeSystem sys_;
};

}  // namespace eitlock::eit
