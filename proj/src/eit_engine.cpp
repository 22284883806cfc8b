#include "eitlock/eit_engine.hpp"

#include <cmath>

#include "eitlock/errors.hpp"
#include "eitlock/units.hpp"

namespace eitlock::eit {

void CascadeSystem::validate() const {
    probe.validate("probe");
    coupling.validate("coupling");
    rates.validate();
    vapor.validate();
    if (!(omega_c >= 0) || !std::isfinite(omega_c)) throw InvalidArgument("omega_c must be >= 0");
    if (!(gamma_ge() > 0)) throw InvalidArgument("probe coherence decay must be > 0");
}

double CascadeSystem::gamma_ge() const {
    return 0.5 * rates.gamma_e + kPi * probe.residual_linewidth_hz;
}

double CascadeSystem::gamma_2() const {
    return 0.5 * rates.gamma_r + rates.gamma_transit + rates.gamma_rel_laser;
}

double CascadeSystem::two_photon_ratio() const {
    const double kp = probe.wavevector();
    const double kc = coupling.wavevector();
    return counter_propagating ? (kp - kc) / kp : (kp + kc) / kp;
}

double CascadeSystem::doppler_sigma() const {
    return atomic::doppler_sigma(vapor, probe.wavelength_nm);
}

namespace {

simd::LadderTerms make_terms(const CascadeSystem& sys, double delta_p, double delta_c) {
    simd::LadderTerms t;
    t.delta_p = delta_p + sys.probe.static_detuning;
    t.delta_2 = t.delta_p + delta_c + sys.coupling.static_detuning;
    t.two_photon_ratio = sys.two_photon_ratio();
    t.gamma_ge = sys.gamma_ge();
    t.gamma_2 = sys.gamma_2();
    t.quarter_rabi_sq = 0.25 * sys.omega_c * sys.omega_c;
    return t;
}

ComplexResponse evaluate(const simd::LadderTerms& t, double u) {
    const double one = 1.0;
    return simd::scalar::ladder_weighted_sum(t, std::span(&u, 1), std::span(&one, 1));
}

// Roots in u = k_p v of (γ_ge − iΔp)(γ_2 − iΔ2) + Ωc²/4, i.e. the poles of χ(u).
std::array<std::complex<double>, 2> ladder_poles(const simd::LadderTerms& t) {
    using C = std::complex<double>;
    const C i(0.0, 1.0);
    const C a(t.gamma_ge, -t.delta_p);
    const C c(t.gamma_2, -t.delta_2);
    const double r = t.two_photon_ratio;
    // (a + iu)(c + iru) + Q = −r u² + i(ar + c) u + (ac + Q)
    const C qa = -r;
    const C qb = i * (a * r + c);
    const C qc = a * c + t.quarter_rabi_sq;
    const C nan(std::nan(""), std::nan(""));
    if (std::abs(r) < 1e-12) return {std::abs(qb) > 0 ? -qc / qb : nan, nan};
    const C disc = std::sqrt(qb * qb - 4.0 * qa * qc);
    const C q = std::real(std::conj(qb) * disc) >= 0 ? -0.5 * (qb + disc) : -0.5 * (qb - disc);
    return {q / qa, std::abs(q) > 0 ? qc / q : nan};
}

}  // namespace

ComplexResponse susceptibility_single_velocity(double delta_p, double delta_c, double v,
                                               const CascadeSystem& sys) {
    return evaluate(make_terms(sys, delta_p, delta_c), sys.probe.wavevector() * v);
}

ComplexResponse susceptibility_doppler(double delta_p, double delta_c, const CascadeSystem& sys,
                                       const quad::QuadratureSpec& quad) {
    return LadderMedium(sys, quad).chi(delta_p, delta_c);
}

std::complex<double> field_transmission(double delta_p, double delta_c, const CascadeSystem& sys,
                                        const quad::QuadratureSpec& quad) {
    return LadderMedium(sys, quad).transmission(delta_p, delta_c);
}

std::vector<double> cold_spectrum(std::span<const double> delta_p_grid, const CascadeSystem& sys) {
    ColdMedium medium(sys);
    std::vector<double> out;
    out.reserve(delta_p_grid.size());
    for (double dp : delta_p_grid) out.push_back(std::norm(medium.transmission(dp, 0.0)));
    return out;
}

LadderMedium::LadderMedium(const CascadeSystem& sys, const quad::QuadratureSpec& quad)
    : sys_(sys), quad_(quad), sigma_(sys.doppler_sigma()) {
    sys_.validate();
    quad_.validate();
    CascadeSystem bare = sys_;
    bare.omega_c = 0.0;
    bare.probe.static_detuning = 0.0;
    const simd::LadderTerms t = make_terms(bare, 0.0, 0.0);
    const double peak = average(t, quad_).imag();
    od_scale_ = peak > 0 ? sys_.vapor.peak_optical_depth / peak : 0.0;
}

simd::LadderTerms LadderMedium::terms(double delta_p, double delta_c) const {
    return make_terms(sys_, delta_p, delta_c);
}

std::array<std::complex<double>, 2> LadderMedium::poles(double delta_p, double delta_c) const {
    return ladder_poles(terms(delta_p, delta_c));
}

ComplexResponse LadderMedium::average(const simd::LadderTerms& t,
                                      const quad::QuadratureSpec& q) const {
    if (sigma_ == 0.0) return evaluate(t, 0.0);
    const auto p = ladder_poles(t);
    const quad::Rule rule = quad::gaussian_rule(q, sigma_, p);
    return simd::ladder_weighted_sum(t, rule.nodes, rule.weights);
}

ComplexResponse LadderMedium::chi(double delta_p, double delta_c) const {
    const simd::LadderTerms t = terms(delta_p, delta_c);
    const ComplexResponse value = average(t, quad_);
    if (quad_.convergence_tolerance > 0) {
        const ComplexResponse refined = average(t, quad_.doubled());
        if (std::abs(refined - value) > quad_.convergence_tolerance) {
            throw QuadratureNotConverged(
                "Doppler average changed by " + std::to_string(std::abs(refined - value)) +
                " when doubling node_count=" + std::to_string(quad_.node_count) + " (" +
                quad::to_string(quad_.method) + ")");
        }
    }
    return value;
}

std::complex<double> LadderMedium::transmission_from_chi(ComplexResponse chi) const {
    const std::complex<double> i(0.0, 1.0);
    return std::exp(0.5 * od_scale_ * i * chi);
}

std::complex<double> LadderMedium::transmission(double delta_p, double delta_c) const {
    return transmission_from_chi(chi(delta_p, delta_c));
}

ColdMedium::ColdMedium(const CascadeSystem& sys) : sys_(sys) { sys_.validate(); }

ComplexResponse ColdMedium::chi(double delta_p, double delta_c) const {
    return evaluate(make_terms(sys_, delta_p, delta_c), 0.0);
}

std::complex<double> ColdMedium::transmission(double delta_p, double delta_c) const {
    const std::complex<double> i(0.0, 1.0);
    return std::exp(0.5 * sys_.vapor.peak_optical_depth * i * chi(delta_p, delta_c));
}

}  // namespace eitlock::eit
