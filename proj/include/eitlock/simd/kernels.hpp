#pragma once

// Data-parallel inner loops. Each kernel has a scalar reference version and,
// where the CPU supports it, an AVX2+FMA version. The dispatching entry points
// pick the widest variant available at runtime; the environment variable
// EITLOCK_SIMD=scalar pins the reference path.

#include <complex>
#include <span>

namespace eitlock::simd {

// Coefficients of the weak-probe ladder response as a function of the probe
// Doppler shift u = k_p v (rad/s):
//   Δp = delta_p − u,  Δ2 = delta_2 − two_photon_ratio · u
//   χ(u) = i γ_ge / (γ_ge − iΔp + quarter_rabi_sq / (γ_2 − iΔ2))
struct LadderTerms {
    double delta_p = 0.0;
    double delta_2 = 0.0;
    double two_photon_ratio = 0.0;
    double gamma_ge = 1.0;
    double gamma_2 = 0.0;
    double quarter_rabi_sq = 0.0;
};

enum class Isa { scalar, avx2 };

const char* isa_name(Isa isa);
bool isa_available(Isa isa);
Isa active_isa();
// Override the runtime choice; returns false (and changes nothing) if the ISA is unavailable.
bool force_isa(Isa isa);

// Σ w_i χ(u_i)
std::complex<double> ladder_weighted_sum(const LadderTerms& t, std::span<const double> u,
                                         std::span<const double> w);
double sum(std::span<const double> x);
// Σ (x_i − center)^2
double sum_sq_dev(std::span<const double> x, double center);

namespace scalar {
std::complex<double> ladder_weighted_sum(const LadderTerms& t, std::span<const double> u,
                                         std::span<const double> w);
double sum(std::span<const double> x);
double sum_sq_dev(std::span<const double> x, double center);
}  // namespace scalar

namespace avx2 {
std::complex<double> ladder_weighted_sum(const LadderTerms& t, std::span<const double> u,
                                         std::span<const double> w);
double sum(std::span<const double> x);
double sum_sq_dev(std::span<const double> x, double center);
}  // namespace avx2

}  // namespace eitlock::simd
