#include "eitlock/simd/kernels.hpp"

#include <algorithm>
#include <limits>

namespace eitlock::simd::scalar {

namespace {
constexpr double kTinyMagnitude = std::numeric_limits<double>::min();
}

std::complex<double> ladder_weighted_sum(const LadderTerms& t, std::span<const double> u,
                                         std::span<const double> w) {
    double acc_re = 0.0;
    double acc_im = 0.0;
    const std::size_t n = u.size();
    for (std::size_t i = 0; i < n; ++i) {
        const double dp = t.delta_p - u[i];
        const double d2 = t.delta_2 - t.two_photon_ratio * u[i];
        // Q / (γ2 − iΔ2) = Q (γ2 + iΔ2) / (γ2² + Δ2²)
        const double m2 = std::max(t.gamma_2 * t.gamma_2 + d2 * d2, kTinyMagnitude);
        const double q = t.quarter_rabi_sq / m2;
        const double den_re = t.gamma_ge + q * t.gamma_2;
        const double den_im = -dp + q * d2;
        // i γ / D = γ (Im D + i Re D) / |D|²
        const double s = w[i] * t.gamma_ge / (den_re * den_re + den_im * den_im);
        acc_re += s * den_im;
        acc_im += s * den_re;
    }
    return {acc_re, acc_im};
}

double sum(std::span<const double> x) {
    double acc = 0.0;
    for (double v : x) acc += v;
    return acc;
}

double sum_sq_dev(std::span<const double> x, double center) {
    double acc = 0.0;
    for (double v : x) {
        const double d = v - center;
        acc += d * d;
    }
    return acc;
}

}  // namespace eitlock::simd::scalar
