// Compiled with -mavx2 -mfma; only entered after a runtime CPU check.

#include <immintrin.h>

#include <limits>

#include "eitlock/simd/kernels.hpp"

namespace eitlock::simd::avx2 {

namespace {

inline double hsum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

}  // namespace

std::complex<double> ladder_weighted_sum(const LadderTerms& t, std::span<const double> u,
                                         std::span<const double> w) {
    const std::size_t n = u.size();
    const __m256d delta_p = _mm256_set1_pd(t.delta_p);
    const __m256d delta_2 = _mm256_set1_pd(t.delta_2);
    const __m256d ratio = _mm256_set1_pd(t.two_photon_ratio);
    const __m256d gamma_ge = _mm256_set1_pd(t.gamma_ge);
    const __m256d gamma_2 = _mm256_set1_pd(t.gamma_2);
    const __m256d gamma_2_sq = _mm256_set1_pd(t.gamma_2 * t.gamma_2);
    const __m256d quarter = _mm256_set1_pd(t.quarter_rabi_sq);
    const __m256d tiny = _mm256_set1_pd(std::numeric_limits<double>::min());

    __m256d acc_re = _mm256_setzero_pd();
    __m256d acc_im = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d uu = _mm256_loadu_pd(u.data() + i);
        const __m256d ww = _mm256_loadu_pd(w.data() + i);
        const __m256d dp = _mm256_sub_pd(delta_p, uu);
        const __m256d d2 = _mm256_fnmadd_pd(ratio, uu, delta_2);
        const __m256d m2 = _mm256_max_pd(_mm256_fmadd_pd(d2, d2, gamma_2_sq), tiny);
        const __m256d q = _mm256_div_pd(quarter, m2);
        const __m256d den_re = _mm256_fmadd_pd(q, gamma_2, gamma_ge);
        const __m256d den_im = _mm256_fmsub_pd(q, d2, dp);
        const __m256d mag = _mm256_fmadd_pd(den_im, den_im, _mm256_mul_pd(den_re, den_re));
        const __m256d s = _mm256_div_pd(_mm256_mul_pd(ww, gamma_ge), mag);
        acc_re = _mm256_fmadd_pd(s, den_im, acc_re);
        acc_im = _mm256_fmadd_pd(s, den_re, acc_im);
    }
    std::complex<double> tail =
        scalar::ladder_weighted_sum(t, u.subspan(i), w.subspan(i));
    return {hsum(acc_re) + tail.real(), hsum(acc_im) + tail.imag()};
}

double sum(std::span<const double> x) {
    const std::size_t n = x.size();
    __m256d a0 = _mm256_setzero_pd();
    __m256d a1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        a0 = _mm256_add_pd(a0, _mm256_loadu_pd(x.data() + i));
        a1 = _mm256_add_pd(a1, _mm256_loadu_pd(x.data() + i + 4));
    }
    double acc = hsum(_mm256_add_pd(a0, a1));
    for (; i < n; ++i) acc += x[i];
    return acc;
}

double sum_sq_dev(std::span<const double> x, double center) {
    const std::size_t n = x.size();
    const __m256d c = _mm256_set1_pd(center);
    __m256d a0 = _mm256_setzero_pd();
    __m256d a1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256d d0 = _mm256_sub_pd(_mm256_loadu_pd(x.data() + i), c);
        const __m256d d1 = _mm256_sub_pd(_mm256_loadu_pd(x.data() + i + 4), c);
        a0 = _mm256_fmadd_pd(d0, d0, a0);
        a1 = _mm256_fmadd_pd(d1, d1, a1);
    }
    double acc = hsum(_mm256_add_pd(a0, a1));
    for (; i < n; ++i) {
        const double d = x[i] - center;
        acc += d * d;
    }
    return acc;
}

}  // namespace eitlock::simd::avx2
