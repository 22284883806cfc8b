#include <atomic>
#include <cstdlib>
#include <cstring>

#include "eitlock/simd/kernels.hpp"

namespace eitlock::simd {

#ifndef EITLOCK_WITH_AVX2
// Non-x86 builds: the AVX2 names resolve to the reference kernels and are
// never selected because isa_available(avx2) is false.
namespace avx2 {
std::complex<double> ladder_weighted_sum(const LadderTerms& t, std::span<const double> u,
                                         std::span<const double> w) {
    return scalar::ladder_weighted_sum(t, u, w);
}
double sum(std::span<const double> x) { return scalar::sum(x); }
double sum_sq_dev(std::span<const double> x, double c) { return scalar::sum_sq_dev(x, c); }
}  // namespace avx2
#endif

namespace {

bool cpu_has_avx2() {
#if defined(EITLOCK_WITH_AVX2) && (defined(__GNUC__) || defined(__clang__))
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

Isa detect() {
    if (const char* env = std::getenv("EITLOCK_SIMD"); env && std::strcmp(env, "scalar") == 0) {
        return Isa::scalar;
    }
    return cpu_has_avx2() ? Isa::avx2 : Isa::scalar;
}

std::atomic<Isa>& current() {
    static std::atomic<Isa> isa{detect()};
    return isa;
}

}  // namespace

const char* isa_name(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

bool isa_available(Isa isa) { return isa == Isa::scalar || cpu_has_avx2(); }

Isa active_isa() { return current().load(std::memory_order_relaxed); }

bool force_isa(Isa isa) {
    if (!isa_available(isa)) return false;
    current().store(isa, std::memory_order_relaxed);
    return true;
}

std::complex<double> ladder_weighted_sum(const LadderTerms& t, std::span<const double> u,
                                         std::span<const double> w) {
    return active_isa() == Isa::avx2 ? avx2::ladder_weighted_sum(t, u, w)
                                     : scalar::ladder_weighted_sum(t, u, w);
}

double sum(std::span<const double> x) {
    return active_isa() == Isa::avx2 ? avx2::sum(x) : scalar::sum(x);
}

double sum_sq_dev(std::span<const double> x, double center) {
    return active_isa() == Isa::avx2 ? avx2::sum_sq_dev(x, center)
                                     : scalar::sum_sq_dev(x, center);
}

}  // namespace eitlock::simd
