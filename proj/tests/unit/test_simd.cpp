#include <doctest.h>

#include <vector>

#include "eitlock/simd/kernels.hpp"
#include "gen.hpp"

using namespace eitlock::simd;

TEST_CASE("AVX2 kernels agree with the scalar reference") {
    if (!isa_available(Isa::avx2)) {
        MESSAGE("AVX2 not available on this CPU; only the scalar path is exercised");
        return;
    }
    testgen::Gen g(21);
    for (int trial = 0; trial < 300; ++trial) {
        // Lengths cover empty input and every tail remainder.
        const int n = trial < 12 ? trial : g.integer(0, 3000);
        std::vector<double> u(n), w(n);
        for (int i = 0; i < n; ++i) {
            u[i] = g.uniform(-2e9, 2e9);
            w[i] = g.uniform(0, 1);
        }
        LadderTerms t;
        t.delta_p = g.uniform(-1e8, 1e8);
        t.delta_2 = g.uniform(-1e8, 1e8);
        t.two_photon_ratio = g.uniform(-1, 1);
        t.gamma_ge = g.log_uniform(1e6, 1e8);
        t.gamma_2 = g.log_uniform(1e2, 1e7);
        t.quarter_rabi_sq = std::pow(g.uniform(0, 1e8), 2);

        const auto a = scalar::ladder_weighted_sum(t, u, w);
        const auto b = avx2::ladder_weighted_sum(t, u, w);
        double scale = 0;
        for (double x : w) scale += x;
        CHECK(std::abs(a - b) <= 1e-13 * std::max(scale, 1.0));

        const double c = g.uniform(-1e9, 1e9);
        CHECK(avx2::sum(u) == doctest::Approx(scalar::sum(u)).epsilon(1e-13).scale(1e9));
        CHECK(avx2::sum_sq_dev(u, c) == doctest::Approx(scalar::sum_sq_dev(u, c)).epsilon(1e-13));
    }
}

TEST_CASE("pinning the scalar path is honored") {
    const Isa before = active_isa();
    CHECK(force_isa(Isa::scalar));
    CHECK(active_isa() == Isa::scalar);
    std::vector<double> x{1, 2, 3, 4, 5};
    CHECK(sum(x) == 15.0);
    CHECK(sum_sq_dev(x, 3.0) == 10.0);
    force_isa(before);
}
