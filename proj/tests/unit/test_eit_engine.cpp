#include <doctest.h>

#include "eitlock/eit_engine.hpp"
#include "eitlock/errors.hpp"
#include "gen.hpp"
#include "../oracles/density_matrix.hpp"
#include "../oracles/doppler.hpp"

using namespace eitlock;
using namespace eitlock::eit;

namespace {

CascadeSystem hot(double omega_c_mhz = 2.0) {
    CascadeSystem s;
    s.omega_c = mhz_to_angular(omega_c_mhz);
    s.rates.gamma_rel_laser = hz_to_angular(100e3);
    return s;
}

}  // namespace

TEST_CASE("bare resonance is normalized to i") {
    CascadeSystem s;
    const auto chi = susceptibility_single_velocity(0, 0, 0, s);
    CHECK(chi.real() == doctest::Approx(0).epsilon(1e-15));
    CHECK(chi.imag() == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("without coupling one probe half-width off resonance gives (-1+i)/2") {
    CascadeSystem s;
    const auto chi = susceptibility_single_velocity(s.gamma_ge(), 0, 0, s);
    CHECK(chi.real() == doctest::Approx(-0.5).epsilon(1e-14));
    CHECK(chi.imag() == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("absorption is never negative") {
    testgen::Gen g(3);
    for (int i = 0; i < 2000; ++i) {
        CascadeSystem s;
        s.omega_c = mhz_to_angular(g.uniform(0, 30));
        s.rates.gamma_r = hz_to_angular(g.uniform(0, 1e5));
        s.rates.gamma_rel_laser = hz_to_angular(g.uniform(0, 1e6));
        s.counter_propagating = g.coin();
        const auto chi = susceptibility_single_velocity(mhz_to_angular(g.uniform(-50, 50)), mhz_to_angular(g.uniform(-50, 50)),
                                                        g.uniform(-500, 500), s);
        CHECK(chi.imag() >= 0.0);
    }
}

TEST_CASE("coupling opens a transparency window at two-photon resonance") {
    CascadeSystem s = hot(5.0);
    CHECK(susceptibility_single_velocity(0, 0, 0, s).imag() < 0.05);
    const LadderMedium medium(s, {});
    const double with = medium.chi(0, 0).imag();
    CascadeSystem bare = s;
    bare.omega_c = 0;
    const double without = LadderMedium(bare, {}).chi(0, 0).imag();
    CHECK(with < 0.99 * without);
}

TEST_CASE("mirror symmetry of the single-class response") {
    // χ(−δp, −δc, −v) = −conj χ(δp, δc, v)
    testgen::Gen g(4);
    const CascadeSystem s = hot(3.0);
    for (int i = 0; i < 200; ++i) {
        const double dp = mhz_to_angular(g.uniform(-20, 20)), dc = mhz_to_angular(g.uniform(-20, 20)), v = g.uniform(-300, 300);
        const auto a = susceptibility_single_velocity(dp, dc, v, s);
        const auto b = susceptibility_single_velocity(-dp, -dc, -v, s);
        CHECK(std::abs(a + std::conj(b)) < 1e-13);
    }
}

TEST_CASE("single velocity class agrees with the density-matrix steady state") {
    testgen::Gen g(8);
    for (int i = 0; i < 60; ++i) {
        CascadeSystem s;
        s.omega_c = mhz_to_angular(g.uniform(0.2, 10));
        s.rates.gamma_r = hz_to_angular(g.uniform(0, 2e5));
        s.rates.gamma_transit = hz_to_angular(g.uniform(0, 1e5));
        s.rates.gamma_rel_laser = hz_to_angular(g.uniform(0, 5e5));
        s.probe.residual_linewidth_hz = g.uniform(0, 5e5);
        const double dp = mhz_to_angular(g.uniform(-15, 15)), dc = mhz_to_angular(g.uniform(-15, 15));
        const double v = g.uniform(-20, 20);
        const double u = s.probe.wavevector() * v;
        oracle::LadderInput in;
        in.delta_p = dp - u;
        in.delta_2 = dp + dc - s.two_photon_ratio() * u;
        in.gamma_e = s.rates.gamma_e;
        in.gamma_r = s.rates.gamma_r;
        in.probe_dephasing = kPi * s.probe.residual_linewidth_hz;
        in.rydberg_dephasing = s.rates.gamma_transit + s.rates.gamma_rel_laser;
        in.omega_c = s.omega_c;
        in.omega_p = 1e-4 * std::min(s.gamma_ge(), s.omega_c);
        const auto expect = oracle::ladder_chi(in);
        const auto got = susceptibility_single_velocity(dp, dc, v, s);
        CHECK(std::abs(got - expect) <= 1e-3 * std::abs(expect) + 1e-9);
    }
}

TEST_CASE("Doppler average agrees with a dense trapezoid on the hot cell") {
    const CascadeSystem s = hot(2.0);
    const LadderMedium medium(s, {});
    testgen::Gen g(9);
    for (int i = 0; i < 8; ++i) {
        const double dp = mhz_to_angular(g.uniform(-12, 12)), dc = mhz_to_angular(g.uniform(-25, 25));
        const auto t = medium.terms(dp, dc);
        const oracle::LadderCoefficients c{t.delta_p, t.delta_2, t.two_photon_ratio, t.gamma_ge, t.gamma_2,
                                           std::sqrt(4 * t.quarter_rabi_sq)};
        const auto ref = oracle::ladder_trapezoid(c, s.doppler_sigma());
        CHECK(std::abs(medium.chi(dp, dc) - ref) < 1e-9);
    }
}

TEST_CASE("Gauss-Hermite on the hot cell trips the doubling check") {
    const CascadeSystem s = hot(2.0);
    quad::QuadratureSpec q{.method = quad::Method::gauss_hermite, .node_count = 200, .convergence_tolerance = 1e-6};
    CHECK_THROWS_AS(LadderMedium(s, q).chi(0, 0), QuadratureNotConverged);
    // The adaptive default passes the same check.
    quad::QuadratureSpec a{.convergence_tolerance = 1e-9};
    CHECK_NOTHROW(LadderMedium(s, a).chi(0, 0));
}

TEST_CASE("optical depth normalization") {
    CascadeSystem s = hot(0.0);
    s.vapor.peak_optical_depth = 2.0;
    const LadderMedium medium(s, {});
    CHECK(std::norm(medium.transmission(0, 0)) == doctest::Approx(std::exp(-2.0)).epsilon(1e-12));
    ColdMedium cold(s);
    CHECK(std::norm(cold.transmission(0, 0)) == doctest::Approx(std::exp(-2.0)).epsilon(1e-12));
    CHECK(std::norm(medium.transmission(mhz_to_angular(3000), 0)) > 0.999);
}

TEST_CASE("cold spectrum shows the transparency dip in absorption") {
    CascadeSystem s;
    s.omega_c = mhz_to_angular(4.0);
    s.rates.gamma_rel_laser = hz_to_angular(280e3);
    s.vapor.peak_optical_depth = 2.0;
    std::vector<double> grid{mhz_to_angular(-2.0), 0.0, mhz_to_angular(2.0)};
    const auto t = cold_spectrum(grid, s);
    CHECK(t[1] > t[0]);
    CHECK(t[1] > t[2]);
    CHECK(t[0] == doctest::Approx(t[2]).epsilon(1e-12));
}

TEST_CASE("two-photon ratio for the 780/480 ladder") {
    CascadeSystem s;
    CHECK(s.two_photon_ratio() == doctest::Approx(1 - 780.24 / 480.0).epsilon(1e-14));
    s.counter_propagating = false;
    CHECK(s.two_photon_ratio() == doctest::Approx(1 + 780.24 / 480.0).epsilon(1e-14));
}
