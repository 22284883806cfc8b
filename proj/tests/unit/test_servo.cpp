#include <doctest.h>

#include <numeric>

#include "eitlock/errors.hpp"
#include "eitlock/servo_loop.hpp"
#include "eitlock/spectral.hpp"
#include "gen.hpp"

using namespace eitlock;
using namespace eitlock::servo;

namespace {

// Polynomials in z⁻¹, lowest order first.
using Poly = std::vector<double>;

Poly mul(const Poly& a, const Poly& b) {
    Poly c(a.size() + b.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j) c[i + j] += a[i] * b[j];
    return c;
}

Poly add(Poly a, const Poly& b) {
    if (b.size() > a.size()) a.resize(b.size(), 0.0);
    for (std::size_t i = 0; i < b.size(); ++i) a[i] += b[i];
    return a;
}

std::complex<double> eval(const Poly& p, std::complex<double> zi) {
    std::complex<double> acc = 0, pw = 1;
    for (double c : p) {
        acc += c * pw;
        pw *= zi;
    }
    return acc;
}

// Open loop G = N/D written from the continuous prototypes with s → 2fs(1−z⁻¹)/(1+z⁻¹).
struct Loop {
    Poly num, den;
};

Loop loop_polys(const ControllerConfig& c, double fs) {
    const double T = 1.0 / fs;
    const double wi = kTwoPi * c.fast.integrator_corner_hz;
    const double wc = kTwoPi * c.fast.cutoff_hz;
    const double kp = c.fast.proportional_gain;
    const double ki = c.slow.integrator_gain;
    // PI: kp[(1−z⁻¹) + wi T/2 (1+z⁻¹)] / (1−z⁻¹)
    const Poly pi_n{kp * (1 + wi * T / 2), kp * (-1 + wi * T / 2)};
    // LP: (1+z⁻¹) / [(1+z⁻¹) + (2/(T wc))(1−z⁻¹)]
    const double r = 2 / (T * wc);
    const Poly lp_n{1, 1}, lp_d{1 + r, 1 - r};
    // 1 + ki I: [(1−z⁻¹) + ki T/2 (1+z⁻¹)] / (1−z⁻¹)
    const Poly sl_n{1 + ki * T / 2, -1 + ki * T / 2};
    const Poly integ_d{1, -1};
    Loop l;
    l.num = mul(mul(mul(Poly{0, 1}, pi_n), lp_n), sl_n);
    l.den = mul(mul(integ_d, lp_d), integ_d);
    return l;
}

// Response of e = ν/(1+G) to a unit step in ν, by direct recursion.
std::vector<double> step_oracle(const ControllerConfig& c, double fs, std::size_t n, double height) {
    const Loop l = loop_polys(c, fs);
    const Poly a = add(l.den, l.num);  // (D + N) e = D ν
    const Poly& b = l.den;
    std::vector<double> e(n);
    for (std::size_t k = 0; k < n; ++k) {
        double acc = 0;
        for (std::size_t j = 0; j < b.size() && j <= k; ++j) acc += b[j] * height;
        for (std::size_t j = 1; j < a.size() && j <= k; ++j) acc -= a[j] * e[k - j];
        e[k] = acc / a[0];
    }
    return e;
}

double variance(std::span<const double> x) {
    const double m = std::accumulate(x.begin(), x.end(), 0.0) / x.size();
    double v = 0;
    for (double s : x) v += (s - m) * (s - m);
    return v / x.size();
}

constexpr double kFs = 10e6;

}  // namespace

TEST_CASE("open-loop gain is the bilinear image of the continuous prototypes") {
    testgen::Gen g(51);
    for (int i = 0; i < 200; ++i) {
        ControllerConfig c;
        c.fast.proportional_gain = g.log_uniform(1e-3, 2);
        c.fast.integrator_corner_hz = g.log_uniform(1e2, 2e6);
        c.fast.cutoff_hz = g.log_uniform(1e3, 1e6);
        c.slow.integrator_gain = g.log_uniform(1, 1e4);
        const double f = g.log_uniform(1, 4.9e6);
        const auto zi = std::polar(1.0, -kTwoPi * f / kFs);
        const auto s = 2 * kFs * (1.0 - zi) / (1.0 + zi);
        const auto expect = zi * c.fast.proportional_gain * (1.0 + kTwoPi * c.fast.integrator_corner_hz / s) /
                            (1.0 + s / (kTwoPi * c.fast.cutoff_hz)) * (1.0 + c.slow.integrator_gain / s);
        CHECK(std::abs(open_loop_gain(c, kFs, f) - expect) <= 1e-9 * std::abs(expect));
        if (f > 1e3) {
            // The expanded polynomials agree too, away from the double pole at z = 1.
            const Loop l = loop_polys(c, kFs);
            CHECK(std::abs(eval(l.num, zi) / eval(l.den, zi) - expect) <= 1e-6 * std::abs(expect));
        }
    }
}

TEST_CASE("default controller crosses unity gain near 300 kHz") {
    const ControllerConfig c;
    const double ugf = unity_gain_frequency(c, kFs);
    const Loop l = loop_polys(c, kFs);
    const auto zi = std::polar(1.0, -kTwoPi * ugf / kFs);
    CHECK(std::abs(eval(l.num, zi) / eval(l.den, zi)) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(ugf == doctest::Approx(299e3).epsilon(0.01));
    CHECK(is_stable(c, kFs));
}

TEST_CASE("closed-loop poles are roots of 1 + G") {
    testgen::Gen g(52);
    for (int i = 0; i < 50; ++i) {
        ControllerConfig c;
        c.fast.proportional_gain = g.log_uniform(1e-2, 5);
        c.fast.integrator_corner_hz = g.log_uniform(1e3, 2e6);
        c.fast.cutoff_hz = g.log_uniform(1e4, 1e6);
        const Loop l = loop_polys(c, kFs);
        const Poly a = add(l.den, l.num);
        const auto poles = closed_loop_poles(c, kFs);
        CHECK(poles.size() == a.size() - 1);
        bool inside = true;
        for (const auto& z : poles) {
            // D+N as a polynomial in z⁻¹ vanishes at z⁻¹ = 1/z.
            double scale = 0;
            std::complex<double> pw = 1;
            for (double coef : a) {
                scale += std::abs(coef) * std::abs(pw);
                pw /= z;
            }
            CHECK(std::abs(eval(a, 1.0 / z)) <= 1e-8 * scale);
            inside = inside && std::abs(z) < 1;
        }
        CHECK(is_stable(c, kFs) == inside);
    }
}

TEST_CASE("noiseless loop sits at its fixed point") {
    const auto r = simulate_locked({}, {}, Discriminant::linear(1e-3), kFs, 1e-3);
    for (double e : r.error_series.samples) CHECK(e == 0.0);
    CHECK(r.locked());
}

TEST_CASE("step response follows the closed-loop recursion") {
    testgen::Gen g(53);
    for (int trial = 0; trial < 10; ++trial) {
        ControllerConfig c;
        c.fast.proportional_gain = g.log_uniform(0.05, 0.5);
        c.fast.integrator_corner_hz = g.log_uniform(1e4, 1e6);
        c.fast.cutoff_hz = g.log_uniform(1e5, 1e6);
        if (!is_stable(c, kFs)) continue;
        const double offset = g.uniform(-1e5, 1e5);
        LockOptions opt;
        opt.initial_offset_hz = offset;
        const auto r = simulate_locked({}, c, Discriminant::linear(g.uniform(1e-5, 1e-2)), kFs, 2e-4, opt);
        const auto expect = step_oracle(c, kFs, r.error_series.samples.size(), offset);
        for (std::size_t k = 0; k < expect.size(); k += 7) {
            CHECK(r.error_series.samples[k] == doctest::Approx(expect[k]).epsilon(1e-9).scale(std::abs(offset)));
        }
    }
}

TEST_CASE("pull-in from an offset inside the linear range") {
    LockOptions opt;
    opt.initial_offset_hz = 1e5;
    const auto r = simulate_locked({}, {}, Discriminant::linear(1e-3), kFs, 1e-3, opt);
    CHECK(std::abs(r.error_series.samples.back()) < 1e-3 * opt.initial_offset_hz);
    CHECK(std::abs(r.control_series.samples.back() - opt.initial_offset_hz) < 1e-3 * opt.initial_offset_hz);
}

TEST_CASE("free-running noise has the configured statistics") {
    const double fs = 1e6;
    SUBCASE("white") {
        NoiseModel m{.white_psd = 1e4, .random_walk_coeff = 0, .seed = 5};
        const auto s = simulate_free_run(m, fs, 1.0);
        CHECK(variance(s.samples) == doctest::Approx(1e4 * fs / 2).epsilon(0.01));
        const auto p = spectral::welch(s.samples, fs, 4096);
        double mean = 0;
        for (std::size_t i = 10; i + 10 < p.density.size(); ++i) mean += p.density[i];
        mean /= p.density.size() - 20;
        CHECK(mean == doctest::Approx(m.psd(1e5, fs)).epsilon(0.01));
    }
    SUBCASE("random walk") {
        NoiseModel m{.white_psd = 0, .random_walk_coeff = 1e8, .seed = 6};
        const auto s = simulate_free_run(m, fs, 1.0);
        // Var[ν(t+τ) − ν(t)] = D τ at τ = 1 ms.
        const std::size_t lag = 1000;
        std::vector<double> d;
        for (std::size_t k = 0; k + lag < s.samples.size(); k += lag) d.push_back(s.samples[k + lag] - s.samples[k]);
        double ms = 0;
        for (double x : d) ms += x * x;
        CHECK(ms / d.size() == doctest::Approx(1e8 * 1e-3).epsilon(0.1));
    }
}

TEST_CASE("runs are reproducible from the seed") {
    NoiseModel m{.white_psd = 1e3, .random_walk_coeff = 1e6, .seed = 77};
    const auto disc = Discriminant::linear(1e-3, 1e-3);
    const auto a = simulate_locked(m, {}, disc, kFs, 1e-3);
    const auto b = simulate_locked(m, {}, disc, kFs, 1e-3);
    CHECK(a.error_series.samples == b.error_series.samples);
    CHECK(a.error_signal.samples == b.error_signal.samples);
    m.seed = 78;
    const auto c = simulate_locked(m, {}, disc, kFs, 1e-3);
    CHECK(a.error_series.samples != c.error_series.samples);
}

TEST_CASE("wrong controller sign is refused") {
    ControllerConfig c;
    c.sign = -1;
    CHECK_THROWS_AS(simulate_locked({}, c, Discriminant::linear(1e-3), kFs, 1e-4), WrongSign);
    CHECK_NOTHROW(simulate_locked({}, c, Discriminant::linear(-1e-3), kFs, 1e-4));
}

TEST_CASE("sample budget and sample rate guards") {
    CHECK_THROWS_AS(simulate_free_run({}, 1e6, 10.0, 1000), BudgetExceeded);
    ControllerConfig c;
    c.fast.cutoff_hz = 2e6;
    CHECK_THROWS_AS(simulate_locked({}, c, Discriminant::linear(1e-3), kFs, 1e-4), InvalidArgument);
}

TEST_CASE("prediction falls back to the free-running noise where the gain vanishes") {
    NoiseModel m{.white_psd = 1e4, .random_walk_coeff = 1e9};
    ControllerConfig c;
    c.fast.proportional_gain = 0;
    std::vector<double> f{10, 1e3, 1e5, 4e6};
    const auto p = closed_loop_psd_prediction(m, c, Discriminant::linear(1e-3, 1e-2), kFs, f);
    for (std::size_t i = 0; i < f.size(); ++i) CHECK(p[i] == doctest::Approx(m.psd(f[i], kFs)).epsilon(1e-12));

    const ControllerConfig d;
    const auto q = closed_loop_psd_prediction(m, d, Discriminant::linear(1e-3), kFs, std::vector<double>{4.9e6});
    CHECK(q[0] == doctest::Approx(m.psd(4.9e6, kFs)).epsilon(0.05));
}

TEST_CASE("any stable controller reduces random-walk frequency noise") {
    testgen::Gen g(54);
    int tried = 0;
    while (tried < 12) {
        ControllerConfig c;
        c.fast.proportional_gain = g.log_uniform(0.01, 1);
        c.fast.integrator_corner_hz = g.log_uniform(1e3, 1e6);
        c.fast.cutoff_hz = g.log_uniform(2e4, 1e6);
        c.slow.integrator_gain = g.log_uniform(1, 1e3);
        // The record must span many loop time constants for the comparison to mean anything.
        if (!is_stable(c, kFs) || unity_gain_frequency(c, kFs) < 20e3) continue;
        ++tried;
        NoiseModel m{.white_psd = 0, .random_walk_coeff = g.log_uniform(1e8, 1e11),
                     .seed = static_cast<std::uint64_t>(g.integer(1, 1 << 30))};
        const auto r = simulate_locked(m, c, Discriminant::linear(1e-3), kFs, 5e-3);
        const auto free = simulate_free_run(m, kFs, 5e-3);
        CHECK(variance(r.error_series.samples) <= variance(free.samples));
    }
}

TEST_CASE("slow branch output stays inside its range") {
    ControllerConfig c;
    c.slow.integrator_gain = 1e5;
    c.slow.output_range_hz = 1e3;
    LockOptions opt;
    opt.initial_offset_hz = 1e5;
    const auto r = simulate_locked({}, c, Discriminant::linear(1e-3), kFs, 2e-3, opt);
    // The fast integrator takes over the part the slow branch cannot hold.
    CHECK(std::abs(r.error_series.samples.back()) < 1.0);
    CHECK(r.control_series.samples.back() == doctest::Approx(1e5).epsilon(1e-4));
}

TEST_CASE("a start outside the capture range is reported as an unlock") {
    // Dispersive shape with extrema at ±1 MHz.
    fm::ErrorSignalTrace t;
    for (int k = -400; k <= 400; ++k) {
        const double x = 0.025 * k;  // MHz
        t.detunings.push_back(mhz_to_angular(x));
        t.volts.push_back(x * std::exp(-0.5 * x * x));
    }
    const auto crossing = fm::zero_crossing_slope(t, mhz_to_angular(3));
    const auto disc = Discriminant::from_trace(t, crossing);
    CHECK(disc.capture_half_range() == doctest::Approx(1e6).epsilon(1e-6));
    CHECK(disc.slope() == doctest::Approx(1e-6).epsilon(1e-3));
    CHECK(disc.volts(2e6) == doctest::Approx(2 * std::exp(-2.0)).epsilon(1e-3));

    LockOptions opt;
    opt.unlock_dwell_s = 1e-5;
    opt.initial_offset_hz = 8e6;
    const auto far = simulate_locked({}, {}, disc, kFs, 5e-4, opt);
    REQUIRE_FALSE(far.locked());
    CHECK(far.unlock_events.front().start_s == 0.0);
    CHECK(far.unlock_events.front().duration_s >= opt.unlock_dwell_s);

    opt.initial_offset_hz = 0.3e6;
    CHECK(simulate_locked({}, {}, disc, kFs, 5e-4, opt).locked());
}
