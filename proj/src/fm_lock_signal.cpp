#include "eitlock/fm_lock_signal.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "eitlock/errors.hpp"

namespace eitlock::fm {

void FmParams::validate() const {
    if (!(omega_m > 0)) throw InvalidArgument("fm.modulation must be > 0");
    if (!(beta > 0 && beta <= 0.5)) throw InvalidArgument("fm.beta must be in (0, 0.5]");
    if (!(electronic_gain > 0)) throw InvalidArgument("fm.electronic_gain must be > 0");
    if (!(detector_rolloff >= 0)) throw InvalidArgument("fm.detector_rolloff must be >= 0");
    if (!std::isfinite(theta)) throw InvalidArgument("fm.phase must be finite");
}

double FmParams::sideband_product() const {
    return std::cyl_bessel_j(0.0, beta) * std::cyl_bessel_j(1.0, beta);
}

std::complex<double> fm_beat_amplitude(double delta_p0, double delta_c, const eit::LadderMedium& medium,
                                       const FmParams& fm) {
    const auto t_up = medium.transmission(delta_p0 + fm.omega_m, delta_c);
    const auto t_0 = medium.transmission(delta_p0, delta_c);
    const auto t_down = medium.transmission(delta_p0 - fm.omega_m, delta_c);
    return fm.detector_rolloff * fm.sideband_product() *
           (t_up * std::conj(t_0) - t_0 * std::conj(t_down));
}

std::complex<double> fm_beat_amplitude(double delta_p0, double delta_c, const eit::CascadeSystem& sys,
                                       const FmParams& fm, const quad::QuadratureSpec& quad) {
    fm.validate();
    return fm_beat_amplitude(delta_p0, delta_c, eit::LadderMedium(sys, quad), fm);
}

double demodulate(std::complex<double> beat, const FmParams& fm) {
    return fm.electronic_gain * std::real(beat * std::polar(1.0, -fm.theta));
}

std::vector<std::complex<double>> beat_scan(std::span<const double> delta_c_grid,
                                            const eit::LadderMedium& medium, const FmParams& fm,
                                            double delta_p0) {
    fm.validate();
    std::vector<std::complex<double>> out;
    out.reserve(delta_c_grid.size());
    for (double dc : delta_c_grid) out.push_back(fm_beat_amplitude(delta_p0, dc, medium, fm));
    return out;
}

double narrowest_feature_width(const eit::CascadeSystem& sys) {
    return 2.0 * sys.gamma_2() + sys.omega_c * sys.omega_c / (2.0 * sys.gamma_ge());
}

ErrorSignalTrace error_signal_scan(std::span<const double> delta_c_grid, const eit::LadderMedium& medium,
                                   const FmParams& fm, double delta_p0) {
    for (std::size_t i = 1; i < delta_c_grid.size(); ++i) {
        if (!(delta_c_grid[i] > delta_c_grid[i - 1])) {
            throw InvalidArgument("detuning grid must be strictly increasing");
        }
    }
    ErrorSignalTrace trace;
    trace.fm = fm;
    trace.probe_detuning = delta_p0;
    trace.detunings.assign(delta_c_grid.begin(), delta_c_grid.end());
    const auto beats = beat_scan(delta_c_grid, medium, fm, delta_p0);
    trace.volts.reserve(beats.size());
    for (const auto& b : beats) trace.volts.push_back(demodulate(b, fm));

    // Carrier slope sign from the phase-rotated beat derivative at δc = 0.
    const double h = mhz_to_angular(0.01);
    const auto d = fm_beat_amplitude(delta_p0, h, medium, fm) - fm_beat_amplitude(delta_p0, -h, medium, fm);
    trace.carrier_slope_sign = demodulate(d, fm) >= 0 ? 1.0 : -1.0;

    const double width = narrowest_feature_width(medium.system());
    double max_step = 0.0;
    for (std::size_t i = 1; i < delta_c_grid.size(); ++i) {
        max_step = std::max(max_step, delta_c_grid[i] - delta_c_grid[i - 1]);
    }
    if (width > 0 && max_step > 0.1 * width) {
        std::ostringstream os;
        os << "grid step " << angular_to_mhz(max_step) << " MHz exceeds one tenth of the narrowest "
           << "expected feature width (" << angular_to_mhz(width) << " MHz)";
        trace.warnings.push_back(os.str());
    }
    return trace;
}

ErrorSignalTrace error_signal_scan(std::span<const double> delta_c_grid, const eit::CascadeSystem& sys,
                                   const FmParams& fm, const quad::QuadratureSpec& quad,
                                   double delta_p0) {
    return error_signal_scan(delta_c_grid, eit::LadderMedium(sys, quad), fm, delta_p0);
}

double dispersive_phase(const eit::LadderMedium& medium, const FmParams& fm, double delta_p0,
                        double step) {
    const auto d = fm_beat_amplitude(delta_p0, step, medium, fm) -
                   fm_beat_amplitude(delta_p0, -step, medium, fm);
    return std::arg(d);
}

double modulated_transmission(double delta_p0, double delta_c, const eit::LadderMedium& medium,
                              const FmParams& fm) {
    const double j0 = std::cyl_bessel_j(0.0, fm.beta);
    const double j1 = std::cyl_bessel_j(1.0, fm.beta);
    const double carrier = j0 * j0 * std::norm(medium.transmission(delta_p0, delta_c));
    const double sidebands = j1 * j1 * (std::norm(medium.transmission(delta_p0 + fm.omega_m, delta_c)) +
                                        std::norm(medium.transmission(delta_p0 - fm.omega_m, delta_c)));
    return (carrier + sidebands) / (j0 * j0 + 2.0 * j1 * j1);
}

Crossing zero_crossing_slope(const ErrorSignalTrace& trace, double half_window, double center) {
    return zero_crossing_slope(trace.detunings, trace.volts, half_window, center);
}

namespace {

// First local extremum of sign·y walking from `start` in direction `dir`.
std::size_t walk_to_extremum(std::span<const double> y, std::size_t start, int dir, double sign) {
    std::size_t i = start;
    const auto n = static_cast<std::ptrdiff_t>(y.size());
    while (true) {
        const auto next = static_cast<std::ptrdiff_t>(i) + dir;
        if (next < 0 || next >= n) return i;
        if (sign * y[static_cast<std::size_t>(next)] < sign * y[i]) return i;
        i = static_cast<std::size_t>(next);
    }
}

}  // namespace

Crossing zero_crossing_slope(std::span<const double> x, std::span<const double> y, double half_window,
                             double center) {
    if (x.size() != y.size() || x.size() < 2) throw InvalidArgument("trace must have >= 2 matching samples");
    if (!(half_window > 0)) throw InvalidArgument("window must be > 0");

    // Sign changes inside the window, skipping exact zeros.
    std::vector<std::pair<std::size_t, std::size_t>> brackets;
    std::ptrdiff_t last_nonzero = -1;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (std::abs(x[i] - center) > half_window) continue;
        if (y[i] == 0.0) continue;
        if (last_nonzero >= 0 && (y[static_cast<std::size_t>(last_nonzero)] > 0) != (y[i] > 0)) {
            brackets.emplace_back(static_cast<std::size_t>(last_nonzero), i);
        }
        last_nonzero = static_cast<std::ptrdiff_t>(i);
    }
    if (brackets.empty()) throw NoCrossing("no sign change within the window");
    if (brackets.size() > 1) {
        throw AmbiguousCrossing(std::to_string(brackets.size()) + " sign changes within the window");
    }

    const auto [lo, hi] = brackets.front();
    const double sign_lo = y[lo] > 0 ? 1.0 : -1.0;
    const std::size_t ext_lo = walk_to_extremum(y, lo, -1, sign_lo);
    const std::size_t ext_hi = walk_to_extremum(y, hi, +1, -sign_lo);

    Crossing out;
    out.lower_extremum = x[ext_lo];
    out.upper_extremum = x[ext_hi];
    out.capture_range = x[ext_hi] - x[ext_lo];

    // Points within the central 25% of the peak-to-peak extent, contiguous around the crossing.
    const double p2p = std::abs(y[ext_hi] - y[ext_lo]);
    const double band = 0.125 * p2p;
    std::size_t a = lo;
    std::size_t b = hi;
    while (a > ext_lo && std::abs(y[a - 1]) <= band) --a;
    while (b < ext_hi && std::abs(y[b + 1]) <= band) ++b;

    // Linear-interpolation root as the starting bracket.
    double root = x[lo] - y[lo] * (x[hi] - x[lo]) / (y[hi] - y[lo]);
    const std::size_t count = b - a + 1;
    if (count >= 6) {
        // Cubic least squares about the linear root, so the x¹ coefficient is the slope.
        Eigen::MatrixXd A(count, 4);
        Eigen::VectorXd rhs(count);
        const double scale = std::max(std::abs(x[a] - root), std::abs(x[b] - root));
        for (std::size_t k = 0; k < count; ++k) {
            const double s = (x[a + k] - root) / scale;
            A(k, 0) = 1.0;
            A(k, 1) = s;
            A(k, 2) = s * s;
            A(k, 3) = s * s * s;
            rhs(k) = y[a + k];
        }
        const Eigen::Vector4d c = A.colPivHouseholderQr().solve(rhs);
        auto poly = [&](double s) { return c(0) + s * (c(1) + s * (c(2) + s * c(3))); };
        auto dpoly = [&](double s) { return c(1) + s * (2.0 * c(2) + s * 3.0 * c(3)); };
        // Bisection on the fitted polynomial inside the sample bracket.
        double sl = (x[lo] - root) / scale;
        double sh = (x[hi] - root) / scale;
        const double tol = 1e-3 * std::max(out.capture_range, x[hi] - x[lo]) / scale;
        if (poly(sl) * poly(sh) <= 0) {
            while (sh - sl > 1e-3 * tol) {
                const double m = 0.5 * (sl + sh);
                if ((poly(m) > 0) == (poly(sl) > 0)) sl = m; else sh = m;
            }
            const double s0 = 0.5 * (sl + sh);
            out.crossing = root + scale * s0;
            out.slope = dpoly(s0) / scale;
        } else {
            out.crossing = root;
            out.slope = c(1) / scale;
        }
    } else if (count >= 2) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (std::size_t k = a; k <= b; ++k) {
            sx += x[k];
            sy += y[k];
            sxx += x[k] * x[k];
            sxy += x[k] * y[k];
        }
        const double n = static_cast<double>(count);
        out.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        out.crossing = root;
    }
    return out;
}

std::vector<double> two_tier_grid(double start, double stop, double coarse_step,
                                  std::span<const double> centers, double fine_half_width,
                                  double fine_step) {
    if (!(stop > start) || !(coarse_step > 0) || !(fine_step > 0) || !(fine_half_width >= 0)) {
        throw InvalidArgument("invalid scan grid");
    }
    std::vector<double> g;
    const auto nc = static_cast<long>(std::floor((stop - start) / coarse_step + 1e-9));
    for (long i = 0; i <= nc; ++i) g.push_back(start + coarse_step * static_cast<double>(i));
    if (g.back() < stop) g.push_back(stop);
    for (double c : centers) {
        const auto nf = static_cast<long>(std::floor(fine_half_width / fine_step));
        for (long i = -nf; i <= nf; ++i) {
            const double v = c + fine_step * static_cast<double>(i);
            if (v >= start && v <= stop) g.push_back(v);
        }
    }
    std::sort(g.begin(), g.end());
    std::vector<double> out;
    const double min_gap = 1e-6 * fine_step;
    for (double v : g) {
        if (out.empty() || v - out.back() > min_gap) out.push_back(v);
    }
    return out;
}

}  // namespace eitlock::fm
