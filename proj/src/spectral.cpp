#include "eitlock/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <mutex>

#include <Eigen/Dense>

#include "eitlock/errors.hpp"
#include "eitlock/units.hpp"

namespace eitlock::spectral {

namespace {

// Planner calls are not thread-safe in FFTW; execution is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

class Fft {
public:
    explicit Fft(std::size_t n) : n_(n) {
        in_ = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n));
        out_ = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n));
        if (!in_ || !out_) throw std::bad_alloc();
        std::lock_guard lock(planner_mutex());
        plan_ = fftw_plan_dft_1d(static_cast<int>(n), in_, out_, FFTW_FORWARD, FFTW_ESTIMATE);
    }
    ~Fft() {
        {
            std::lock_guard lock(planner_mutex());
            fftw_destroy_plan(plan_);
        }
        fftw_free(in_);
        fftw_free(out_);
    }
    Fft(const Fft&) = delete;
    Fft& operator=(const Fft&) = delete;

    void set(std::size_t i, std::complex<double> v) {
        in_[i][0] = v.real();
        in_[i][1] = v.imag();
    }
    void execute() { fftw_execute(plan_); }
    double power(std::size_t k) const { return out_[k][0] * out_[k][0] + out_[k][1] * out_[k][1]; }
    std::size_t size() const { return n_; }

private:
    std::size_t n_;
    fftw_complex* in_ = nullptr;
    fftw_complex* out_ = nullptr;
    fftw_plan plan_ = nullptr;
};

std::vector<double> make_window(std::size_t n, Window w) {
    std::vector<double> out(n, 1.0);
    if (w == Window::hann) {
        for (std::size_t i = 0; i < n; ++i) out[i] = 0.5 - 0.5 * std::cos(kTwoPi * static_cast<double>(i) / static_cast<double>(n));
    }
    return out;
}

template <class Sample>
std::vector<double> averaged_periodogram(std::span<const Sample> x, std::size_t seg, double overlap,
                                         Window window, std::size_t& segments, double& window_power,
                                         double& window_sum) {
    if (seg < 2 || seg > x.size()) throw InvalidArgument("segment length must be in [2, series length]");
    if (!(overlap >= 0 && overlap < 1)) throw InvalidArgument("overlap must be in [0, 1)");
    const auto w = make_window(seg, window);
    window_power = 0.0;
    window_sum = 0.0;
    for (double v : w) {
        window_power += v * v;
        window_sum += v;
    }
    const std::size_t hop = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(seg * (1.0 - overlap))));
    Fft fft(seg);
    std::vector<double> acc(seg, 0.0);
    segments = 0;
    for (std::size_t start = 0; start + seg <= x.size(); start += hop) {
        for (std::size_t i = 0; i < seg; ++i) fft.set(i, std::complex<double>(x[start + i]) * w[i]);
        fft.execute();
        for (std::size_t k = 0; k < seg; ++k) acc[k] += fft.power(k);
        ++segments;
    }
    for (double& v : acc) v /= static_cast<double>(segments);
    return acc;
}

}  // namespace

Psd welch(std::span<const double> x, double fs, std::size_t seg, double overlap, Window window) {
    if (!(fs > 0)) throw InvalidArgument("sample rate must be > 0");
    Psd out;
    double wp = 0, ws = 0;
    const auto p = averaged_periodogram(x, seg, overlap, window, out.segments, wp, ws);
    const double norm = 1.0 / (fs * wp);
    const std::size_t half = seg / 2;
    for (std::size_t k = 0; k <= half; ++k) {
        const bool edge = (k == 0) || (seg % 2 == 0 && k == half);
        out.frequency.push_back(fs * static_cast<double>(k) / static_cast<double>(seg));
        out.density.push_back((edge ? 1.0 : 2.0) * p[k] * norm);
    }
    out.resolution_bandwidth = fs * wp / (ws * ws);
    return out;
}

Psd welch(std::span<const std::complex<double>> z, double fs, std::size_t seg, double overlap,
          Window window) {
    if (!(fs > 0)) throw InvalidArgument("sample rate must be > 0");
    Psd out;
    double wp = 0, ws = 0;
    const auto p = averaged_periodogram(z, seg, overlap, window, out.segments, wp, ws);
    const double norm = 1.0 / (fs * wp);
    // Negative frequencies first.
    const std::size_t first_negative = seg / 2 + (seg % 2);
    for (std::size_t k = first_negative; k < seg; ++k) {
        out.frequency.push_back(fs * (static_cast<double>(k) - static_cast<double>(seg)) / static_cast<double>(seg));
        out.density.push_back(p[k] * norm);
    }
    for (std::size_t k = 0; k < first_negative; ++k) {
        out.frequency.push_back(fs * static_cast<double>(k) / static_cast<double>(seg));
        out.density.push_back(p[k] * norm);
    }
    out.resolution_bandwidth = fs * wp / (ws * ws);
    return out;
}

double full_width_half_max(const Psd& psd) {
    const auto& d = psd.density;
    const auto& f = psd.frequency;
    if (d.size() < 3) throw InvalidArgument("spectrum too short for a width");
    const auto peak_it = std::max_element(d.begin(), d.end());
    if (*peak_it <= 0) return 0.0;
    const std::size_t peak = static_cast<std::size_t>(peak_it - d.begin());
    const double half = 0.5 * *peak_it;

    std::size_t l = peak;
    while (l > 0 && d[l] >= half) --l;
    std::size_t r = peak;
    while (r + 1 < d.size() && d[r] >= half) ++r;
    auto cross = [&](std::size_t below, std::size_t above) {
        const double t = (half - d[below]) / (d[above] - d[below]);
        return f[below] + t * (f[above] - f[below]);
    };
    const double left = d[l] < half ? cross(l, l + 1) : f[l];
    const double right = d[r] < half ? cross(r, r - 1) : f[r];
    return right - left;
}

double smoothed_full_width_half_max(const Psd& psd) {
    const auto& f = psd.frequency;
    const std::size_t n = f.size();
    if (n < 2) return 0.0;
    const double df = f[1] - f[0];
    // Seed from the outermost half-maximum crossings of the raw spectrum: noise
    // dips on the flanks cannot cut it short, so the first smoothing is never too light.
    const auto top = std::max_element(psd.density.begin(), psd.density.end());
    if (!(*top > 0)) return 0.0;
    double width = 0.0;
    {
        const double half = 0.5 * *top;
        std::size_t first = n, last = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (psd.density[i] >= half) {
                first = std::min(first, i);
                last = i;
            }
        }
        width = f[last] - f[first] + df;
    }
    double center = f[static_cast<std::size_t>(top - psd.density.begin())];
    for (int pass = 0; pass < 3; ++pass) {
        const std::size_t k = static_cast<std::size_t>(std::floor(width / df / 20.0));
        std::vector<double> s(n);
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t lo = i >= k ? i - k : 0;
            const std::size_t hi = std::min(n - 1, i + k);
            double acc = 0.0;
            for (std::size_t j = lo; j <= hi; ++j) acc += psd.density[j];
            s[i] = acc / static_cast<double>(hi - lo + 1);
        }
        std::size_t p = static_cast<std::size_t>(std::max_element(s.begin(), s.end()) - s.begin());
        if (pass == 0) {
            center = f[p];
        } else {
            p = static_cast<std::size_t>(std::clamp(std::lround((center - f[0]) / df), 0L, static_cast<long>(n - 1)));
        }

        // Parabola through the top fifth of the line by least squares, read at the
        // line center; its vertex would be biased upward by the noise.
        double peak = s[p];
        double m[3][3] = {}, rhs[3] = {};
        std::size_t used = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double x = (f[i] - center) / width;
            if (std::abs(x) > 0.2) continue;
            const double b[3] = {1.0, x, x * x};
            for (int r = 0; r < 3; ++r) {
                rhs[r] += b[r] * psd.density[i];
                for (int c = 0; c < 3; ++c) m[r][c] += b[r] * b[c];
            }
            ++used;
        }
        if (used >= 7) {
            Eigen::Matrix3d a;
            Eigen::Vector3d y;
            for (int r = 0; r < 3; ++r) {
                y[r] = rhs[r];
                for (int c = 0; c < 3; ++c) a(r, c) = m[r][c];
            }
            const Eigen::Vector3d q = a.ldlt().solve(y);
            if (q[2] < 0) peak = q[0];
        }
        // Each flank is placed midway between its innermost and outermost
        // half-maximum crossings; either alone is pulled by residual ripple.
        const double half = 0.5 * peak;
        auto cross = [&](std::size_t below, std::size_t above) {
            const double t = (half - s[below]) / (s[above] - s[below]);
            return f[below] + t * (f[above] - f[below]);
        };
        std::size_t l = p;
        while (l > 0 && s[l] >= half) --l;
        std::size_t r = p;
        while (r + 1 < n && s[r] >= half) ++r;
        std::size_t lo_out = l, hi_out = r;
        for (std::size_t i = 0; i < l; ++i) {
            if (s[i] >= half) {
                lo_out = i > 0 ? i - 1 : 0;
                break;
            }
        }
        for (std::size_t i = n - 1; i > r; --i) {
            if (s[i] >= half) {
                hi_out = i + 1 < n ? i + 1 : i;
                break;
            }
        }
        auto left_at = [&](std::size_t i) { return s[i] < half && i + 1 < n ? cross(i, i + 1) : f[i]; };
        auto right_at = [&](std::size_t i) { return s[i] < half && i > 0 ? cross(i, i - 1) : f[i]; };
        const double left = 0.5 * (left_at(l) + left_at(lo_out));
        const double right = 0.5 * (right_at(r) + right_at(hi_out));
        width = right - left;
        center = 0.5 * (left + right);
    }
    return width;
}

}  // namespace eitlock::spectral
