#include "eitlock/lock_metrology.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "eitlock/errors.hpp"
#include "eitlock/simd/kernels.hpp"

namespace eitlock::metrology {

std::string to_string(Method m) {
    switch (m) {
        case Method::rms_over_slope: return "rms_over_slope";
        case Method::beat_note: return "beat_note";
        case Method::spectrum_fit: return "spectrum_fit";
    }
    return "unknown";
}

namespace {

double detrended_rms(std::span<const double> x, Detrend detrend) {
    if (x.empty()) return 0.0;
    const double n = static_cast<double>(x.size());
    const double mean = simd::sum(x) / n;
    if (detrend == Detrend::mean || x.size() < 3) return std::sqrt(simd::sum_sq_dev(x, mean) / n);
    // Least-squares line over sample index, centered.
    const double tc = 0.5 * (n - 1.0);
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double t = static_cast<double>(i) - tc;
        sxy += t * (x[i] - mean);
        sxx += t * t;
    }
    const double b = sxy / sxx;
    double ss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = x[i] - mean - b * (static_cast<double>(i) - tc);
        ss += r * r;
    }
    return std::sqrt(ss / n);
}

std::vector<double> low_pass(std::span<const double> x, double fs, double fc) {
    const double K = 2.0 * fs;
    const double wc = kTwoPi * fc;
    const double a = wc / (wc + K);
    const double b = (wc - K) / (wc + K);
    std::vector<double> y(x.size());
    double x_prev = 0.0;
    double y_prev = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        y_prev = a * (x[k] + x_prev) - b * y_prev;
        x_prev = x[k];
        y[k] = y_prev;
    }
    return y;
}

double mean_of(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double standard_error(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

}  // namespace

LinewidthEstimate linewidth_rms_over_slope(std::span<const double> volts, double fs, double slope,
                                           double window_s, const RmsOptions& opt) {
    if (!(slope != 0) || !std::isfinite(slope)) throw InvalidArgument("slope must be nonzero");
    if (!(fs > 0)) throw InvalidArgument("sample rate must be > 0");
    if (opt.monitor_bandwidth_hz < 0) throw InvalidArgument("monitor_bandwidth must be >= 0");
    std::size_t n = volts.size();
    if (window_s > 0) {
        const double want = std::round(window_s * fs);
        if (want > static_cast<double>(volts.size())) {
            throw InvalidArgument("series shorter than the averaging window");
        }
        n = static_cast<std::size_t>(want);
    }

    std::vector<double> filtered;
    std::span<const double> x = volts;
    if (opt.monitor_bandwidth_hz > 0) {
        filtered = low_pass(volts, fs, opt.monitor_bandwidth_hz);
        x = filtered;
        // Five filter time constants of start-up are never part of the window.
        const auto settle = static_cast<std::size_t>(std::ceil(5.0 * fs / (kTwoPi * opt.monitor_bandwidth_hz)));
        if (settle >= x.size()) throw InvalidArgument("series shorter than the monitor filter settling time");
        n = std::min(n, x.size() - settle);
    }
    x = x.subspan(x.size() - n);

    LinewidthEstimate out;
    out.method = Method::rms_over_slope;
    out.window = static_cast<double>(n) / fs;
    out.value = detrended_rms(x, opt.detrend) / std::abs(slope);

    const std::size_t blocks = static_cast<std::size_t>(std::max(opt.uncertainty_blocks, 0));
    if (blocks >= 2 && n >= 2 * blocks) {
        const std::size_t len = n / blocks;
        std::vector<double> per_block;
        for (std::size_t b = 0; b < blocks; ++b) {
            per_block.push_back(detrended_rms(x.subspan(b * len, len), opt.detrend) / std::abs(slope));
        }
        out.uncertainty = standard_error(per_block);
    }
    return out;
}

std::vector<std::complex<double>> beat_field(const servo::FrequencyTimeSeries& a,
                                             const servo::FrequencyTimeSeries& b) {
    if (a.sample_rate != b.sample_rate) throw InvalidArgument("beat inputs need equal sample rates");
    const std::size_t n = std::min(a.samples.size(), b.samples.size());
    std::vector<std::complex<double>> z(n);
    // Accumulate in long double so the phase stays accurate over long records;
    // the difference is antisymmetric in (a, b) exactly.
    long double phase = 0.0L;
    const long double step = static_cast<long double>(kTwoPi) / a.sample_rate;
    for (std::size_t k = 0; k < n; ++k) {
        z[k] = std::polar(1.0, static_cast<double>(std::fmod(phase, 2.0L * static_cast<long double>(kPi))));
        phase += step * (static_cast<long double>(a.samples[k]) - static_cast<long double>(b.samples[k]));
    }
    return z;
}

std::vector<LinewidthEstimate> beat_note_linewidth(const servo::FrequencyTimeSeries& a,
                                                   const servo::FrequencyTimeSeries& b, double segment_length_s,
                                                   const BeatOptions& opt) {
    if (a.sample_rate != b.sample_rate) throw InvalidArgument("beat inputs need equal sample rates");
    const double fs = a.sample_rate;
    const std::size_t n = std::min(a.samples.size(), b.samples.size());
    const double seg_d = std::round(segment_length_s * fs);
    if (!(seg_d >= 8)) throw InvalidArgument("segment shorter than 8 samples");
    if (seg_d > static_cast<double>(n)) throw InvalidArgument("segment_length exceeds the record duration");
    const std::size_t seg = static_cast<std::size_t>(seg_d);
    if (!(opt.overlap >= 0 && opt.overlap < 1)) throw InvalidArgument("overlap must be in [0, 1)");
    const std::size_t hop = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(seg * (1.0 - opt.overlap))));

    const auto z = beat_field(a, b);
    const std::span<const std::complex<double>> zs(z);

    std::vector<LinewidthEstimate> out;
    for (std::size_t depth : opt.depths) {
        if (depth == 0) throw InvalidArgument("averaging depth must be >= 1");
        const std::size_t span = seg + (depth - 1) * hop;
        const std::size_t blocks = n / span;
        if (blocks == 0) {
            throw InsufficientSamples("averaging depth " + std::to_string(depth) + " needs " +
                                      std::to_string(span) + " samples, record has " + std::to_string(n));
        }
        std::vector<double> widths;
        double rbw = 0.0;
        for (std::size_t blk = 0; blk < blocks; ++blk) {
            const auto psd = spectral::welch(zs.subspan(blk * span, span), fs, seg, opt.overlap, opt.window);
            rbw = psd.resolution_bandwidth;
            widths.push_back(spectral::smoothed_full_width_half_max(psd));
        }
        if (opt.expected_width_hz > 0 && rbw > opt.expected_width_hz / 4) {
            throw ResolutionError("resolution bandwidth " + std::to_string(rbw) + " Hz exceeds a quarter of the expected width " +
                                  std::to_string(opt.expected_width_hz) + " Hz; use longer segments");
        }
        LinewidthEstimate e;
        e.method = Method::beat_note;
        e.value = mean_of(widths);
        e.uncertainty = standard_error(widths);
        e.window = static_cast<double>(span) / fs;
        e.resolution_bandwidth = rbw;
        e.upper_bound = e.value < 4.0 * rbw;
        out.push_back(e);
    }
    return out;
}

std::vector<AllanPoint> allan_deviation(const servo::FrequencyTimeSeries& series, std::span<const double> taus) {
    const auto& y = series.samples;
    const double fs = series.sample_rate;
    const std::size_t n = y.size();
    std::vector<long double> prefix(n + 1, 0.0L);
    for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + y[i];

    std::vector<AllanPoint> out;
    std::vector<double> diffs;
    for (double tau : taus) {
        const double m_d = std::round(tau * fs);
        if (!(m_d >= 1)) throw InvalidArgument("tau shorter than one sample");
        if (tau > series.duration() / 4) {
            throw InsufficientSamples("tau " + std::to_string(tau) + " s exceeds a quarter of the record (" +
                                      std::to_string(series.duration()) + " s)");
        }
        const std::size_t m = static_cast<std::size_t>(m_d);
        const std::size_t count = n - 2 * m + 1;
        diffs.resize(count);
        const long double inv_m = 1.0L / static_cast<long double>(m);
        for (std::size_t k = 0; k < count; ++k) {
            const long double first = prefix[k + m] - prefix[k];
            const long double second = prefix[k + 2 * m] - prefix[k + m];
            diffs[k] = static_cast<double>((second - first) * inv_m);
        }
        const double var = simd::sum_sq_dev(diffs, 0.0) / (2.0 * static_cast<double>(count));
        out.push_back({m_d / fs, std::sqrt(var), count});
    }
    return out;
}

std::vector<double> cold_eit_model(std::span<const double> delta_p, const eit::CascadeSystem& base,
                                   const ColdEitParameters& p) {
    eit::CascadeSystem sys = base;
    sys.omega_c = p.omega_c;
    sys.rates.gamma_rel_laser = p.gamma_rel_laser;
    std::vector<double> shifted(delta_p.begin(), delta_p.end());
    for (double& d : shifted) d -= p.center;
    auto t = eit::cold_spectrum(shifted, sys);
    for (double& v : t) v = p.baseline + p.amplitude * v;
    return t;
}

namespace {

constexpr std::array<bool, kColdEitParameterCount> kLogScaled{true, true, false, false, false};

std::array<double, kColdEitParameterCount> as_array(const ColdEitParameters& p) {
    return {p.omega_c, p.gamma_rel_laser, p.amplitude, p.baseline, p.center};
}

ColdEitParameters from_array(const std::array<double, kColdEitParameterCount>& a) {
    return {a[0], a[1], a[2], a[3], a[4]};
}

}  // namespace

LinewidthEstimate FitResult::linewidth() const {
    LinewidthEstimate e;
    e.method = Method::spectrum_fit;
    e.value = parameters.gamma_rel_laser / kTwoPi;
    e.uncertainty = uncertainties.gamma_rel_laser / kTwoPi;
    return e;
}

FitResult fit_cold_eit(std::span<const double> delta_p, std::span<const double> data,
                       const eit::CascadeSystem& base, const ColdEitParameters& init, const FitOptions& opt) {
    if (delta_p.size() != data.size()) throw InvalidArgument("detuning and transmission lengths differ");
    const auto init_a = as_array(init);
    std::vector<std::size_t> free_idx;
    for (std::size_t i = 0; i < kColdEitParameterCount; ++i) {
        if (!opt.free[i]) continue;
        if (kLogScaled[i] && !(init_a[i] > 0)) {
            throw InvalidArgument("initial Rabi frequency and dephasing must be > 0 when fitted");
        }
        free_idx.push_back(i);
    }
    if (data.size() <= free_idx.size()) throw InvalidArgument("need more points than free parameters");
    base.validate();

    auto unpack = [&](const Eigen::VectorXd& x) {
        auto a = init_a;
        for (std::size_t j = 0; j < free_idx.size(); ++j) {
            const std::size_t i = free_idx[j];
            a[i] = kLogScaled[i] ? std::exp(x[static_cast<Eigen::Index>(j)]) : x[static_cast<Eigen::Index>(j)];
        }
        return from_array(a);
    };
    const Eigen::Map<const Eigen::VectorXd> y(data.data(), static_cast<Eigen::Index>(data.size()));
    const lsq::ResidualFn residual = [&](const Eigen::VectorXd& x) {
        const auto m = cold_eit_model(delta_p, base, unpack(x));
        return Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(m.data(), static_cast<Eigen::Index>(m.size())) - y);
    };

    Eigen::VectorXd x0(static_cast<Eigen::Index>(free_idx.size()));
    for (std::size_t j = 0; j < free_idx.size(); ++j) {
        const std::size_t i = free_idx[j];
        x0[static_cast<Eigen::Index>(j)] = kLogScaled[i] ? std::log(init_a[i]) : init_a[i];
    }
    const lsq::LmResult lm = lsq::levenberg_marquardt(residual, x0, opt.lm);

    FitResult out;
    out.parameters = unpack(lm.x);
    out.converged = lm.converged;
    out.iterations = lm.iterations;
    const double ssr = lm.residuals.squaredNorm();
    out.residual_norm = std::sqrt(ssr);
    const double dof = static_cast<double>(data.size() - free_idx.size());
    const double s2 = opt.noise_sigma > 0 ? opt.noise_sigma * opt.noise_sigma : ssr / dof;
    out.reduced_chi_square = opt.noise_sigma > 0 ? ssr / dof / s2 : ssr / dof;

    // Linearized covariance, mapped from the log scale back to natural units.
    const Eigen::MatrixXd cov_x = s2 * lsq::normal_inverse(lm.jacobian);
    const auto natural = as_array(out.parameters);
    Eigen::VectorXd d(static_cast<Eigen::Index>(free_idx.size()));
    for (std::size_t j = 0; j < free_idx.size(); ++j) {
        d[static_cast<Eigen::Index>(j)] = kLogScaled[free_idx[j]] ? natural[free_idx[j]] : 1.0;
    }
    out.covariance = d.asDiagonal() * cov_x * d.asDiagonal();
    std::array<double, kColdEitParameterCount> sig{};
    for (std::size_t j = 0; j < free_idx.size(); ++j) {
        const auto jj = static_cast<Eigen::Index>(j);
        sig[free_idx[j]] = std::sqrt(std::max(out.covariance(jj, jj), 0.0));
    }
    out.uncertainties = from_array(sig);

    out.model = cold_eit_model(delta_p, base, out.parameters);
    out.residuals.resize(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) out.residuals[i] = data[i] - out.model[i];
    return out;
}

}  // namespace eitlock::metrology
