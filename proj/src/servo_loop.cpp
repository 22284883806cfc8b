#include "eitlock/servo_loop.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <random>

#include "eitlock/errors.hpp"
#include "eitlock/seeding.hpp"

namespace eitlock::servo {

void NoiseModel::validate() const {
    if (!(white_psd >= 0) || !std::isfinite(white_psd)) throw InvalidArgument("noise.white_psd must be >= 0");
    if (!(random_walk_coeff >= 0) || !std::isfinite(random_walk_coeff)) {
        throw InvalidArgument("noise.random_walk_coeff must be >= 0");
    }
}

double NoiseModel::psd(double f, double fs) const {
    const double s = std::sin(kPi * f / fs);
    const double rw = s == 0.0 ? (random_walk_coeff > 0 ? INFINITY : 0.0)
                               : 2.0 * random_walk_coeff / (fs * fs) / (4.0 * s * s);
    return white_psd + rw;
}

void ControllerConfig::validate() const {
    if (!(fast.cutoff_hz > 0)) throw InvalidArgument("controller.fast.cutoff must be > 0");
    if (!std::isfinite(fast.proportional_gain) || !std::isfinite(fast.integrator_corner_hz) ||
        !std::isfinite(slow.integrator_gain)) {
        throw InvalidArgument("controller gains must be finite");
    }
    if (fast.integrator_corner_hz < 0 || slow.integrator_gain < 0) {
        throw InvalidArgument("controller integrator gains must be >= 0");
    }
    if (!(slow.output_range_hz > 0)) throw InvalidArgument("controller.slow.output_range must be > 0");
    if (sign != 1 && sign != -1) throw InvalidArgument("controller.sign must be +1 or -1");
}

Discriminant Discriminant::linear(double slope, double noise_rms, double capture_half_range) {
    if (!(slope != 0) || !std::isfinite(slope)) throw InvalidArgument("discriminant slope must be nonzero");
    Discriminant d;
    d.slope_ = slope;
    d.noise_rms_ = noise_rms;
    d.capture_half_range_ = capture_half_range;
    return d;
}

Discriminant Discriminant::from_trace(const fm::ErrorSignalTrace& trace, const fm::Crossing& crossing,
                                      double noise_rms) {
    if (trace.detunings.size() < 2 || trace.detunings.size() != trace.volts.size()) {
        throw InvalidArgument("discriminant shape needs a sampled trace");
    }
    if (!(crossing.crossing >= trace.detunings.front() && crossing.crossing <= trace.detunings.back())) {
        throw InvalidArgument("discriminant shape must contain the crossing");
    }
    Discriminant d = linear(crossing.slope * kTwoPi, noise_rms,
                            std::min(crossing.crossing - crossing.lower_extremum,
                                     crossing.upper_extremum - crossing.crossing) / kTwoPi);
    d.offsets_.reserve(trace.detunings.size());
    for (double x : trace.detunings) d.offsets_.push_back((x - crossing.crossing) / kTwoPi);
    d.values_ = trace.volts;
    return d;
}

Discriminant Discriminant::with_noise(double rms) const {
    Discriminant d = *this;
    d.noise_rms_ = rms;
    return d;
}

double Discriminant::volts(double e) const {
    if (offsets_.empty()) return slope_ * e;
    if (e <= offsets_.front()) return values_.front();
    if (e >= offsets_.back()) return values_.back();
    const auto it = std::upper_bound(offsets_.begin(), offsets_.end(), e);
    const std::size_t hi = static_cast<std::size_t>(it - offsets_.begin());
    const std::size_t lo = hi - 1;
    const double t = (e - offsets_[lo]) / (offsets_[hi] - offsets_[lo]);
    return values_[lo] + t * (values_[hi] - values_[lo]);
}

namespace {

std::size_t sample_count(double fs, double duration, std::size_t budget) {
    if (!(fs > 0) || !(duration >= 0)) throw InvalidArgument("sample rate must be > 0 and duration >= 0");
    const double n = std::round(duration * fs);
    if (n > static_cast<double>(budget)) {
        throw BudgetExceeded("requested " + std::to_string(static_cast<long long>(n)) +
                             " samples exceeds the budget of " + std::to_string(budget));
    }
    return static_cast<std::size_t>(n);
}

struct Bilinear {
    double T, lp_a, lp_b, omega_i;
};

Bilinear coefficients(const ControllerConfig& c, double fs) {
    const double K = 2.0 * fs;
    const double wc = kTwoPi * c.fast.cutoff_hz;
    return {1.0 / fs, wc / (wc + K), (wc - K) / (wc + K), kTwoPi * c.fast.integrator_corner_hz};
}

using Poly = std::vector<double>;  // coefficients of z^0, z^-1, z^-2, …

Poly multiply(const Poly& a, const Poly& b) {
    Poly out(a.size() + b.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
    return out;
}

}  // namespace

FrequencyTimeSeries simulate_free_run(const NoiseModel& noise, double fs, double duration,
                                      std::size_t budget) {
    noise.validate();
    const std::size_t n = sample_count(fs, duration, budget);
    FrequencyTimeSeries out;
    out.sample_rate = fs;
    out.seed = noise.seed;
    out.lineage = "free_run(seed=" + std::to_string(noise.seed) + ")";
    out.samples.resize(n);

    std::mt19937_64 gen(noise.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double white_sigma = std::sqrt(noise.white_psd * fs / 2.0);
    const double step_sigma = std::sqrt(noise.random_walk_coeff / fs);
    double walk = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double w = normal(gen);
        const double s = normal(gen);
        walk += step_sigma * s;
        out.samples[k] = white_sigma * w + walk;
    }
    return out;
}

LockResult simulate_locked(const NoiseModel& noise, const ControllerConfig& ctl, const Discriminant& disc,
                           double fs, double duration, const LockOptions& opt) {
    ctl.validate();
    if (fs < 10.0 * ctl.fast.cutoff_hz) {
        throw InvalidArgument("sample rate must be at least 10x the controller cutoff");
    }
    // Probe the discriminant on both sides of the lock point.
    const double probe = 1e-3 * std::min(disc.capture_half_range(), 1e6);
    const double measured_slope = (disc.volts(probe) - disc.volts(-probe)) / (2.0 * probe);
    if (!(ctl.sign * measured_slope > 0) || !(ctl.sign * disc.slope() > 0)) {
        throw WrongSign("controller sign " + std::to_string(ctl.sign) +
                        " drives the laser away from the lock point (discriminant slope " +
                        std::to_string(disc.slope()) + " V/Hz)");
    }

    const FrequencyTimeSeries free = simulate_free_run(noise, fs, duration, opt.sample_budget);
    const std::size_t n = free.samples.size();

    LockResult out;
    for (auto* s : {&out.error_series, &out.error_signal, &out.control_series}) {
        s->sample_rate = fs;
        s->seed = noise.seed;
        s->samples.resize(n);
    }
    out.error_series.lineage = "locked.error(" + free.lineage + ")";
    out.error_signal.lineage = "locked.signal(" + free.lineage + ")";
    out.control_series.lineage = "locked.control(" + free.lineage + ")";

    std::mt19937_64 det_gen(derive_seed(noise.seed, "detector-noise"));
    std::normal_distribution<double> normal(0.0, 1.0);

    const Bilinear bl = coefficients(ctl, fs);
    const double half_t = 0.5 * bl.T;
    const double kp = ctl.fast.proportional_gain;
    const double ki = ctl.slow.integrator_gain;
    const double range = ctl.slow.output_range_hz;
    const double inv_slope = 1.0 / std::abs(disc.slope());
    const std::size_t dwell = static_cast<std::size_t>(std::ceil(opt.unlock_dwell_s * fs));

    double correction = 0.0;
    double x_prev = 0.0, integ = 0.0, pi_prev = 0.0, lp = 0.0, fast_prev = 0.0, slow = 0.0;
    std::size_t outside = 0;
    bool in_event = false;
    for (std::size_t k = 0; k < n; ++k) {
        const double e = free.samples[k] + opt.initial_offset_hz - correction;
        const double y = disc.volts(e) + disc.detector_noise_rms() * normal(det_gen);
        const double x = ctl.sign * y * inv_slope;

        integ += half_t * (x + x_prev);
        const double pi = kp * (x + bl.omega_i * integ);
        lp = bl.lp_a * (pi + pi_prev) - bl.lp_b * lp;
        const double fast = lp;
        slow = std::clamp(slow + half_t * ki * (fast + fast_prev), -range, range);
        correction = fast + slow;

        x_prev = x;
        pi_prev = pi;
        fast_prev = fast;

        out.error_series.samples[k] = e;
        out.error_signal.samples[k] = y;
        out.control_series.samples[k] = correction;

        if (std::abs(e) > disc.capture_half_range()) {
            ++outside;
            if (!in_event && outside >= std::max<std::size_t>(dwell, 1)) {
                in_event = true;
                out.unlock_events.push_back({static_cast<double>(k + 1 - outside) / fs, 0.0});
            }
            if (in_event) out.unlock_events.back().duration_s = static_cast<double>(outside) / fs;
        } else {
            outside = 0;
            in_event = false;
        }
    }
    return out;
}

std::complex<double> open_loop_gain(const ControllerConfig& ctl, double fs, double f) {
    const Bilinear bl = coefficients(ctl, fs);
    const std::complex<double> zi = std::polar(1.0, -kTwoPi * f / fs);
    const std::complex<double> integ = 0.5 * bl.T * (1.0 + zi) / (1.0 - zi);
    const std::complex<double> pi = ctl.fast.proportional_gain * (1.0 + bl.omega_i * integ);
    const std::complex<double> lp = bl.lp_a * (1.0 + zi) / (1.0 + bl.lp_b * zi);
    return zi * lp * pi * (1.0 + ctl.slow.integrator_gain * integ);
}

double unity_gain_frequency(const ControllerConfig& ctl, double fs) {
    const double lo = fs * 1e-7;
    const double hi = 0.5 * fs * (1 - 1e-9);
    const int steps = 400;
    double crossing_lo = -1, crossing_hi = -1;
    double prev_f = lo;
    bool prev_above = std::abs(open_loop_gain(ctl, fs, lo)) >= 1.0;
    for (int i = 1; i <= steps; ++i) {
        const double f = lo * std::pow(hi / lo, static_cast<double>(i) / steps);
        const bool above = std::abs(open_loop_gain(ctl, fs, f)) >= 1.0;
        if (prev_above && !above) {
            crossing_lo = prev_f;
            crossing_hi = f;
        }
        prev_above = above;
        prev_f = f;
    }
    if (crossing_lo < 0) throw InvalidArgument("open-loop gain never crosses unity");
    for (int it = 0; it < 100; ++it) {
        const double mid = std::sqrt(crossing_lo * crossing_hi);
        if (std::abs(open_loop_gain(ctl, fs, mid)) >= 1.0) crossing_lo = mid; else crossing_hi = mid;
    }
    return std::sqrt(crossing_lo * crossing_hi);
}

std::vector<std::complex<double>> closed_loop_poles(const ControllerConfig& ctl, double fs) {
    ctl.validate();
    const Bilinear bl = coefficients(ctl, fs);
    const double h = 0.5 * bl.T;
    const double kp = ctl.fast.proportional_gain;
    const double ki = ctl.slow.integrator_gain;
    const Poly pi_num{kp * (1 + bl.omega_i * h), kp * (-1 + bl.omega_i * h)};
    const Poly integ_den{1.0, -1.0};
    const Poly lp_num{bl.lp_a, bl.lp_a};
    const Poly lp_den{1.0, bl.lp_b};
    const Poly slow_num{1 + ki * h, -1 + ki * h};
    const Poly delay{0.0, 1.0};

    const Poly num = multiply(multiply(multiply(pi_num, lp_num), slow_num), delay);
    const Poly den = multiply(multiply(integ_den, lp_den), integ_den);
    Poly chr(std::max(num.size(), den.size()), 0.0);
    for (std::size_t i = 0; i < num.size(); ++i) chr[i] += num[i];
    for (std::size_t i = 0; i < den.size(); ++i) chr[i] += den[i];
    while (chr.size() > 1 && chr.back() == 0.0) chr.pop_back();

    // chr[0] z^m + chr[1] z^{m−1} + … + chr[m] = 0
    const auto m = static_cast<Eigen::Index>(chr.size()) - 1;
    if (m < 1) return {};
    Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(m, m);
    for (Eigen::Index j = 0; j < m; ++j) companion(0, j) = -chr[static_cast<std::size_t>(j + 1)] / chr[0];
    for (Eigen::Index i = 1; i < m; ++i) companion(i, i - 1) = 1.0;
    Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, false);
    std::vector<std::complex<double>> roots;
    for (Eigen::Index i = 0; i < m; ++i) roots.push_back(solver.eigenvalues()(i));
    return roots;
}

bool is_stable(const ControllerConfig& ctl, double fs) {
    const auto roots = closed_loop_poles(ctl, fs);
    return std::all_of(roots.begin(), roots.end(), [](auto z) { return std::abs(z) < 1.0; });
}

std::vector<double> closed_loop_psd_prediction(const NoiseModel& noise, const ControllerConfig& ctl,
                                               const Discriminant& disc, double fs,
                                               std::span<const double> f_grid) {
    noise.validate();
    ctl.validate();
    const double detector_psd = 2.0 * disc.detector_noise_rms() * disc.detector_noise_rms() / fs;
    const double slope_sq = disc.slope() * disc.slope();
    std::vector<double> out;
    out.reserve(f_grid.size());
    for (double f : f_grid) {
        const auto g = open_loop_gain(ctl, fs, f);
        const double sens = 1.0 / std::norm(1.0 + g);
        const double comp = std::norm(g) * sens;
        out.push_back(sens * noise.psd(f, fs) + comp * detector_psd / slope_sq);
    }
    return out;
}

}  // namespace eitlock::servo
