#pragma once

// Discrete-time lock of the coupling laser to the EIT error signal.
//
// Per sample k (period T = 1/fs):
//   e[k]  = ν_free[k] + offset − c[k−1]          frequency error, Hz
//   y[k]  = D(e[k]) + n[k]                        error signal, V (discriminant + detector noise)
//   x[k]  = sign · y[k] / |slope|                 frequency-equivalent input, Hz
//   fast  = LP(z) · PI(z) · x                      current branch
//   slow  = clamp(Ki · I(z) · fast, ±range)        piezo branch, offloads the fast branch
//   c[k]  = fast[k] + slow[k]
// with I(z) = (T/2)(1+z⁻¹)/(1−z⁻¹), PI(z) = Kp(1 + ω_I I(z)) and LP the bilinear
// image of 1/(1 + s/ω_c). Open-loop gain G(z) = z⁻¹ LP PI (1 + Ki I).

#include <complex>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "eitlock/fm_lock_signal.hpp"

namespace eitlock::servo {

inline constexpr std::size_t kDefaultSampleBudget = 50'000'000;

struct NoiseModel {
    // Level of white frequency noise, Hz²/Hz. A sample has variance white_psd·fs/2,
    // so a laser with this noise alone has a Lorentzian FWHM of π·white_psd.
    double white_psd = 0.0;
    // Frequency random-walk strength D, Hz²/s: Var[ν(t+τ) − ν(t)] = D·τ.
    double random_walk_coeff = 0.0;
    std::uint64_t seed = 1;

    void validate() const;
    // One-sided PSD of the sampled frequency noise at f, Hz²/Hz.
    double psd(double f, double sample_rate) const;
};

struct FrequencyTimeSeries {
    std::vector<double> samples;  // Hz (or V for error-signal records)
    double sample_rate = 1.0;
    std::uint64_t seed = 0;
    std::string lineage;

    double duration() const { return static_cast<double>(samples.size()) / sample_rate; }
};

struct FastBranch {
    double proportional_gain = 0.3;
    double integrator_corner_hz = 1e6;
    double cutoff_hz = 1e6;
};

struct SlowBranch {
    double integrator_gain = kTwoPi * 10.0;  // 1/s; slow branch dominates below gain/2π
    double output_range_hz = 50e6;
};

struct ControllerConfig {
    FastBranch fast;
    SlowBranch slow;
    int sign = +1;

    void validate() const;
};

// Error-signal transduction around the lock point.
class Discriminant {
public:
    static Discriminant linear(double slope_v_per_hz, double detector_noise_rms = 0.0,
                               double capture_half_range_hz = 1e300);
    // Shape taken from a scanned error signal; offsets are measured from the crossing.
    static Discriminant from_trace(const fm::ErrorSignalTrace& trace, const fm::Crossing& crossing,
                                   double detector_noise_rms = 0.0);

    double slope() const { return slope_; }  // V/Hz
    double detector_noise_rms() const { return noise_rms_; }
    double capture_half_range() const { return capture_half_range_; }  // Hz
    bool is_linear() const { return offsets_.empty(); }
    Discriminant with_noise(double rms) const;

    // Volts at frequency error e (Hz). Shaped discriminants interpolate linearly
    // and hold the end values beyond the sampled range.
    double volts(double error_hz) const;

private:
    double slope_ = 0.0;
    double noise_rms_ = 0.0;
    double capture_half_range_ = 1e300;
    std::vector<double> offsets_;
    std::vector<double> values_;
};

struct LockOptions {
    double initial_offset_hz = 0.0;
    double unlock_dwell_s = 1e-4;
    std::size_t sample_budget = kDefaultSampleBudget;
};

struct UnlockEvent {
    double start_s = 0.0;
    double duration_s = 0.0;
};

struct LockResult {
    FrequencyTimeSeries error_series;   // laser frequency error, Hz
    FrequencyTimeSeries error_signal;   // in-loop error signal, V
    FrequencyTimeSeries control_series; // actuator correction, Hz
    std::vector<UnlockEvent> unlock_events;

    bool locked() const { return unlock_events.empty(); }
};

FrequencyTimeSeries simulate_free_run(const NoiseModel& noise, double sample_rate, double duration,
                                      std::size_t sample_budget = kDefaultSampleBudget);

LockResult simulate_locked(const NoiseModel& noise, const ControllerConfig& controller,
                           const Discriminant& disc, double sample_rate, double duration,
                           const LockOptions& options = {});

// Open-loop gain G at frequency f for the discretized loop (linear discriminant, correct sign).
std::complex<double> open_loop_gain(const ControllerConfig& controller, double sample_rate, double f);

// Frequency where |G| falls through 1, searched on (fmin, fs/2).
double unity_gain_frequency(const ControllerConfig& controller, double sample_rate);

// Roots in z of 1 + G(z) = 0; the linearized loop is stable when all lie inside the unit circle.
std::vector<std::complex<double>> closed_loop_poles(const ControllerConfig& controller, double sample_rate);
bool is_stable(const ControllerConfig& controller, double sample_rate);

// S_err(f) = |1/(1+G)|² S_ν(f) + |G/(1+G)|² S_n / slope², one-sided, Hz²/Hz.
std::vector<double> closed_loop_psd_prediction(const NoiseModel& noise, const ControllerConfig& controller,
                                               const Discriminant& disc, double sample_rate,
                                               std::span<const double> f_grid);

}  // namespace eitlock::servo
