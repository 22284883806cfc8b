#pragma once

// Linewidth estimators for a locked laser: rms of the in-loop error signal
// over the discriminant slope, the width of a beat note between two lasers at
// several averaging depths, and a least-squares fit of a cold-sample EIT
// spectrum. Plus overlapping Allan deviation.

#include <Eigen/Dense>
#include <array>
#include <span>
#include <string>
#include <vector>

#include "eitlock/eit_engine.hpp"
#include "eitlock/least_squares.hpp"
#include "eitlock/servo_loop.hpp"
#include "eitlock/spectral.hpp"

namespace eitlock::metrology {

enum class Method { rms_over_slope, beat_note, spectrum_fit };
std::string to_string(Method m);

struct LinewidthEstimate {
    double value = 0.0;        // Hz
    double uncertainty = 0.0;  // Hz
    Method method = Method::rms_over_slope;
    double window = 0.0;       // s of data behind the estimate
    double resolution_bandwidth = 0.0;  // Hz, beat-note estimates only
    bool upper_bound = false;  // width not resolved; value bounds it from above
};

enum class Detrend { mean, linear };

struct RmsOptions {
    Detrend detrend = Detrend::mean;
    // First-order low-pass applied before the rms, modelling the bandwidth of the
    // instrument that records the error signal. 0 leaves the series unfiltered.
    // The filter starts from rest; its first five time constants are excluded
    // from the window.
    double monitor_bandwidth_hz = 0.0;
    // The window is split into this many blocks; the spread of the per-block
    // estimates gives the uncertainty.
    int uncertainty_blocks = 10;
};

// rms(detrended trailing window)/|slope|. averaging_window ≤ 0 uses the whole series.
LinewidthEstimate linewidth_rms_over_slope(std::span<const double> volts, double sample_rate,
                                           double slope_v_per_hz, double averaging_window_s,
                                           const RmsOptions& options = {});

struct BeatOptions {
    // Number of Welch segments averaged per estimate; one estimate per entry.
    std::vector<std::size_t> depths{1};
    double overlap = 0.5;
    spectral::Window window = spectral::Window::hann;
    // When > 0, a resolution bandwidth above expected_width/4 is an error.
    double expected_width_hz = 0.0;
};

// Phase of the beat e^{i(φa−φb)} with φ = 2π Σ ν/fs.
std::vector<std::complex<double>> beat_field(const servo::FrequencyTimeSeries& a,
                                             const servo::FrequencyTimeSeries& b);

// The series is cut into consecutive blocks spanning depth segments each; every
// block yields a Welch FWHM and the estimate is their mean (uncertainty: standard
// error over blocks). Widths under 4 resolution bandwidths are flagged upper_bound.
std::vector<LinewidthEstimate> beat_note_linewidth(const servo::FrequencyTimeSeries& a,
                                                   const servo::FrequencyTimeSeries& b,
                                                   double segment_length_s, const BeatOptions& options = {});

struct AllanPoint {
    double tau = 0.0;        // s, rounded to a whole number of samples
    double deviation = 0.0;  // Hz
    std::size_t terms = 0;
};

// Overlapping Allan deviation of a frequency record (absolute, Hz). Throws
// InsufficientSamples for tau > duration/4.
std::vector<AllanPoint> allan_deviation(const servo::FrequencyTimeSeries& series, std::span<const double> taus);

// ---------------------------------------------------------------------------
// Cold-sample EIT fit

struct ColdEitParameters {
    double omega_c = 0.0;          // rad/s
    double gamma_rel_laser = 0.0;  // rad/s
    double amplitude = 1.0;
    double baseline = 0.0;
    double center = 0.0;           // rad/s, shift of the probe axis
};

inline constexpr std::size_t kColdEitParameterCount = 5;
enum class ColdEitParameter { omega_c, gamma_rel_laser, amplitude, baseline, center };

// baseline + amplitude·|t(δp − center)|² with the given Ωc and γ_rel_laser substituted into `base`.
std::vector<double> cold_eit_model(std::span<const double> delta_p, const eit::CascadeSystem& base,
                                   const ColdEitParameters& p);

struct FitOptions {
    std::array<bool, kColdEitParameterCount> free{true, true, true, true, true};
    // Known per-point noise; sets the reduced χ² scale. 0: taken from the residuals.
    double noise_sigma = 0.0;
    lsq::LmOptions lm{};
};

struct FitResult {
    ColdEitParameters parameters;
    ColdEitParameters uncertainties;  // 1σ, natural units; 0 for fixed parameters
    // Covariance of the free parameters in natural units, in ColdEitParameter order.
    Eigen::MatrixXd covariance;
    double residual_norm = 0.0;
    double reduced_chi_square = 0.0;
    bool converged = false;
    int iterations = 0;
    std::vector<double> model;
    std::vector<double> residuals;

    // γ_rel_laser/2π with its 1σ uncertainty.
    LinewidthEstimate linewidth() const;
};

// Throws FitError (no convergence, degenerate Jacobian) or InvalidArgument.
FitResult fit_cold_eit(std::span<const double> delta_p, std::span<const double> transmission,
                       const eit::CascadeSystem& base, const ColdEitParameters& init,
                       const FitOptions& options = {});

}  // namespace eitlock::metrology
