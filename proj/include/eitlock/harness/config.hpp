#pragma once

// Scenario configuration. The document is JSON; every quantity carries its
// unit in the key (…_nm, …_MHz, …_Hz, …_s) except laser powers, which are
// strings with an explicit suffix ("1.5 mW", "300 uW", "20 nW", "0.002 W").
// Rates given in MHz or kHz are γ/2π. Values are kept in these boundary units
// so that the effective configuration echoes back bit-exactly.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "eitlock/eit_engine.hpp"
#include "eitlock/fm_lock_signal.hpp"
#include "eitlock/quadrature.hpp"
#include "eitlock/servo_loop.hpp"

#include <json.hpp>

namespace eitlock::harness {

struct LaserSection {
    double wavelength_nm = 780.24;
    double power_w = 0.0;
    double waist_mm = 1.0;
    double linewidth_kHz = 0.0;        // residual FWHM
    double static_detuning_MHz = 0.0;
};

struct SystemSection {
    LaserSection probe{};
    LaserSection coupling{.wavelength_nm = 480.0, .power_w = 0.0, .waist_mm = 0.1};
    int rydberg_n = 26;
    std::string rydberg_series = "D";
    std::optional<double> quantum_defect;   // default per series
    double gamma_e_MHz = 6.07;
    double gamma_r_kHz = 0.0;
    double gamma_transit_kHz = 0.0;
    double gamma_rel_laser_kHz = 0.0;
    double temperature_K = 293.0;
    double cell_length_mm = 75.0;
    double optical_depth = 1.0;
    bool cold = false;                      // Doppler-free sample
    bool counter_propagating = true;
    std::optional<double> omega_c_MHz;      // Ωc/2π; when absent, scaled from the coupling power
    double sd_amplitude_ratio = atomic::kDefaultSdAmplitudeRatio;
    // Calibration of the power scaling.
    double reference_omega_c_MHz = 2.0;
    double reference_power_w = 1e-3;
    double reference_waist_mm = 0.1;
    double reference_n_star = 24.65;
    std::string reference_series = "D";
};

struct FmSection {
    double modulation_MHz = 10.0;
    double beta = 0.3;
    std::optional<double> phase_deg;  // absent: chosen for the steepest positive carrier slope
    double electronic_gain_V = 1.0;
    double detector_rolloff = 1.0;
};

struct QuadratureSection {
    std::string method = "adaptive";
    std::optional<int> node_count;  // default 16 (adaptive, per panel), 200 (gauss_hermite), 4001 (trapezoid)
    double velocity_cutoff = 8.0;
    double convergence_tolerance = 0.0;
};

struct ScanSection {
    std::string axis = "coupling";  // or "probe"
    double start_MHz = -30.0;
    double stop_MHz = 30.0;
    int points = 1201;
    double probe_detuning_MHz = 0.0;
    double coupling_detuning_MHz = 0.0;  // used when axis = probe
    double crossing_window_MHz = 2.0;    // half-width searched for the lock point
};

struct NoiseSection {
    double white_psd_Hz2_per_Hz = 1e6 / kPi;
    double random_walk_Hz2_per_s = 0.0;
    double detector_noise_V = 0.0;
};

struct ControllerSection {
    double proportional_gain = 0.3;
    double integrator_corner_Hz = 1e6;
    double cutoff_Hz = 1e6;
    double slow_integrator_gain_per_s = kTwoPi * 10.0;
    double slow_range_MHz = 50.0;
    int sign = 1;
};

struct LockSection {
    double sample_rate_Hz = 10e6;
    double duration_s = 0.1;
    double initial_offset_kHz = 0.0;
    double unlock_dwell_s = 1e-4;
    bool saturating = true;              // shaped discriminant from the scanned error signal
    double monitor_bandwidth_Hz = 1e3;
    double averaging_window_s = 0.0;     // 0: whole record
    int decimation = 1;
    double sample_budget = 5e7;
};

struct BeatSection {
    double sample_rate_Hz = 20e6;
    double duration_s = 0.05;
    int segment_points = 512;
    std::vector<int> depths{64, 256, 1024, 3900};
    double overlap = 0.5;
    double expected_width_Hz = 0.0;
    // Second laser; defaults to the noise section.
    std::optional<double> reference_white_psd_Hz2_per_Hz;
    std::optional<double> reference_random_walk_Hz2_per_s;
    std::vector<double> allan_taus_s{1e-5, 1e-4, 1e-3};
};

struct FitSection {
    std::string data;                // CSV (detuning_MHz, transmission); empty: synthesize
    double span_MHz = 20.0;
    int points = 401;
    double noise_sigma = 0.01;       // synthetic noise and assumed measurement error
    double true_omega_c_MHz = 4.0;
    double true_gamma_rel_kHz = 280.0;
    double init_omega_c_MHz = 3.0;
    double init_gamma_rel_kHz = 500.0;
    double init_amplitude = 0.9;
    double init_baseline = 0.05;
    double init_center_MHz = 0.3;
    std::vector<std::string> fixed;  // parameter names held at their initial values
};

struct OutputsSection {
    std::string dir = "out";
};

struct ScenarioConfig {
    SystemSection system;
    FmSection fm;
    QuadratureSection quadrature;
    ScanSection scan;
    NoiseSection noise;
    ControllerSection controller;
    LockSection lock;
    BeatSection beat;
    FitSection fit;
    OutputsSection outputs;
    std::uint64_t seed = 1;
};

// Parses and validates; throws ConfigError listing every problem found.
ScenarioConfig validate_config(const std::string& text);
ScenarioConfig config_from_json(const nlohmann::json& doc);

// Fully resolved document, defaults included; feeding it back yields an identical config.
nlohmann::json effective_config(const ScenarioConfig& cfg);

// FNV-1a over the canonical serialization of the effective config without `outputs`.
std::uint64_t config_digest(const ScenarioConfig& cfg);
std::string digest_hex(std::uint64_t digest);

// Power with an explicit unit suffix, in watts.
double parse_power(const std::string& text);
std::string format_power(double watts);

// Module-level views.
eit::CascadeSystem make_system(const ScenarioConfig& cfg);
quad::QuadratureSpec make_quadrature(const ScenarioConfig& cfg);
fm::FmParams make_fm(const ScenarioConfig& cfg);  // theta = 0 when the phase is automatic
servo::ControllerConfig make_controller(const ScenarioConfig& cfg);
servo::NoiseModel make_noise(const ScenarioConfig& cfg, std::string_view stream);

}  // namespace eitlock::harness
