#include "eitlock/harness/scenario.hpp"

#include <algorithm>
#include <chrono>
#include <random>

#include "eitlock/errors.hpp"
#include "eitlock/lock_metrology.hpp"
#include "eitlock/seeding.hpp"

namespace eitlock::harness {

using nlohmann::json;
namespace fs = std::filesystem;

std::string to_string(Subcommand s) {
    switch (s) {
        case Subcommand::spectrum: return "spectrum";
        case Subcommand::error_signal: return "error-signal";
        case Subcommand::lock: return "lock";
        case Subcommand::beat: return "beat";
        case Subcommand::fit: return "fit";
    }
    return "unknown";
}

Subcommand subcommand_from_string(const std::string& s) {
    for (auto c : {Subcommand::spectrum, Subcommand::error_signal, Subcommand::lock, Subcommand::beat, Subcommand::fit}) {
        if (to_string(c) == s) return c;
    }
    throw InvalidArgument("unknown subcommand '" + s + "'");
}

json RunManifest::to_json() const {
    return {{"digest", digest},     {"tool_version", tool_version}, {"subcommand", subcommand},
            {"seed", seed},         {"artifacts", artifacts},       {"timings_s", timings_s},
            {"summary", summary}};
}

namespace {

std::vector<double> linspace_mhz(double start, double stop, int points) {
    std::vector<double> out(static_cast<std::size_t>(points));
    for (int i = 0; i < points; ++i) {
        out[static_cast<std::size_t>(i)] = mhz_to_angular(start + (stop - start) * i / (points - 1));
    }
    return out;
}

class Stopwatch {
public:
    double lap() {
        const auto now = std::chrono::steady_clock::now();
        const double s = std::chrono::duration<double>(now - last_).count();
        last_ = now;
        return s;
    }

private:
    std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

// Local maxima, strongest first.
std::vector<double> peak_positions(const Table& t, std::size_t x_col, std::size_t y_col, std::size_t count) {
    std::vector<std::pair<double, double>> peaks;
    for (std::size_t i = 1; i + 1 < t.rows.size(); ++i) {
        const double y = t.rows[i][y_col];
        if (y > t.rows[i - 1][y_col] && y >= t.rows[i + 1][y_col]) peaks.emplace_back(y, t.rows[i][x_col]);
    }
    std::sort(peaks.begin(), peaks.end(), [](auto a, auto b) { return a.first > b.first; });
    std::vector<double> out;
    for (std::size_t i = 0; i < std::min(count, peaks.size()); ++i) out.push_back(peaks[i].second);
    std::sort(out.begin(), out.end());
    return out;
}

Table series_table(const servo::FrequencyTimeSeries& s, const char* value_column, int decimation) {
    Table t;
    t.columns = {"time_s", value_column};
    const std::size_t step = static_cast<std::size_t>(decimation);
    for (std::size_t k = 0; k < s.samples.size(); k += step) {
        t.rows.push_back({static_cast<double>(k) / s.sample_rate, s.samples[k]});
    }
    return t;
}

json estimate_json(const metrology::LinewidthEstimate& e) {
    return {{"method", metrology::to_string(e.method)},
            {"value_Hz", e.value},
            {"uncertainty_Hz", e.uncertainty},
            {"window_s", e.window},
            {"resolution_bandwidth_Hz", e.resolution_bandwidth},
            {"upper_bound", e.upper_bound}};
}

fm::FmParams resolved_fm(const ScenarioConfig& cfg, const eit::LadderMedium& medium) {
    fm::FmParams f = make_fm(cfg);
    if (!cfg.fm.phase_deg) f.theta = fm::dispersive_phase(medium, f, mhz_to_angular(cfg.scan.probe_detuning_MHz));
    return f;
}

struct Outputs {
    fs::path dir;
    RunManifest& manifest;

    void csv(const std::string& name, const Table& t) {
        const fs::path p = dir / (name + ".csv");
        emit_plotdata(t, p);
        manifest.artifacts[name] = p.string();
    }
    void doc(const std::string& name, const json& j) {
        const fs::path p = dir / (name + ".json");
        write_file_atomic(p, j.dump(2) + "\n");
        manifest.artifacts[name] = p.string();
    }
};

void run_spectrum(const ScenarioConfig& cfg, Outputs& out, Stopwatch& sw) {
    const Table t = spectrum_table(cfg);
    out.manifest.timings_s["compute"] = sw.lap();
    out.csv("spectrum", t);
    out.manifest.summary = {{"axis", cfg.scan.axis},
                            {"points", t.rows.size()},
                            {"transmission_peaks_MHz", peak_positions(t, 0, 3, 3)}};
}

void run_error_signal(const ScenarioConfig& cfg, Outputs& out, Stopwatch& sw) {
    const ErrorSignalRun run = error_signal_run(cfg);
    out.manifest.timings_s["compute"] = sw.lap();
    Table t;
    t.columns = {"detuning_MHz", "signal_V"};
    for (std::size_t i = 0; i < run.trace.detunings.size(); ++i) {
        t.rows.push_back({angular_to_mhz(run.trace.detunings[i]), run.trace.volts[i]});
    }
    out.csv("error_signal", t);
    json side = {{"demodulation_phase_deg", run.trace.fm.theta * 180.0 / kPi},
                 {"probe_detuning_MHz", angular_to_mhz(run.trace.probe_detuning)},
                 {"carrier_slope_sign", run.trace.carrier_slope_sign},
                 {"warnings", run.trace.warnings}};
    if (run.has_crossing) {
        side["crossing_MHz"] = angular_to_mhz(run.crossing.crossing);
        side["slope_V_per_MHz"] = run.crossing.slope * mhz_to_angular(1.0);
        side["capture_range_MHz"] = angular_to_mhz(run.crossing.capture_range);
    } else {
        side["crossing_error"] = run.crossing_error;
    }
    out.doc("error_signal", side);
    out.manifest.summary = side;
}

void run_lock(const ScenarioConfig& cfg, Outputs& out, Stopwatch& sw) {
    const ErrorSignalRun run = error_signal_run(cfg);
    if (!run.has_crossing) throw NoCrossing("lock: " + run.crossing_error);
    out.manifest.timings_s["discriminant"] = sw.lap();

    const double det_noise = cfg.noise.detector_noise_V;
    const servo::Discriminant disc =
        cfg.lock.saturating ? servo::Discriminant::from_trace(run.trace, run.crossing, det_noise)
                            : servo::Discriminant::linear(run.crossing.slope * kTwoPi, det_noise,
                                                          std::min(run.crossing.crossing - run.crossing.lower_extremum,
                                                                   run.crossing.upper_extremum - run.crossing.crossing) /
                                                              kTwoPi);
    const servo::NoiseModel noise = make_noise(cfg, "laser");
    const servo::ControllerConfig ctl = make_controller(cfg);
    servo::LockOptions opt;
    opt.initial_offset_hz = cfg.lock.initial_offset_kHz * 1e3;
    opt.unlock_dwell_s = cfg.lock.unlock_dwell_s;
    opt.sample_budget = static_cast<std::size_t>(cfg.lock.sample_budget);
    const double fs = cfg.lock.sample_rate_Hz;
    const auto res = servo::simulate_locked(noise, ctl, disc, fs, cfg.lock.duration_s, opt);
    out.manifest.timings_s["simulate"] = sw.lap();

    metrology::RmsOptions ro;
    ro.monitor_bandwidth_hz = cfg.lock.monitor_bandwidth_Hz;
    const auto locked = metrology::linewidth_rms_over_slope(res.error_signal.samples, fs, disc.slope(),
                                                            cfg.lock.averaging_window_s, ro);
    // The same estimator applied to the free-running laser seen through the linear slope.
    const auto free = servo::simulate_free_run(noise, fs, cfg.lock.duration_s, opt.sample_budget);
    std::vector<double> free_volts(free.samples.size());
    for (std::size_t i = 0; i < free_volts.size(); ++i) free_volts[i] = disc.slope() * free.samples[i];
    const auto unlocked = metrology::linewidth_rms_over_slope(free_volts, fs, disc.slope(),
                                                              cfg.lock.averaging_window_s, ro);
    out.manifest.timings_s["metrology"] = sw.lap();

    out.csv("lock_error", series_table(res.error_series, "value_Hz", cfg.lock.decimation));
    out.csv("lock_signal", series_table(res.error_signal, "value_V", cfg.lock.decimation));
    json events = json::array();
    for (const auto& e : res.unlock_events) events.push_back({{"start_s", e.start_s}, {"duration_s", e.duration_s}});
    json summary = {{"slope_V_per_MHz", disc.slope() * 1e6},
                    {"capture_half_range_MHz", disc.capture_half_range() * 1e-6},
                    {"unity_gain_frequency_Hz", servo::unity_gain_frequency(ctl, fs)},
                    {"stable", servo::is_stable(ctl, fs)},
                    {"locked", res.locked()},
                    {"unlock_events", events},
                    {"locked_estimate", estimate_json(locked)},
                    {"free_running_estimate", estimate_json(unlocked)},
                    {"monitor_bandwidth_Hz", cfg.lock.monitor_bandwidth_Hz},
                    {"decimation", cfg.lock.decimation}};
    out.doc("lock", summary);
    out.manifest.summary = summary;
}

void run_beat(const ScenarioConfig& cfg, Outputs& out, Stopwatch& sw) {
    const servo::NoiseModel na = make_noise(cfg, "beat-a");
    servo::NoiseModel nb = make_noise(cfg, "beat-b");
    nb.white_psd = cfg.beat.reference_white_psd_Hz2_per_Hz.value_or(cfg.noise.white_psd_Hz2_per_Hz);
    nb.random_walk_coeff = cfg.beat.reference_random_walk_Hz2_per_s.value_or(cfg.noise.random_walk_Hz2_per_s);
    const double fs = cfg.beat.sample_rate_Hz;
    const auto a = servo::simulate_free_run(na, fs, cfg.beat.duration_s);
    const auto b = servo::simulate_free_run(nb, fs, cfg.beat.duration_s);
    out.manifest.timings_s["simulate"] = sw.lap();

    metrology::BeatOptions bo;
    bo.depths.assign(cfg.beat.depths.begin(), cfg.beat.depths.end());
    bo.overlap = cfg.beat.overlap;
    bo.expected_width_hz = cfg.beat.expected_width_Hz;
    const double seg_s = cfg.beat.segment_points / fs;
    const auto estimates = metrology::beat_note_linewidth(a, b, seg_s, bo);

    const auto z = metrology::beat_field(a, b);
    const auto psd = spectral::welch(std::span<const std::complex<double>>(z), fs,
                                     static_cast<std::size_t>(cfg.beat.segment_points), cfg.beat.overlap);
    servo::FrequencyTimeSeries diff = a;
    for (std::size_t i = 0; i < diff.samples.size(); ++i) diff.samples[i] -= b.samples[i];
    std::vector<double> taus;
    json skipped = json::array();
    for (double t : cfg.beat.allan_taus_s) {
        if (t <= diff.duration() / 4 && t * fs >= 1) taus.push_back(t);
        else skipped.push_back(t);
    }
    const auto adev = metrology::allan_deviation(diff, taus);
    out.manifest.timings_s["metrology"] = sw.lap();

    Table pt;
    pt.columns = {"frequency_Hz", "psd_per_Hz"};
    for (std::size_t i = 0; i < psd.frequency.size(); ++i) pt.rows.push_back({psd.frequency[i], psd.density[i]});
    out.csv("beat_psd", pt);
    Table at;
    at.columns = {"tau_s", "adev_Hz"};
    for (const auto& p : adev) at.rows.push_back({p.tau, p.deviation});
    out.csv("allan", at);

    json ests = json::array();
    for (std::size_t i = 0; i < estimates.size(); ++i) {
        json e = estimate_json(estimates[i]);
        e["depth"] = bo.depths[i];
        ests.push_back(e);
    }
    json summary = {{"estimates", ests},
                    {"full_record_fwhm_Hz", spectral::full_width_half_max(psd)},
                    {"resolution_bandwidth_Hz", psd.resolution_bandwidth},
                    {"allan_taus_skipped_s", skipped}};
    out.doc("beat", summary);
    out.manifest.summary = summary;
}

void run_fit(const ScenarioConfig& cfg, Outputs& out, Stopwatch& sw) {
    const eit::CascadeSystem base = make_system(cfg);
    std::vector<double> grid, data;
    bool synthetic = cfg.fit.data.empty();
    if (synthetic) {
        grid = linspace_mhz(-0.5 * cfg.fit.span_MHz, 0.5 * cfg.fit.span_MHz, cfg.fit.points);
        const metrology::ColdEitParameters truth{mhz_to_angular(cfg.fit.true_omega_c_MHz),
                                                 hz_to_angular(cfg.fit.true_gamma_rel_kHz * 1e3), 1.0, 0.0, 0.0};
        data = metrology::cold_eit_model(grid, base, truth);
        std::mt19937_64 gen(derive_seed(cfg.seed, "fit-noise"));
        std::normal_distribution<double> normal(0.0, 1.0);
        for (double& v : data) v += cfg.fit.noise_sigma * normal(gen);
    } else {
        const Table t = read_plotdata(cfg.fit.data);
        const auto col = [&](const char* name) {
            const auto it = std::find(t.columns.begin(), t.columns.end(), name);
            if (it == t.columns.end()) throw IoError(cfg.fit.data + ": missing column " + name);
            return static_cast<std::size_t>(it - t.columns.begin());
        };
        const std::size_t cx = col("detuning_MHz"), cy = col("transmission");
        for (const auto& r : t.rows) {
            grid.push_back(mhz_to_angular(r[cx]));
            data.push_back(r[cy]);
        }
    }
    metrology::FitOptions fo;
    fo.noise_sigma = cfg.fit.noise_sigma;
    static const char* kNames[] = {"omega_c", "gamma_rel_laser", "amplitude", "baseline", "center"};
    for (const auto& name : cfg.fit.fixed) {
        for (std::size_t i = 0; i < metrology::kColdEitParameterCount; ++i) {
            if (name == kNames[i]) fo.free[i] = false;
        }
    }
    const metrology::ColdEitParameters init{mhz_to_angular(cfg.fit.init_omega_c_MHz),
                                            hz_to_angular(cfg.fit.init_gamma_rel_kHz * 1e3), cfg.fit.init_amplitude,
                                            cfg.fit.init_baseline, mhz_to_angular(cfg.fit.init_center_MHz)};
    const auto r = metrology::fit_cold_eit(grid, data, base, init, fo);
    out.manifest.timings_s["fit"] = sw.lap();

    Table t;
    t.columns = {"detuning_MHz", "data", "model", "residual"};
    for (std::size_t i = 0; i < grid.size(); ++i) {
        t.rows.push_back({angular_to_mhz(grid[i]), data[i], r.model[i], r.residuals[i]});
    }
    out.csv("fit_residuals", t);
    const auto lw = r.linewidth();
    json summary = {
        {"synthetic", synthetic},
        {"converged", r.converged},
        {"iterations", r.iterations},
        {"reduced_chi_square", r.reduced_chi_square},
        {"residual_norm", r.residual_norm},
        {"parameters",
         {{"omega_c_MHz", angular_to_mhz(r.parameters.omega_c)},
          {"gamma_rel_laser_kHz", angular_to_hz(r.parameters.gamma_rel_laser) * 1e-3},
          {"amplitude", r.parameters.amplitude},
          {"baseline", r.parameters.baseline},
          {"center_MHz", angular_to_mhz(r.parameters.center)}}},
        {"uncertainties",
         {{"omega_c_MHz", angular_to_mhz(r.uncertainties.omega_c)},
          {"gamma_rel_laser_kHz", angular_to_hz(r.uncertainties.gamma_rel_laser) * 1e-3},
          {"amplitude", r.uncertainties.amplitude},
          {"baseline", r.uncertainties.baseline},
          {"center_MHz", angular_to_mhz(r.uncertainties.center)}}},
        {"linewidth", estimate_json(lw)},
    };
    out.doc("fit", summary);
    out.manifest.summary = summary;
}

}  // namespace

Table spectrum_table(const ScenarioConfig& cfg) {
    const eit::CascadeSystem sys = make_system(cfg);
    const auto grid = linspace_mhz(cfg.scan.start_MHz, cfg.scan.stop_MHz, cfg.scan.points);
    const bool coupling_axis = cfg.scan.axis == "coupling";
    const double dp0 = mhz_to_angular(cfg.scan.probe_detuning_MHz);
    const double dc0 = mhz_to_angular(cfg.scan.coupling_detuning_MHz);
    Table t;
    t.columns = {"detuning_MHz", "re_chi", "im_chi", "transmission"};
    t.rows.reserve(grid.size());
    if (cfg.system.cold) {
        const eit::ColdMedium medium(sys);
        for (double x : grid) {
            const double dp = coupling_axis ? dp0 : x;
            const double dc = coupling_axis ? x : dc0;
            const auto chi = medium.chi(dp, dc);
            t.rows.push_back({angular_to_mhz(x), chi.real(), chi.imag(), std::norm(medium.transmission(dp, dc))});
        }
        return t;
    }
    const eit::LadderMedium medium(sys, make_quadrature(cfg));
    const fm::FmParams f = make_fm(cfg);
    for (double x : grid) {
        const double dp = coupling_axis ? dp0 : x;
        const double dc = coupling_axis ? x : dc0;
        const auto chi = medium.chi(dp, dc);
        t.rows.push_back({angular_to_mhz(x), chi.real(), chi.imag(), fm::modulated_transmission(dp, dc, medium, f)});
    }
    return t;
}

ErrorSignalRun error_signal_run(const ScenarioConfig& cfg) {
    const eit::LadderMedium medium(make_system(cfg), make_quadrature(cfg));
    const fm::FmParams f = resolved_fm(cfg, medium);
    const auto grid = linspace_mhz(cfg.scan.start_MHz, cfg.scan.stop_MHz, cfg.scan.points);
    ErrorSignalRun run;
    run.trace = fm::error_signal_scan(grid, medium, f, mhz_to_angular(cfg.scan.probe_detuning_MHz));
    try {
        run.crossing = fm::zero_crossing_slope(run.trace, mhz_to_angular(cfg.scan.crossing_window_MHz));
        run.has_crossing = true;
    } catch (const Error& e) {
        run.crossing_error = e.what();
    }
    return run;
}

RunManifest run_scenario(const ScenarioConfig& cfg, Subcommand sub, const fs::path& out_dir) {
    RunManifest m;
    m.digest = digest_hex(config_digest(cfg));
    m.subcommand = to_string(sub);
    m.seed = cfg.seed;
    Stopwatch sw;
    Outputs out{out_dir / m.subcommand, m};
    switch (sub) {
        case Subcommand::spectrum: run_spectrum(cfg, out, sw); break;
        case Subcommand::error_signal: run_error_signal(cfg, out, sw); break;
        case Subcommand::lock: run_lock(cfg, out, sw); break;
        case Subcommand::beat: run_beat(cfg, out, sw); break;
        case Subcommand::fit: run_fit(cfg, out, sw); break;
    }
    out.doc("effective_config", effective_config(cfg));
    m.timings_s["write"] = sw.lap();
    const fs::path mp = out.dir / "manifest.json";
    m.artifacts["manifest"] = mp.string();
    write_file_atomic(mp, m.to_json().dump(2) + "\n");
    return m;
}

}  // namespace eitlock::harness
