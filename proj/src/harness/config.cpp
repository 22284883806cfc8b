#include "eitlock/harness/config.hpp"

#include <cmath>
#include <functional>
#include <set>

#include "eitlock/errors.hpp"
#include "eitlock/harness/csv.hpp"
#include "eitlock/seeding.hpp"

namespace eitlock::harness {

using nlohmann::json;

double parse_power(const std::string& text) {
    static const std::pair<std::string_view, double> kUnits[] = {
        {"mW", 1e-3}, {"uW", 1e-6}, {"μW", 1e-6}, {"µW", 1e-6}, {"nW", 1e-9}, {"W", 1.0},
    };
    std::string_view s = text;
    while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
    for (const auto& [suffix, scale] : kUnits) {
        if (s.size() > suffix.size() && s.substr(s.size() - suffix.size()) == suffix) {
            const double v = parse_double(s.substr(0, s.size() - suffix.size()));
            return v * scale;
        }
    }
    throw InvalidArgument("power needs a unit suffix (W, mW, uW, nW): '" + text + "'");
}

std::string format_power(double watts) { return format_double(watts) + " W"; }

namespace {

// Walks one JSON object, collecting problems instead of stopping at the first.
class Section {
public:
    Section(const json* j, std::string path, std::vector<std::string>& problems)
        : j_(j), path_(std::move(path)), problems_(problems) {
        if (j_ && !j_->is_object()) {
            fail("", "must be an object");
            j_ = nullptr;
        }
    }
    ~Section() {
        if (!j_) return;
        for (const auto& [key, _] : j_->items()) {
            if (!seen_.contains(key)) problems_.push_back(name(key) + ": unknown key");
        }
    }
    Section(const Section&) = delete;
    Section& operator=(const Section&) = delete;

    Section child(const std::string& key) {
        seen_.insert(key);
        const json* c = (j_ && j_->contains(key) && !(*j_)[key].is_null()) ? &(*j_)[key] : nullptr;
        return Section(c, name(key), problems_);
    }

    void number(const std::string& key, double& out) {
        if (const json* v = find(key)) {
            if (v->is_number()) out = v->get<double>();
            else fail(key, "must be a number");
        }
    }
    void number(const std::string& key, std::optional<double>& out) {
        if (const json* v = find(key)) {
            if (v->is_number()) out = v->get<double>();
            else fail(key, "must be a number or null");
        }
    }
    void integer(const std::string& key, int& out) {
        if (const json* v = find(key)) {
            if (v->is_number_integer()) out = v->get<int>();
            else fail(key, "must be an integer");
        }
    }
    void integer(const std::string& key, std::optional<int>& out) {
        if (const json* v = find(key)) {
            if (v->is_number_integer()) out = v->get<int>();
            else fail(key, "must be an integer or null");
        }
    }
    void boolean(const std::string& key, bool& out) {
        if (const json* v = find(key)) {
            if (v->is_boolean()) out = v->get<bool>();
            else fail(key, "must be true or false");
        }
    }
    void text(const std::string& key, std::string& out) {
        if (const json* v = find(key)) {
            if (v->is_string()) out = v->get<std::string>();
            else fail(key, "must be a string");
        }
    }
    void power(const std::string& key, double& out) {
        if (const json* v = find(key)) {
            if (!v->is_string()) {
                fail(key, "must be a string with a unit, e.g. \"1.5 mW\"");
                return;
            }
            try {
                out = parse_power(v->get<std::string>());
            } catch (const Error& e) {
                fail(key, e.what());
            }
        }
    }
    template <class T>
    void list(const std::string& key, std::vector<T>& out) {
        if (const json* v = find(key)) {
            if (!v->is_array()) {
                fail(key, "must be a list");
                return;
            }
            std::vector<T> tmp;
            for (const auto& e : *v) {
                if constexpr (std::is_same_v<T, std::string>) {
                    if (!e.is_string()) return fail(key, "entries must be strings");
                } else if constexpr (std::is_integral_v<T>) {
                    if (!e.is_number_integer()) return fail(key, "entries must be integers");
                } else {
                    if (!e.is_number()) return fail(key, "entries must be numbers");
                }
                tmp.push_back(e.get<T>());
            }
            out = std::move(tmp);
        }
    }
    // number, or the literal string `keyword`, which maps to nullopt.
    void number_or(const std::string& key, const char* keyword, std::optional<double>& out) {
        if (const json* v = find(key)) {
            if (v->is_number()) out = v->get<double>();
            else if (v->is_string() && v->get<std::string>() == keyword) out.reset();
            else fail(key, std::string("must be a number or \"") + keyword + "\"");
        }
    }
    void seed(const std::string& key, std::uint64_t& out) {
        if (const json* v = find(key)) {
            if (v->is_number_unsigned()) out = v->get<std::uint64_t>();
            else if (v->is_number_integer() && v->get<std::int64_t>() >= 0) out = v->get<std::uint64_t>();
            else fail(key, "must be a non-negative integer");
        }
    }

    std::string name(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
    void fail(const std::string& key, const std::string& msg) {
        problems_.push_back((key.empty() ? path_ : name(key)) + ": " + msg);
    }

private:
    const json* find(const std::string& key) {
        seen_.insert(key);
        if (!j_ || !j_->contains(key)) return nullptr;
        const json& v = (*j_)[key];
        return v.is_null() ? nullptr : &v;
    }

    const json* j_;
    std::string path_;
    std::vector<std::string>& problems_;
    std::set<std::string> seen_;
};

void read_laser(Section&& s, LaserSection& l) {
    s.number("wavelength_nm", l.wavelength_nm);
    s.power("power", l.power_w);
    s.number("waist_mm", l.waist_mm);
    s.number("linewidth_kHz", l.linewidth_kHz);
    s.number("static_detuning_MHz", l.static_detuning_MHz);
}

json laser_json(const LaserSection& l) {
    return {{"wavelength_nm", l.wavelength_nm},
            {"power", format_power(l.power_w)},
            {"waist_mm", l.waist_mm},
            {"linewidth_kHz", l.linewidth_kHz},
            {"static_detuning_MHz", l.static_detuning_MHz}};
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

int default_node_count(const std::string& method) {
    if (method == "gauss_hermite") return 200;
    if (method == "trapezoid") return 4001;
    return 16;
}

// Range checks on the parsed values, each naming its field.
void check(const ScenarioConfig& c, std::vector<std::string>& p) {
    auto need = [&](bool ok, const std::string& field, const std::string& msg) {
        if (!ok) p.push_back(field + ": " + msg);
    };
    auto finite_positive = [](double v) { return std::isfinite(v) && v > 0; };
    auto finite_nonneg = [](double v) { return std::isfinite(v) && v >= 0; };

    for (const auto& [label, l] : {std::pair{"probe", &c.system.probe}, std::pair{"coupling", &c.system.coupling}}) {
        const std::string base = std::string("system.") + label;
        need(finite_positive(l->wavelength_nm), base + ".wavelength_nm", "must be > 0");
        need(finite_nonneg(l->power_w), base + ".power", "must be >= 0");
        need(finite_positive(l->waist_mm), base + ".waist_mm", "must be > 0");
        need(finite_nonneg(l->linewidth_kHz), base + ".linewidth_kHz", "must be >= 0");
        need(std::isfinite(l->static_detuning_MHz), base + ".static_detuning_MHz", "must be finite");
    }
    const auto& s = c.system;
    need(s.rydberg_series == "S" || s.rydberg_series == "D", "system.rydberg.series", "must be \"S\" or \"D\"");
    need(s.reference_series == "S" || s.reference_series == "D", "system.rabi_reference.series",
         "must be \"S\" or \"D\"");
    const double defect = s.quantum_defect.value_or(0.0);
    need(s.rydberg_n >= 5 && s.rydberg_n - defect > 0, "system.rydberg.n", "must be >= 5 with n - quantum_defect > 0");
    need(finite_nonneg(s.gamma_e_MHz) && s.gamma_e_MHz > 0, "system.rates.gamma_e_MHz", "must be > 0");
    need(finite_nonneg(s.gamma_r_kHz), "system.rates.gamma_r_kHz", "must be >= 0");
    need(finite_nonneg(s.gamma_transit_kHz), "system.rates.gamma_transit_kHz", "must be >= 0");
    need(finite_nonneg(s.gamma_rel_laser_kHz), "system.rates.gamma_rel_laser_kHz", "must be >= 0");
    need(finite_positive(s.temperature_K), "system.vapor.temperature_K", "must be > 0");
    need(finite_positive(s.cell_length_mm), "system.vapor.cell_length_mm", "must be > 0");
    need(finite_nonneg(s.optical_depth), "system.vapor.optical_depth", "must be >= 0");
    need(finite_positive(s.sd_amplitude_ratio), "system.sd_amplitude_ratio", "must be > 0");
    if (s.omega_c_MHz) {
        need(finite_nonneg(*s.omega_c_MHz), "system.omega_c_MHz", "must be >= 0");
    } else {
        need(s.coupling.power_w > 0, "system.omega_c_MHz", "required unless system.coupling.power > 0");
    }
    need(finite_positive(s.reference_omega_c_MHz), "system.rabi_reference.omega_c_MHz", "must be > 0");
    need(finite_positive(s.reference_power_w), "system.rabi_reference.power", "must be > 0");
    need(finite_positive(s.reference_waist_mm), "system.rabi_reference.waist_mm", "must be > 0");
    need(finite_positive(s.reference_n_star), "system.rabi_reference.n_star", "must be > 0");

    need(finite_positive(c.fm.modulation_MHz), "fm.modulation_MHz", "must be > 0");
    need(c.fm.beta > 0 && c.fm.beta <= 0.5, "fm.beta", "must be in (0, 0.5]");
    need(!c.fm.phase_deg || std::isfinite(*c.fm.phase_deg), "fm.phase_deg", "must be finite or \"auto\"");
    need(std::isfinite(c.fm.electronic_gain_V) && c.fm.electronic_gain_V != 0, "fm.electronic_gain_V",
         "must be nonzero");
    need(finite_positive(c.fm.detector_rolloff), "fm.detector_rolloff", "must be > 0");

    const auto& q = c.quadrature;
    const bool known_method = q.method == "adaptive" || q.method == "gauss_hermite" || q.method == "trapezoid";
    need(known_method, "quadrature.method", "must be adaptive, gauss_hermite or trapezoid");
    need(!q.node_count || *q.node_count >= 8, "quadrature.node_count", "node_count ≥ 8");
    need(finite_positive(q.velocity_cutoff), "quadrature.velocity_cutoff", "must be > 0");
    need(finite_nonneg(q.convergence_tolerance), "quadrature.convergence_tolerance", "must be >= 0");

    const auto& sc = c.scan;
    need(sc.axis == "coupling" || sc.axis == "probe", "scan.axis", "must be \"coupling\" or \"probe\"");
    need(std::isfinite(sc.start_MHz) && std::isfinite(sc.stop_MHz) && sc.stop_MHz > sc.start_MHz, "scan.stop_MHz",
         "must exceed scan.start_MHz");
    need(sc.points >= 2, "scan.points", "must be >= 2");
    need(finite_positive(sc.crossing_window_MHz), "scan.crossing_window_MHz", "must be > 0");

    need(finite_nonneg(c.noise.white_psd_Hz2_per_Hz), "noise.white_psd_Hz2_per_Hz", "must be >= 0");
    need(finite_nonneg(c.noise.random_walk_Hz2_per_s), "noise.random_walk_Hz2_per_s", "must be >= 0");
    need(finite_nonneg(c.noise.detector_noise_V), "noise.detector_noise_V", "must be >= 0");

    const auto& k = c.controller;
    need(std::isfinite(k.proportional_gain), "controller.proportional_gain", "must be finite");
    need(finite_nonneg(k.integrator_corner_Hz), "controller.integrator_corner_Hz", "must be >= 0");
    need(finite_positive(k.cutoff_Hz), "controller.cutoff_Hz", "must be > 0");
    need(finite_nonneg(k.slow_integrator_gain_per_s), "controller.slow_integrator_gain_per_s", "must be >= 0");
    need(finite_positive(k.slow_range_MHz), "controller.slow_range_MHz", "must be > 0");
    need(k.sign == 1 || k.sign == -1, "controller.sign", "must be +1 or -1");

    const auto& l = c.lock;
    need(finite_positive(l.sample_rate_Hz), "lock.sample_rate_Hz", "must be > 0");
    need(l.sample_rate_Hz >= 10 * k.cutoff_Hz, "lock.sample_rate_Hz", "must be >= 10 x controller.cutoff_Hz");
    need(finite_positive(l.duration_s), "lock.duration_s", "must be > 0");
    need(std::isfinite(l.initial_offset_kHz), "lock.initial_offset_kHz", "must be finite");
    need(finite_nonneg(l.unlock_dwell_s), "lock.unlock_dwell_s", "must be >= 0");
    need(finite_nonneg(l.monitor_bandwidth_Hz), "lock.monitor_bandwidth_Hz", "must be >= 0");
    need(finite_nonneg(l.averaging_window_s) && l.averaging_window_s <= l.duration_s, "lock.averaging_window_s",
         "must be in [0, lock.duration_s]");
    need(l.decimation >= 1, "lock.decimation", "must be >= 1");
    need(finite_positive(l.sample_budget), "lock.sample_budget", "must be > 0");

    const auto& b = c.beat;
    need(finite_positive(b.sample_rate_Hz), "beat.sample_rate_Hz", "must be > 0");
    need(finite_positive(b.duration_s), "beat.duration_s", "must be > 0");
    need(b.segment_points >= 8, "beat.segment_points", "must be >= 8");
    need(b.segment_points <= b.sample_rate_Hz * b.duration_s, "beat.segment_points", "must fit in beat.duration_s");
    need(!b.depths.empty(), "beat.depths", "must not be empty");
    for (int d : b.depths) need(d >= 1, "beat.depths", "entries must be >= 1");
    need(b.overlap >= 0 && b.overlap < 1, "beat.overlap", "must be in [0, 1)");
    need(finite_nonneg(b.expected_width_Hz), "beat.expected_width_Hz", "must be >= 0");
    need(!b.reference_white_psd_Hz2_per_Hz || finite_nonneg(*b.reference_white_psd_Hz2_per_Hz),
         "beat.reference_white_psd_Hz2_per_Hz", "must be >= 0");
    need(!b.reference_random_walk_Hz2_per_s || finite_nonneg(*b.reference_random_walk_Hz2_per_s),
         "beat.reference_random_walk_Hz2_per_s", "must be >= 0");
    for (double t : b.allan_taus_s) need(finite_positive(t), "beat.allan_taus_s", "entries must be > 0");

    const auto& f = c.fit;
    need(finite_positive(f.span_MHz), "fit.span_MHz", "must be > 0");
    need(f.points >= 8, "fit.points", "must be >= 8");
    need(finite_nonneg(f.noise_sigma), "fit.noise_sigma", "must be >= 0");
    need(finite_nonneg(f.true_omega_c_MHz), "fit.true_omega_c_MHz", "must be >= 0");
    need(finite_nonneg(f.true_gamma_rel_kHz), "fit.true_gamma_rel_kHz", "must be >= 0");
    need(finite_positive(f.init_omega_c_MHz), "fit.init_omega_c_MHz", "must be > 0");
    need(finite_positive(f.init_gamma_rel_kHz), "fit.init_gamma_rel_kHz", "must be > 0");
    for (const auto& name : f.fixed) {
        need(name == "omega_c" || name == "gamma_rel_laser" || name == "amplitude" || name == "baseline" ||
                 name == "center",
             "fit.fixed", "unknown parameter '" + name + "'");
    }
    need(!c.outputs.dir.empty(), "outputs.dir", "must not be empty");
}

}  // namespace

ScenarioConfig config_from_json(const json& doc) {
    ScenarioConfig c;
    std::vector<std::string> p;
    {
        Section root(&doc, "", p);
        {
            auto s = root.child("system");
            auto& y = c.system;
            read_laser(s.child("probe"), y.probe);
            read_laser(s.child("coupling"), y.coupling);
            {
                auto r = s.child("rydberg");
                r.integer("n", y.rydberg_n);
                r.text("series", y.rydberg_series);
                r.number("quantum_defect", y.quantum_defect);
            }
            {
                auto r = s.child("rates");
                r.number("gamma_e_MHz", y.gamma_e_MHz);
                r.number("gamma_r_kHz", y.gamma_r_kHz);
                r.number("gamma_transit_kHz", y.gamma_transit_kHz);
                r.number("gamma_rel_laser_kHz", y.gamma_rel_laser_kHz);
            }
            {
                auto v = s.child("vapor");
                v.number("temperature_K", y.temperature_K);
                v.number("cell_length_mm", y.cell_length_mm);
                v.number("optical_depth", y.optical_depth);
                v.boolean("cold", y.cold);
            }
            {
                auto r = s.child("rabi_reference");
                r.number("omega_c_MHz", y.reference_omega_c_MHz);
                r.power("power", y.reference_power_w);
                r.number("waist_mm", y.reference_waist_mm);
                r.number("n_star", y.reference_n_star);
                r.text("series", y.reference_series);
            }
            s.boolean("counter_propagating", y.counter_propagating);
            s.number("omega_c_MHz", y.omega_c_MHz);
            s.number("sd_amplitude_ratio", y.sd_amplitude_ratio);
        }
        {
            auto s = root.child("fm");
            s.number("modulation_MHz", c.fm.modulation_MHz);
            s.number("beta", c.fm.beta);
            s.number_or("phase_deg", "auto", c.fm.phase_deg);
            s.number("electronic_gain_V", c.fm.electronic_gain_V);
            s.number("detector_rolloff", c.fm.detector_rolloff);
        }
        {
            auto s = root.child("quadrature");
            s.text("method", c.quadrature.method);
            s.integer("node_count", c.quadrature.node_count);
            s.number("velocity_cutoff", c.quadrature.velocity_cutoff);
            s.number("convergence_tolerance", c.quadrature.convergence_tolerance);
        }
        {
            auto s = root.child("scan");
            s.text("axis", c.scan.axis);
            s.number("start_MHz", c.scan.start_MHz);
            s.number("stop_MHz", c.scan.stop_MHz);
            s.integer("points", c.scan.points);
            s.number("probe_detuning_MHz", c.scan.probe_detuning_MHz);
            s.number("coupling_detuning_MHz", c.scan.coupling_detuning_MHz);
            s.number("crossing_window_MHz", c.scan.crossing_window_MHz);
        }
        {
            auto s = root.child("noise");
            s.number("white_psd_Hz2_per_Hz", c.noise.white_psd_Hz2_per_Hz);
            s.number("random_walk_Hz2_per_s", c.noise.random_walk_Hz2_per_s);
            s.number("detector_noise_V", c.noise.detector_noise_V);
        }
        {
            auto s = root.child("controller");
            s.number("proportional_gain", c.controller.proportional_gain);
            s.number("integrator_corner_Hz", c.controller.integrator_corner_Hz);
            s.number("cutoff_Hz", c.controller.cutoff_Hz);
            s.number("slow_integrator_gain_per_s", c.controller.slow_integrator_gain_per_s);
            s.number("slow_range_MHz", c.controller.slow_range_MHz);
            s.integer("sign", c.controller.sign);
        }
        {
            auto s = root.child("lock");
            auto& l = c.lock;
            s.number("sample_rate_Hz", l.sample_rate_Hz);
            s.number("duration_s", l.duration_s);
            s.number("initial_offset_kHz", l.initial_offset_kHz);
            s.number("unlock_dwell_s", l.unlock_dwell_s);
            s.boolean("saturating", l.saturating);
            s.number("monitor_bandwidth_Hz", l.monitor_bandwidth_Hz);
            s.number("averaging_window_s", l.averaging_window_s);
            s.integer("decimation", l.decimation);
            s.number("sample_budget", l.sample_budget);
        }
        {
            auto s = root.child("beat");
            auto& b = c.beat;
            s.number("sample_rate_Hz", b.sample_rate_Hz);
            s.number("duration_s", b.duration_s);
            s.integer("segment_points", b.segment_points);
            s.list("depths", b.depths);
            s.number("overlap", b.overlap);
            s.number("expected_width_Hz", b.expected_width_Hz);
            s.number("reference_white_psd_Hz2_per_Hz", b.reference_white_psd_Hz2_per_Hz);
            s.number("reference_random_walk_Hz2_per_s", b.reference_random_walk_Hz2_per_s);
            s.list("allan_taus_s", b.allan_taus_s);
        }
        {
            auto s = root.child("fit");
            auto& f = c.fit;
            s.text("data", f.data);
            s.number("span_MHz", f.span_MHz);
            s.integer("points", f.points);
            s.number("noise_sigma", f.noise_sigma);
            s.number("true_omega_c_MHz", f.true_omega_c_MHz);
            s.number("true_gamma_rel_kHz", f.true_gamma_rel_kHz);
            s.number("init_omega_c_MHz", f.init_omega_c_MHz);
            s.number("init_gamma_rel_kHz", f.init_gamma_rel_kHz);
            s.number("init_amplitude", f.init_amplitude);
            s.number("init_baseline", f.init_baseline);
            s.number("init_center_MHz", f.init_center_MHz);
            s.list("fixed", f.fixed);
        }
        {
            auto s = root.child("outputs");
            s.text("dir", c.outputs.dir);
        }
        root.seed("seed", c.seed);
    }
    check(c, p);
    if (!p.empty()) throw ConfigError(std::move(p));

    // Resolve documented defaults so the echo carries them explicitly.
    if (!c.quadrature.node_count) c.quadrature.node_count = default_node_count(c.quadrature.method);
    if (!c.system.quantum_defect) {
        c.system.quantum_defect = atomic::default_quantum_defect(c.system.rydberg_series == "S" ? atomic::Series::S
                                                                                                 : atomic::Series::D);
    }
    return c;
}

ScenarioConfig validate_config(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError({std::string("syntax: ") + e.what()});
    }
    return config_from_json(doc);
}

json effective_config(const ScenarioConfig& c) {
    const auto& y = c.system;
    json j;
    j["system"] = {
        {"probe", laser_json(y.probe)},
        {"coupling", laser_json(y.coupling)},
        {"rydberg", {{"n", y.rydberg_n}, {"series", y.rydberg_series}, {"quantum_defect", optional_json(y.quantum_defect)}}},
        {"rates",
         {{"gamma_e_MHz", y.gamma_e_MHz},
          {"gamma_r_kHz", y.gamma_r_kHz},
          {"gamma_transit_kHz", y.gamma_transit_kHz},
          {"gamma_rel_laser_kHz", y.gamma_rel_laser_kHz}}},
        {"vapor",
         {{"temperature_K", y.temperature_K},
          {"cell_length_mm", y.cell_length_mm},
          {"optical_depth", y.optical_depth},
          {"cold", y.cold}}},
        {"rabi_reference",
         {{"omega_c_MHz", y.reference_omega_c_MHz},
          {"power", format_power(y.reference_power_w)},
          {"waist_mm", y.reference_waist_mm},
          {"n_star", y.reference_n_star},
          {"series", y.reference_series}}},
        {"counter_propagating", y.counter_propagating},
        {"omega_c_MHz", optional_json(y.omega_c_MHz)},
        {"sd_amplitude_ratio", y.sd_amplitude_ratio},
    };
    j["fm"] = {{"modulation_MHz", c.fm.modulation_MHz},
               {"beta", c.fm.beta},
               {"phase_deg", c.fm.phase_deg ? json(*c.fm.phase_deg) : json("auto")},
               {"electronic_gain_V", c.fm.electronic_gain_V},
               {"detector_rolloff", c.fm.detector_rolloff}};
    j["quadrature"] = {{"method", c.quadrature.method},
                       {"node_count", c.quadrature.node_count ? json(*c.quadrature.node_count) : json(nullptr)},
                       {"velocity_cutoff", c.quadrature.velocity_cutoff},
                       {"convergence_tolerance", c.quadrature.convergence_tolerance}};
    j["scan"] = {{"axis", c.scan.axis},
                 {"start_MHz", c.scan.start_MHz},
                 {"stop_MHz", c.scan.stop_MHz},
                 {"points", c.scan.points},
                 {"probe_detuning_MHz", c.scan.probe_detuning_MHz},
                 {"coupling_detuning_MHz", c.scan.coupling_detuning_MHz},
                 {"crossing_window_MHz", c.scan.crossing_window_MHz}};
    j["noise"] = {{"white_psd_Hz2_per_Hz", c.noise.white_psd_Hz2_per_Hz},
                  {"random_walk_Hz2_per_s", c.noise.random_walk_Hz2_per_s},
                  {"detector_noise_V", c.noise.detector_noise_V}};
    j["controller"] = {{"proportional_gain", c.controller.proportional_gain},
                       {"integrator_corner_Hz", c.controller.integrator_corner_Hz},
                       {"cutoff_Hz", c.controller.cutoff_Hz},
                       {"slow_integrator_gain_per_s", c.controller.slow_integrator_gain_per_s},
                       {"slow_range_MHz", c.controller.slow_range_MHz},
                       {"sign", c.controller.sign}};
    j["lock"] = {{"sample_rate_Hz", c.lock.sample_rate_Hz},
                 {"duration_s", c.lock.duration_s},
                 {"initial_offset_kHz", c.lock.initial_offset_kHz},
                 {"unlock_dwell_s", c.lock.unlock_dwell_s},
                 {"saturating", c.lock.saturating},
                 {"monitor_bandwidth_Hz", c.lock.monitor_bandwidth_Hz},
                 {"averaging_window_s", c.lock.averaging_window_s},
                 {"decimation", c.lock.decimation},
                 {"sample_budget", c.lock.sample_budget}};
    j["beat"] = {{"sample_rate_Hz", c.beat.sample_rate_Hz},
                 {"duration_s", c.beat.duration_s},
                 {"segment_points", c.beat.segment_points},
                 {"depths", c.beat.depths},
                 {"overlap", c.beat.overlap},
                 {"expected_width_Hz", c.beat.expected_width_Hz},
                 {"reference_white_psd_Hz2_per_Hz", optional_json(c.beat.reference_white_psd_Hz2_per_Hz)},
                 {"reference_random_walk_Hz2_per_s", optional_json(c.beat.reference_random_walk_Hz2_per_s)},
                 {"allan_taus_s", c.beat.allan_taus_s}};
    j["fit"] = {{"data", c.fit.data},
                {"span_MHz", c.fit.span_MHz},
                {"points", c.fit.points},
                {"noise_sigma", c.fit.noise_sigma},
                {"true_omega_c_MHz", c.fit.true_omega_c_MHz},
                {"true_gamma_rel_kHz", c.fit.true_gamma_rel_kHz},
                {"init_omega_c_MHz", c.fit.init_omega_c_MHz},
                {"init_gamma_rel_kHz", c.fit.init_gamma_rel_kHz},
                {"init_amplitude", c.fit.init_amplitude},
                {"init_baseline", c.fit.init_baseline},
                {"init_center_MHz", c.fit.init_center_MHz},
                {"fixed", c.fit.fixed}};
    j["outputs"] = {{"dir", c.outputs.dir}};
    j["seed"] = c.seed;
    return j;
}

std::uint64_t config_digest(const ScenarioConfig& c) {
    json j = effective_config(c);
    j.erase("outputs");
    return fnv1a64(j.dump());
}

std::string digest_hex(std::uint64_t d) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(d));
    return buf;
}

eit::CascadeSystem make_system(const ScenarioConfig& c) {
    const auto& y = c.system;
    auto laser = [](const LaserSection& l) {
        atomic::LaserParams p;
        p.wavelength_nm = l.wavelength_nm;
        p.power_w = l.power_w;
        p.waist_radius_m = l.waist_mm * 1e-3;
        p.residual_linewidth_hz = l.linewidth_kHz * 1e3;
        p.static_detuning = mhz_to_angular(l.static_detuning_MHz);
        return p;
    };
    eit::CascadeSystem s;
    s.probe = laser(y.probe);
    s.coupling = laser(y.coupling);
    s.rates.gamma_e = mhz_to_angular(y.gamma_e_MHz);
    s.rates.gamma_r = hz_to_angular(y.gamma_r_kHz * 1e3);
    s.rates.gamma_transit = hz_to_angular(y.gamma_transit_kHz * 1e3);
    s.rates.gamma_rel_laser = hz_to_angular(y.gamma_rel_laser_kHz * 1e3);
    s.vapor.temperature_k = y.temperature_K;
    s.vapor.cell_length_m = y.cell_length_mm * 1e-3;
    s.vapor.peak_optical_depth = y.optical_depth;
    s.counter_propagating = y.counter_propagating;
    if (y.omega_c_MHz) {
        s.omega_c = mhz_to_angular(*y.omega_c_MHz);
    } else {
        atomic::RydbergLevel level;
        level.n = y.rydberg_n;
        level.series = y.rydberg_series == "S" ? atomic::Series::S : atomic::Series::D;
        level.quantum_defect = y.quantum_defect.value_or(atomic::default_quantum_defect(level.series));
        atomic::RabiReference ref;
        ref.n_star = y.reference_n_star;
        ref.omega_c = mhz_to_angular(y.reference_omega_c_MHz);
        ref.series = y.reference_series == "S" ? atomic::Series::S : atomic::Series::D;
        ref.power_w = y.reference_power_w;
        ref.waist_radius_m = y.reference_waist_mm * 1e-3;
        ref.sd_amplitude_ratio = y.sd_amplitude_ratio;
        s.omega_c = atomic::coupling_rabi_frequency(s.coupling, level, ref);
    }
    return s;
}

quad::QuadratureSpec make_quadrature(const ScenarioConfig& c) {
    quad::QuadratureSpec q;
    q.method = quad::method_from_string(c.quadrature.method);
    q.node_count = c.quadrature.node_count.value_or(default_node_count(c.quadrature.method));
    q.velocity_cutoff = c.quadrature.velocity_cutoff;
    q.convergence_tolerance = c.quadrature.convergence_tolerance;
    return q;
}

fm::FmParams make_fm(const ScenarioConfig& c) {
    fm::FmParams f;
    f.omega_m = mhz_to_angular(c.fm.modulation_MHz);
    f.beta = c.fm.beta;
    f.theta = c.fm.phase_deg ? *c.fm.phase_deg * kPi / 180.0 : 0.0;
    f.electronic_gain = c.fm.electronic_gain_V;
    f.detector_rolloff = c.fm.detector_rolloff;
    return f;
}

servo::ControllerConfig make_controller(const ScenarioConfig& c) {
    servo::ControllerConfig k;
    k.fast.proportional_gain = c.controller.proportional_gain;
    k.fast.integrator_corner_hz = c.controller.integrator_corner_Hz;
    k.fast.cutoff_hz = c.controller.cutoff_Hz;
    k.slow.integrator_gain = c.controller.slow_integrator_gain_per_s;
    k.slow.output_range_hz = c.controller.slow_range_MHz * 1e6;
    k.sign = c.controller.sign;
    return k;
}

servo::NoiseModel make_noise(const ScenarioConfig& c, std::string_view stream) {
    servo::NoiseModel n;
    n.white_psd = c.noise.white_psd_Hz2_per_Hz;
    n.random_walk_coeff = c.noise.random_walk_Hz2_per_s;
    n.seed = derive_seed(c.seed, stream);
    return n;
}

}  // namespace eitlock::harness
