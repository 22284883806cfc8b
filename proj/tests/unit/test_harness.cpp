#include <doctest.h>

#include <filesystem>

#include "eitlock/errors.hpp"
#include "eitlock/harness/config.hpp"
#include "eitlock/harness/csv.hpp"
#include "eitlock/harness/scenario.hpp"
#include "gen.hpp"

using namespace eitlock;
using namespace eitlock::harness;
namespace fs = std::filesystem;

namespace {

std::vector<std::string> problems_of(const std::string& text) {
    try {
        validate_config(text);
    } catch (const ConfigError& e) {
        return e.problems();
    }
    return {};
}

bool mentions(const std::vector<std::string>& problems, const std::string& needle) {
    for (const auto& p : problems)
        if (p.find(needle) != std::string::npos) return true;
    return false;
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("eitlock_test_" + name);
    fs::remove_all(p);
    return p;
}

}  // namespace

TEST_CASE("a coupling strength is the only required input") {
    CHECK(mentions(problems_of("{}"), "system.omega_c_MHz: required unless system.coupling.power > 0"));
    CHECK(problems_of(R"({"system": {"coupling": {"power": "1 mW"}}})").empty());
    const auto c = validate_config(R"({"system": {"omega_c_MHz": 2}})");
    CHECK(c.seed == 1);
    CHECK(c.quadrature.method == "adaptive");
    CHECK(make_quadrature(c).node_count == 16);
    CHECK(make_system(c).coupling.wavelength_nm == 480.0);
}

TEST_CASE("field-level validation messages") {
    CHECK(mentions(problems_of(R"({"system": {"coupling": {"power": "-1 mW"}}})"), "system.coupling.power: must be >= 0"));
    CHECK(mentions(problems_of(R"({"quadrature": {"node_count": 4}})"), "node_count ≥ 8"));
    CHECK(mentions(problems_of(R"({"system": {"probe": {"colour": 1}}})"), "system.probe.colour: unknown key"));
    CHECK(mentions(problems_of(R"({"system": {"coupling": {"power": 3}}})"), "system.coupling.power"));
    CHECK(mentions(problems_of("{not json"), "parse"));
    CHECK_THROWS_AS(validate_config("[1, 2]"), ConfigError);
}

TEST_CASE("every problem is reported at once") {
    const auto p = problems_of(R"({"fm": {"beta": 3}, "scan": {"points": 1}, "lock": {"duration_s": -1}, "bogus": 0})");
    CHECK(p.size() >= 4);
    CHECK(mentions(p, "fm.beta"));
    CHECK(mentions(p, "scan.points"));
    CHECK(mentions(p, "lock.duration_s"));
    CHECK(mentions(p, "bogus: unknown key"));
}

TEST_CASE("power strings carry their unit") {
    CHECK(parse_power("2.4 mW") == doctest::Approx(2.4e-3));
    CHECK(parse_power("1W") == 1.0);
    CHECK(parse_power("500 uW") == doctest::Approx(5e-4));
    CHECK(parse_power("500 µW") == doctest::Approx(5e-4));
    CHECK(parse_power("3 nW") == doctest::Approx(3e-9));
    CHECK_THROWS_AS(parse_power("2.4"), InvalidArgument);
    CHECK_THROWS_AS(parse_power("mW"), InvalidArgument);
    CHECK(parse_power(format_power(0.0024)) == 0.0024);
}

TEST_CASE("effective config echoes back to the same digest") {
    const std::string text = R"({"system": {"coupling": {"power": "2.4 mW"}, "omega_c_MHz": 3},
                                  "noise": {"random_walk_Hz2_per_s": 1e9}, "seed": 42})";
    const auto a = validate_config(text);
    const auto echoed = effective_config(a);
    const auto b = config_from_json(echoed);
    CHECK(config_digest(a) == config_digest(b));
    CHECK(effective_config(b) == echoed);
    CHECK(echoed["system"]["coupling"]["power"] == "0.0024 W");
}

TEST_CASE("digest ignores formatting and the output directory but not physics") {
    const auto a = validate_config(R"({"seed": 3, "fm": {"beta": 0.2}, "system": {"omega_c_MHz": 2}})");
    const auto b = validate_config("{\"system\":{\"omega_c_MHz\":2.0},\n  \"fm\" : { \"beta\" : 0.20 },\n\n \"seed\":3 ,\"outputs\": {\"dir\": \"elsewhere\"}}");
    const auto c = validate_config(R"({"seed": 3, "fm": {"beta": 0.21}, "system": {"omega_c_MHz": 2}})");
    const auto d = validate_config(R"({"seed": 4, "fm": {"beta": 0.2}, "system": {"omega_c_MHz": 2}})");
    CHECK(config_digest(a) == config_digest(b));
    CHECK(config_digest(a) != config_digest(c));
    CHECK(config_digest(a) != config_digest(d));
    CHECK(digest_hex(0xABCull).size() == 16);
}

TEST_CASE("seed streams are independent of each other") {
    const auto c = validate_config(R"({"seed": 9, "system": {"omega_c_MHz": 2}})");
    CHECK(make_noise(c, "laser").seed != make_noise(c, "beat-a").seed);
    CHECK(make_noise(c, "laser").seed == make_noise(c, "laser").seed);
}

TEST_CASE("CSV round-trips doubles exactly") {
    testgen::Gen g(71);
    Table t;
    t.columns = {"x_MHz", "y_V"};
    for (int i = 0; i < 200; ++i) t.add_row({g.normal() * std::pow(10.0, g.integer(-300, 300)), g.uniform(-1, 1)});
    t.add_row({0.0, -0.0});
    const Table back = from_csv(to_csv(t));
    CHECK(back.columns == t.columns);
    REQUIRE(back.rows.size() == t.rows.size());
    for (std::size_t i = 0; i < t.rows.size(); ++i) CHECK(back.rows[i] == t.rows[i]);
    CHECK_THROWS_AS(t.add_row({1.0}), InvalidArgument);
    CHECK_THROWS_AS(parse_double("1.0abc"), InvalidArgument);
}

TEST_CASE("an empty table is a header line") {
    Table t;
    t.columns = {"a", "b"};
    CHECK(to_csv(t) == "a,b\n");
    const auto dir = scratch("empty");
    emit_plotdata(t, dir / "nested" / "e.csv");
    CHECK(read_file(dir / "nested" / "e.csv") == "a,b\n");
    CHECK(read_plotdata(dir / "nested" / "e.csv").rows.empty());
    fs::remove_all(dir);
}

TEST_CASE("spectrum shows the carrier window and both sideband features") {
    auto c = validate_config(R"({"system": {"omega_c_MHz": 2}, "scan": {"points": 601}})");
    const Table t = spectrum_table(c);
    REQUIRE(t.columns.size() == 4);
    CHECK(t.columns[0] == "detuning_MHz");
    CHECK(t.rows.size() == 601);
    auto best = [&](double lo, double hi) {
        double x = 0, v = -1;
        for (const auto& r : t.rows)
            if (r[0] > lo && r[0] < hi && r[3] > v) { v = r[3]; x = r[0]; }
        return x;
    };
    CHECK(std::abs(best(-3, 3)) < 0.2);
    CHECK(best(10, 25) == doctest::Approx(16.25).epsilon(0.03));
    CHECK(best(-25, -10) == doctest::Approx(-16.25).epsilon(0.03));
}

TEST_CASE("lock without any noise source records zeros") {
    const auto c = validate_config(R"({"system": {"omega_c_MHz": 2}, "noise": {"white_psd_Hz2_per_Hz": 0}, "lock": {"duration_s": 1e-3,
                                      "monitor_bandwidth_Hz": 0}, "scan": {"points": 601}})");
    const auto dir = scratch("quiet_lock");
    const auto m = run_scenario(c, Subcommand::lock, dir);
    const Table e = read_plotdata(m.artifacts.at("lock_error"));
    CHECK(e.columns == std::vector<std::string>{"time_s", "value_Hz"});
    REQUIRE_FALSE(e.rows.empty());
    for (const auto& r : e.rows) CHECK(r[1] == 0.0);
    CHECK(m.summary["locked"] == true);
    CHECK(fs::exists(dir / "lock" / "effective_config.json"));
    CHECK(fs::exists(dir / "lock" / "manifest.json"));
    fs::remove_all(dir);
}

TEST_CASE("same config and seed give byte-identical artifacts") {
    const auto c = validate_config(R"({"system": {"omega_c_MHz": 2}, "noise": {"random_walk_Hz2_per_s": 1e9}, "lock": {"duration_s": 2e-3,
                                      "monitor_bandwidth_Hz": 0}, "scan": {"points": 601}, "seed": 5})");
    const auto a = scratch("det_a"), b = scratch("det_b");
    const auto ma = run_scenario(c, Subcommand::lock, a);
    const auto mb = run_scenario(c, Subcommand::lock, b);
    CHECK(ma.digest == mb.digest);
    for (const char* name : {"lock_error", "lock_signal", "lock"}) {
        CHECK(read_file(ma.artifacts.at(name)) == read_file(mb.artifacts.at(name)));
    }
    CHECK(read_file(a / "lock" / "effective_config.json") == read_file(b / "lock" / "effective_config.json"));
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST_CASE("subcommand names round-trip") {
    for (auto s : {Subcommand::spectrum, Subcommand::error_signal, Subcommand::lock, Subcommand::beat, Subcommand::fit})
        CHECK(subcommand_from_string(to_string(s)) == s);
    CHECK_THROWS_AS(subcommand_from_string("calibrate"), InvalidArgument);
}
