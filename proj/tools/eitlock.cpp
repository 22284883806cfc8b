// eitlock <spectrum|error-signal|lock|beat|fit> --config FILE [--seed N] [--out DIR] [--quiet]
//
// Output directory precedence: --out, then $EITLOCK_OUT_DIR, then outputs.dir in the config.
// Failures print one JSON object {"error": kind, "message": …} on stderr and exit nonzero.

#include <CLI11.hpp>
#include <cstdlib>
#include <iostream>

#include "eitlock/errors.hpp"
#include "eitlock/harness/scenario.hpp"

namespace {

int report(const std::string& kind, const std::string& message, const std::vector<std::string>& problems = {}) {
    nlohmann::json j = {{"error", kind}, {"message", message}};
    if (!problems.empty()) j["problems"] = problems;
    std::cerr << j.dump() << '\n';
    return kind == "config" ? 2 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    using namespace eitlock;
    CLI::App app{"EIT-referenced laser lock simulator"};
    app.require_subcommand(1);
    std::string config_path, out_dir;
    std::uint64_t seed = 0;
    bool quiet = false;

    for (const char* name : {"spectrum", "error-signal", "lock", "beat", "fit"}) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "scenario file (JSON)")->required();
        sub->add_option("--seed", seed, "root seed, overrides the config");
        sub->add_option("--out", out_dir, "output directory");
        sub->add_flag("--quiet", quiet, "no summary on stdout");
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        return report("usage", e.what());
    }
    const std::string sub_name = app.get_subcommands().front()->get_name();

    try {
        harness::ScenarioConfig cfg = harness::validate_config(harness::read_file(config_path));
        if (app.get_subcommands().front()->count("--seed")) cfg.seed = seed;
        std::string dir = cfg.outputs.dir;
        if (const char* env = std::getenv("EITLOCK_OUT_DIR"); env && *env) dir = env;
        if (!out_dir.empty()) dir = out_dir;
        cfg.outputs.dir = dir;

        const auto manifest = harness::run_scenario(cfg, harness::subcommand_from_string(sub_name), dir);
        if (!quiet) std::cout << manifest.to_json().dump(2) << '\n';
        return 0;
    } catch (const ConfigError& e) {
        return report(e.kind(), e.what(), e.problems());
    } catch (const Error& e) {
        return report(e.kind(), std::string(sub_name) + ": " + e.what());
    } catch (const std::exception& e) {
        return report("internal", std::string(sub_name) + ": " + e.what());
    }
}
