#include "lbmcf/scenario.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>

namespace {

enum Exit { Ok = 0, Usage = 1, Validation = 2, Numerical = 3 };

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Line bundle mean curvature flow simulator and probes"};
    app.require_subcommand(1, 1);
    app.fallthrough();

    std::string config_path, outdir = "out";
    bool strict = false;
    std::uint64_t seed = 0;
    int nthreads = 1;
    app.add_option("--config", config_path, "scenario config (INI)")->required()->check(CLI::ExistingFile);
    app.add_option("--out", outdir, "output directory");
    app.add_flag("--strict", strict, "exit 3 when any checked invariant fails");
    app.add_option("--seed", seed, "seed for every random choice");
    app.add_option("--threads", nthreads, "worker threads")->check(CLI::Range(1, 1024));

    for (const auto& c : lbmcf::scenario_commands()) app.add_subcommand(c, "run " + c);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? Ok : Usage;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    try {
        lbmcf::set_threads(nthreads);
        lbmcf::ScenarioConfig cfg = lbmcf::parse_config(config_path);
        lbmcf::ScenarioResult res = lbmcf::run_scenario(cfg, command, seed);
        lbmcf::emit_outputs(res, cfg, command, seed, outdir);
        for (const auto& n : res.notes) std::cerr << "note: " << n << "\n";
        for (const auto& f : res.failures) std::cerr << (strict ? "error: " : "warning: ") << f << "\n";
        if (strict && !res.failures.empty()) return Numerical;
        return Ok;
    } catch (const lbmcf::UsageError& e) {
        std::cerr << "usage error: " << command << ": " << e.what() << "\n";
        return Usage;
    } catch (const lbmcf::ValidationError& e) {
        std::cerr << "validation error: " << command << ": " << e.what() << "\n";
        return Validation;
    } catch (const lbmcf::NumericalError& e) {
        std::cerr << "numerical failure: " << command << ": " << e.what() << "\n";
        return Numerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << command << ": " << e.what() << "\n";
        return Validation;
    }
}
