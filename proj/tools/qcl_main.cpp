// Command-line front end: run pipeline stages or whole scenarios from a
// JSON config and emit tabular artifacts.

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "qcl/errors.hpp"
#include "qcl/scenario.hpp"

namespace {

std::string slurp(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw qcl::IoError("cannot read config file " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

int run(const std::string& config_path, const std::string& out_dir, long seed,
        const std::string& format, const std::vector<std::string>& outputs) {
    std::vector<qcl::scenario::ConfigIssue> issues;
    auto cfg = qcl::scenario::validate_config(slurp(config_path), issues);
    if (!cfg) {
        for (const auto& issue : issues)
            std::cerr << "config error at '" << issue.path << "': " << issue.message << "\n";
        return 1;
    }
    if (seed >= 0) cfg->seed = seed;
    if (!outputs.empty()) cfg->outputs = outputs;
    const auto fmt = format == "json" ? qcl::io::Format::json : qcl::io::Format::csv;
    const auto result = qcl::scenario::run_scenario(*cfg, out_dir, fmt);
    for (const auto& s : result.stages)
        std::cout << (s.ok ? "ok   " : "FAIL ") << s.stage
                  << (s.ok ? "" : ": " + s.error) << "\n";
    if (!result.ok) {
        std::cerr << "scenario failed at stage: " << result.failed_stage << "\n";
        return 2;
    }
    std::cout << result.artifacts.size() << " artifacts in " << out_dir << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"open-system decoherence and phase-space classical-limit toolkit"};
    app.require_subcommand(1);

    std::string config = "configs/omnes.json";
    std::string out_dir = "out";
    std::string format = "csv";
    long seed = -1;
    app.add_option("-c,--config", config, "scenario config file (JSON)");
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--seed", seed, "override the config seed");
    app.add_option("--format", format, "csv|json")
        ->check(CLI::IsMember({"csv", "json"}));

    std::map<std::string, std::vector<std::string>> stage_sets = {
        {"poles", {"poles"}},
        {"evolve", {"poles", "survival"}},
        {"modes", {"poles", "envelope", "modes", "entropy"}},
        {"wigner", {"poles", "wigner"}},
        {"classical", {"poles", "domains", "trajectory"}},
    };
    for (const auto& [name, outs] : stage_sets)
        app.add_subcommand(name, "run the " + name + " stage group");

    auto* scen = app.add_subcommand("scenario", "scenario operations");
    auto* scen_run = scen->add_subcommand("run", "run a full scenario from a config file");
    std::string scen_file;
    scen_run->add_option("file", scen_file, "config file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        for (const auto& [name, outs] : stage_sets)
            if (app.got_subcommand(name)) return run(config, out_dir, seed, format, outs);
        if (scen->parsed() && scen_run->parsed())
            return run(scen_file, out_dir, seed, format, {});
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
