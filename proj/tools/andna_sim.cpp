// Scenario runner and snsd_nodes checker for the ANDNA simulator.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "andna/scenario.hpp"
#include "andna/snsd.hpp"

namespace {

int cmd_run(const std::string& path, const andna::SimConfig& config, bool strict) {
    std::ifstream in(path);
    if (!in) {
        std::cerr << "cannot open scenario: " << path << "\n";
        return 2;
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    andna::ScenarioParseResult parsed = andna::parse_scenario(buf.str());
    if (!parsed.errors.empty()) {
        for (const std::string& e : parsed.errors)
            std::cerr << path << ": " << e << "\n";
        return 2;
    }
    std::string base_dir = std::filesystem::path(path).parent_path().string();
    andna::ScenarioRun run = andna::run_scenario(parsed.commands, config, base_dir);
    for (const std::string& line : run.log)
        std::cout << line << "\n";
    if (strict && run.rejections > 0)
        return 1;
    return 0;
}

int cmd_snsd_check(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        std::cerr << "cannot open file: " << path << "\n";
        return 2;
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    andna::SnsdParseResult parsed = andna::parse_snsd_nodes(buf.str());
    for (const std::string& diag : parsed.diagnostics)
        std::cout << diag << "\n";
    std::cout << parsed.lines.size() << " line(s) accepted, " << parsed.diagnostics.size()
              << " rejected\n";
    return parsed.diagnostics.empty() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ANDNA decentralized hostname system, desk-scale simulator"};
    app.require_subcommand(1);

    andna::SimConfig config;
    bool strict = false;
    std::string scenario_path;
    auto* run = app.add_subcommand("run", "execute a scenario file");
    run->add_option("scenario", scenario_path, "scenario file")->required();
    run->add_option("--seed", config.seed, "rng seed (default 1)");
    run->add_option("--link-delay", config.link_delay, "message delay, virtual seconds");
    run->add_option("--sweep-interval", config.sweep_interval,
                    "expiry sweep period, virtual seconds");
    run->add_flag("--strict", strict, "exit 1 when any command is rejected");
    run->add_flag("--trace", config.trace, "log one line per message delivery");

    std::string snsd_path;
    auto* check = app.add_subcommand("snsd-check", "validate an snsd_nodes file");
    check->add_option("file", snsd_path, "snsd_nodes file")->required();

    CLI11_PARSE(app, argc, argv);

    if (run->parsed())
        return cmd_run(scenario_path, config, strict);
    return cmd_snsd_check(snsd_path);
}
