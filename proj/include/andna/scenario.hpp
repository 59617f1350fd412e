#pragma once

#include <string>
#include <vector>

#include "andna/netsim.hpp"

namespace andna {

struct ScenarioCommand {
    Secs at = 0;
    Command command;
};

struct ScenarioParseResult {
    std::vector<ScenarioCommand> commands;
    std::vector<std::string> errors;  // "line N: message"
};

// Line-oriented scenario format:
//   <at> join <ip>
//   <at> leave <ip>
//   <at> register <ip> "<hostname>"
//   <at> update <ip> "<hostname>" [<new-ip>]
//   <at> resolve <ip> "<hostname>" [<service>]
//   <at> reverse <ip> <target-ip>
//   <at> snsd-load <ip> <path>
//   <at> snsd-register <ip> "<snsd_nodes line>"
//   <at> advance
// '#' starts a comment; commands must be sorted by <at>.
ScenarioParseResult parse_scenario(const std::string& text);

struct ScenarioRun {
    std::vector<std::string> log;
    std::uint64_t rejections = 0;
    SimState sim;  // final state, for inspection
};

ScenarioRun run_scenario(const std::vector<ScenarioCommand>& commands,
                         const SimConfig& config, const std::string& base_dir = "");

}  // namespace andna
