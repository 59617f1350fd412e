#include "andna/scenario.hpp"

#include <cctype>
#include <sstream>

#include "andna/idspace.hpp"

namespace andna {

namespace {

// Splits a line into tokens; double-quoted tokens may contain spaces.
bool tokenize(const std::string& line, std::vector<std::string>& out, std::string& error) {
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i])))
            ++i;
        if (i >= line.size() || line[i] == '#')
            return true;
        if (line[i] == '"') {
            std::size_t close = line.find('"', i + 1);
            if (close == std::string::npos) {
                error = "unterminated quote";
                return false;
            }
            out.push_back(line.substr(i + 1, close - i - 1));
            i = close + 1;
        } else {
            std::size_t end = i;
            while (end < line.size() && !std::isspace(static_cast<unsigned char>(line[end])))
                ++end;
            out.push_back(line.substr(i, end - i));
            i = end;
        }
    }
    return true;
}

bool parse_secs(const std::string& tok, Secs& out) {
    if (tok.empty() || tok.size() > 15)  // caps at ~31 million virtual years
        return false;
    Secs v = 0;
    for (char c : tok) {
        if (!std::isdigit(static_cast<unsigned char>(c)))
            return false;
        v = v * 10 + Secs(c - '0');
    }
    out = v;
    return true;
}

bool parse_service_token(const std::string& tok, std::uint16_t& out) {
    Secs v = 0;
    if (parse_secs(tok, v)) {
        if (v > 65535)
            return false;
        out = std::uint16_t(v);
        return true;
    }
    const auto& table = builtin_service_table();
    auto it = table.find(tok);
    if (it == table.end())
        return false;
    out = it->second;
    return true;
}

}  // namespace

ScenarioParseResult parse_scenario(const std::string& text) {
    ScenarioParseResult result;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    Secs last_at = 0;
    bool seen_any = false;
    auto bad = [&](const std::string& msg) {
        result.errors.push_back("line " + std::to_string(lineno) + ": " + msg);
    };
    while (std::getline(in, line)) {
        ++lineno;
        std::vector<std::string> tok;
        std::string terr;
        if (!tokenize(line, tok, terr)) {
            bad(terr);
            continue;
        }
        if (tok.empty())
            continue;
        if (tok.size() < 2) {
            bad("expected: <at> <verb> ...");
            continue;
        }
        ScenarioCommand sc;
        if (!parse_secs(tok[0], sc.at)) {
            bad("bad timestamp '" + tok[0] + "'");
            continue;
        }
        if (seen_any && sc.at < last_at) {
            bad("commands out of order (at=" + tok[0] + ")");
            continue;
        }
        Command& cmd = sc.command;
        const std::string& verb = tok[1];
        auto need_ip = [&](std::size_t idx, Ip& out) {
            if (idx >= tok.size() || !parse_ip(tok[idx], out)) {
                bad("expected ip at argument " + std::to_string(idx));
                return false;
            }
            return true;
        };
        if (verb == "join") {
            cmd.verb = Command::Verb::Join;
            if (!need_ip(2, cmd.node))
                continue;
        } else if (verb == "leave") {
            cmd.verb = Command::Verb::Leave;
            if (!need_ip(2, cmd.node))
                continue;
        } else if (verb == "register") {
            cmd.verb = Command::Verb::Register;
            if (!need_ip(2, cmd.node))
                continue;
            if (tok.size() < 4) {
                bad("register needs a hostname");
                continue;
            }
            cmd.hostname = tok[3];
        } else if (verb == "update") {
            cmd.verb = Command::Verb::Update;
            if (!need_ip(2, cmd.node))
                continue;
            if (tok.size() < 4) {
                bad("update needs a hostname");
                continue;
            }
            cmd.hostname = tok[3];
            if (tok.size() > 4 && !parse_ip(tok[4], cmd.target_ip)) {
                bad("bad new ip '" + tok[4] + "'");
                continue;
            }
        } else if (verb == "resolve") {
            cmd.verb = Command::Verb::Resolve;
            if (!need_ip(2, cmd.node))
                continue;
            if (tok.size() < 4) {
                bad("resolve needs a hostname");
                continue;
            }
            cmd.hostname = tok[3];
            if (tok.size() > 4 && !parse_service_token(tok[4], cmd.service)) {
                bad("bad service '" + tok[4] + "'");
                continue;
            }
        } else if (verb == "reverse") {
            cmd.verb = Command::Verb::Reverse;
            if (!need_ip(2, cmd.node) || !need_ip(3, cmd.target_ip))
                continue;
        } else if (verb == "snsd-load") {
            cmd.verb = Command::Verb::SnsdLoad;
            if (!need_ip(2, cmd.node))
                continue;
            if (tok.size() < 4) {
                bad("snsd-load needs a path");
                continue;
            }
            cmd.text = tok[3];
        } else if (verb == "snsd-register") {
            cmd.verb = Command::Verb::SnsdRegister;
            if (!need_ip(2, cmd.node))
                continue;
            if (tok.size() < 4) {
                bad("snsd-register needs a record line");
                continue;
            }
            cmd.text = tok[3];
        } else if (verb == "advance") {
            cmd.verb = Command::Verb::Advance;
        } else {
            bad("unknown verb '" + verb + "'");
            continue;
        }
        last_at = sc.at;
        seen_any = true;
        result.commands.push_back(std::move(sc));
    }
    return result;
}

ScenarioRun run_scenario(const std::vector<ScenarioCommand>& commands,
                         const SimConfig& config, const std::string& base_dir) {
    ScenarioRun run{.log = {}, .rejections = 0, .sim = make_sim(config)};
    for (const ScenarioCommand& sc : commands) {
        Command cmd = sc.command;
        cmd.base_dir = base_dir;
        schedule_command(run.sim, sc.at, cmd);
    }
    settle(run.sim);
    run.log = run.sim.log;
    run.rejections = run.sim.rejections;
    return run;
}

}  // namespace andna
