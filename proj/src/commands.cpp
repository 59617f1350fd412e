#include "andna/commands.hpp"

#include <fstream>
#include <sstream>

#include "andna/idspace.hpp"

namespace andna {

namespace {

const char* verb_name(Command::Verb v) {
    switch (v) {
    case Command::Verb::Join: return "join";
    case Command::Verb::Leave: return "leave";
    case Command::Verb::Register: return "register";
    case Command::Verb::Update: return "update";
    case Command::Verb::Resolve: return "resolve";
    case Command::Verb::Reverse: return "reverse";
    case Command::Verb::SnsdLoad: return "snsd-load";
    case Command::Verb::SnsdRegister: return "snsd-register";
    case Command::Verb::Advance: return "advance";
    }
    return "?";
}

void command_error(SimState& s, const Command& cmd, const std::string& what) {
    ++s.rejections;
    log_line(s, verb_name(cmd.verb), cmd.node, what, "error");
}

// Turns accepted snsd_nodes lines into registration flows for `node`.
void run_snsd_lines(SimState& s, const Command& cmd, const std::string& text) {
    SnsdParseResult parsed = parse_snsd_nodes(text);
    for (const std::string& diag : parsed.diagnostics) {
        ++s.rejections;
        log_line(s, "snsd-load", cmd.node, diag, "rejected");
    }
    for (const SnsdConfigLine& line : parsed.lines) {
        SnsdRecord record;
        record.target = line.target;
        record.service = line.service;
        record.priority = line.priority;
        record.weight = line.weight;
        if (line.pub_key_file) {
            std::string path = *line.pub_key_file;
            if (!path.empty() && path[0] != '/' && !cmd.base_dir.empty())
                path = cmd.base_dir + "/" + path;
            try {
                record.trusted_pubkey = read_pubkey_file(path);
            } catch (const std::exception& e) {
                command_error(s, cmd, line.hostname + ": " + e.what());
                continue;
            }
        }
        start_snsd_register(s, cmd.node, line.hostname, record);
    }
}

}  // namespace

void execute_command(SimState& s, const Command& cmd) {
    try {
        switch (cmd.verb) {
        case Command::Verb::Join:
            join_node(s, cmd.node);
            return;
        case Command::Verb::Leave:
            leave_node(s, cmd.node);
            return;
        case Command::Verb::Register:
            start_register(s, cmd.node, cmd.hostname);
            return;
        case Command::Verb::Update: {
            Ip new_ip = cmd.target_ip.value ? cmd.target_ip : cmd.node;
            start_update(s, cmd.node, cmd.hostname, new_ip);
            return;
        }
        case Command::Verb::Resolve:
            start_resolve(s, cmd.node, cmd.hostname, cmd.service);
            return;
        case Command::Verb::Reverse:
            start_reverse(s, cmd.node, cmd.target_ip);
            return;
        case Command::Verb::SnsdLoad: {
            std::ifstream in(cmd.text.empty() || cmd.text[0] == '/' || cmd.base_dir.empty()
                                 ? cmd.text
                                 : cmd.base_dir + "/" + cmd.text);
            if (!in) {
                command_error(s, cmd, "cannot open " + cmd.text);
                return;
            }
            std::ostringstream buf;
            buf << in.rdbuf();
            run_snsd_lines(s, cmd, buf.str());
            return;
        }
        case Command::Verb::SnsdRegister:
            run_snsd_lines(s, cmd, cmd.text);
            return;
        case Command::Verb::Advance:
            return;  // the event's timestamp already moved the clock
        }
    } catch (const std::exception& e) {
        command_error(s, cmd, e.what());
    }
}

}  // namespace andna
