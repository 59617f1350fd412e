#include "andna/snsd.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "andna/registry.hpp"

namespace andna {

namespace {

bool all_digits(const std::string& s) {
    if (s.empty())
        return false;
    return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); });
}

bool parse_u32(const std::string& s, std::uint32_t max, std::uint32_t& out) {
    if (!all_digits(s) || s.size() > 10)
        return false;
    std::uint64_t v = 0;
    for (char c : s) {
        v = v * 10 + std::uint64_t(c - '0');
        if (v > max)
            return false;
    }
    out = std::uint32_t(v);
    return true;
}

SnsdTarget parse_target(const std::string& field) {
    Ip ip;
    if (parse_ip(field, ip))
        return SnsdTarget{ip};
    return SnsdTarget{field};
}

}  // namespace

bool target_is_ip(const SnsdTarget& t) {
    return std::holds_alternative<Ip>(t);
}

std::string target_to_string(const SnsdTarget& t) {
    if (target_is_ip(t))
        return to_string(std::get<Ip>(t));
    return std::get<std::string>(t);
}

const std::map<std::string, std::uint16_t>& builtin_service_table() {
    static const std::map<std::string, std::uint16_t> table = {
        {"http", 80}, {"ftp", 21}, {"ssh", 22}, {"smtp", 25}, {"domain", 53},
    };
    return table;
}

std::vector<std::string> validate_record(const SnsdRecord& r, std::optional<Ip> own_ip) {
    std::vector<std::string> violations;
    if (r.weight > kMaxSnsdWeight)
        violations.push_back("weight must be less than 128");
    if (!target_is_ip(r.target)) {
        const std::string& h = std::get<std::string>(r.target);
        if (h.empty() || h.size() > kMaxHostnameLen)
            violations.push_back("target hostname must be 1..512 bytes");
    }
    if (r.service == 0 && target_is_ip(r.target) && own_ip &&
        std::get<Ip>(r.target) != *own_ip)
        violations.push_back("service 0 cannot remap the main ip");
    return violations;
}

const char* to_string(SnsdRegResult r) {
    switch (r) {
    case SnsdRegResult::Ok: return "ok";
    case SnsdRegResult::NotOwner: return "NotOwner";
    case SnsdRegResult::QueuedNotActive: return "QueuedNotActive";
    case SnsdRegResult::PerNameLimit: return "PerNameLimit";
    case SnsdRegResult::GlobalLimit: return "GlobalLimit";
    case SnsdRegResult::BadSignature: return "BadSignature";
    case SnsdRegResult::InvalidRecord: return "InvalidRecord";
    }
    return "?";
}

SnsdRegResult register_snsd(AndnaEntry& entry, const SnsdRecord& r, const PubKey& pk,
                            bool signature_ok, std::size_t total_for_key) {
    if (entry.queue.empty() || entry.queue.front().pubkey != pk) {
        for (std::size_t i = 1; i < entry.queue.size(); ++i) {
            if (entry.queue[i].pubkey == pk)
                return SnsdRegResult::QueuedNotActive;
        }
        return SnsdRegResult::NotOwner;
    }
    if (!signature_ok)
        return SnsdRegResult::BadSignature;
    if (!validate_record(r, entry.queue.front().registrant_ip).empty())
        return SnsdRegResult::InvalidRecord;
    if (entry.snsd.size() >= kMaxSnsdPerName)
        return SnsdRegResult::PerNameLimit;
    if (total_for_key >= kMaxSnsdPerKey)
        return SnsdRegResult::GlobalLimit;
    entry.snsd.push_back(r);
    return SnsdRegResult::Ok;
}

std::vector<ResolvedRecord> resolve_service(const AndnaEntry& entry, std::uint16_t service) {
    std::vector<ResolvedRecord> out;
    if (entry.queue.empty())
        return out;
    if (service == 0) {
        out.push_back(ResolvedRecord{SnsdTarget{entry.queue.front().registrant_ip},
                                     entry.zero_policy.priority, entry.zero_policy.weight});
    }
    for (const SnsdRecord& r : entry.snsd) {
        if (r.service == service)
            out.push_back(ResolvedRecord{r.target, r.priority, r.weight});
    }
    return out;
}

std::optional<ResolvedRecord> select_record(const std::vector<ResolvedRecord>& records,
                                            const Reachability& reachable,
                                            const RandBelow& rand_below) {
    // Candidate priorities, most preferred (numerically lowest) first.
    std::vector<std::uint8_t> priorities;
    for (const ResolvedRecord& r : records) {
        if (r.weight > 0)
            priorities.push_back(r.priority);
    }
    std::sort(priorities.begin(), priorities.end());
    priorities.erase(std::unique(priorities.begin(), priorities.end()), priorities.end());

    for (std::uint8_t prio : priorities) {
        std::vector<const ResolvedRecord*> cls;
        std::uint64_t total = 0;
        for (const ResolvedRecord& r : records) {
            if (r.priority == prio && r.weight > 0 && reachable(r.target)) {
                cls.push_back(&r);
                total += r.weight;
            }
        }
        if (cls.empty())
            continue;  // whole class unreachable, fall through to lower priority
        std::uint64_t pick = rand_below(total);
        for (const ResolvedRecord* r : cls) {
            if (pick < r->weight)
                return *r;
            pick -= r->weight;
        }
    }
    return std::nullopt;
}

SnsdParseResult parse_snsd_nodes(const std::string& text,
                                 const std::map<std::string, std::uint16_t>& service_table) {
    SnsdParseResult result;
    std::istringstream in(text);
    std::string raw;
    std::size_t lineno = 0;
    auto bad = [&](const std::string& msg) {
        result.diagnostics.push_back("line " + std::to_string(lineno) + ": " + msg);
    };
    while (std::getline(in, raw)) {
        ++lineno;
        std::string line = raw;
        // trim
        while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back())))
            line.pop_back();
        std::size_t start = 0;
        while (start < line.size() && std::isspace(static_cast<unsigned char>(line[start])))
            ++start;
        line = line.substr(start);
        if (line.empty() || line[0] == '#')
            continue;

        std::vector<std::string> fields;
        std::size_t pos = 0;
        while (true) {
            std::size_t colon = line.find(':', pos);
            if (colon == std::string::npos) {
                fields.push_back(line.substr(pos));
                break;
            }
            fields.push_back(line.substr(pos, colon - pos));
            pos = colon + 1;
        }
        if (fields.size() < 3) {
            bad("expected hostname:target:service[:priority[:weight[:pub_key_file]]]");
            continue;
        }
        SnsdConfigLine cfg;
        cfg.hostname = fields[0];
        if (cfg.hostname.empty() || cfg.hostname.size() > kMaxHostnameLen) {
            bad("hostname must be 1..512 bytes");
            continue;
        }
        if (fields[1].empty()) {
            bad("empty target");
            continue;
        }
        cfg.target = parse_target(fields[1]);
        std::uint32_t service = 0;
        if (parse_u32(fields[2], 65535, service)) {
            cfg.service = std::uint16_t(service);
        } else {
            auto it = service_table.find(fields[2]);
            if (it == service_table.end()) {
                bad("unknown service '" + fields[2] + "'");
                continue;
            }
            cfg.service = it->second;
        }
        // Remaining fields are positional: priority, weight, pub_key_file.
        // A trailing non-numeric field is the key path even when priority or
        // weight were omitted, matching the shipped file's own example lines.
        std::size_t next = 3;
        bool ok = true;
        std::uint32_t v = 0;
        if (next < fields.size() && all_digits(fields[next])) {
            if (!parse_u32(fields[next], 255, v)) {
                bad("priority must be 0..255");
                ok = false;
            } else {
                cfg.priority = std::uint8_t(v);
                ++next;
            }
        }
        if (ok && next < fields.size() && all_digits(fields[next])) {
            if (!parse_u32(fields[next], 0xffffffff, v) || v > kMaxSnsdWeight) {
                bad("weight must be less than 128");
                ok = false;
            } else {
                cfg.weight = std::uint8_t(v);
                ++next;
            }
        }
        if (ok && next < fields.size()) {
            if (all_digits(fields[next])) {
                bad("unexpected extra numeric field");
                ok = false;
            } else if (fields[next].empty()) {
                bad("empty pub_key_file path");
                ok = false;
            } else {
                cfg.pub_key_file = fields[next];
                ++next;
            }
        }
        if (ok && next < fields.size()) {
            bad("trailing fields after pub_key_file");
            ok = false;
        }
        if (!ok)
            continue;

        SnsdRecord probe{cfg.target, cfg.service, cfg.priority, cfg.weight, std::nullopt};
        auto violations = validate_record(probe);
        if (!violations.empty()) {
            bad(violations.front());
            continue;
        }
        result.lines.push_back(std::move(cfg));
    }
    return result;
}

std::string serialize_snsd_lines(const std::vector<SnsdConfigLine>& lines) {
    std::ostringstream os;
    for (const SnsdConfigLine& l : lines) {
        os << l.hostname << ':' << target_to_string(l.target) << ':' << l.service << ':'
           << unsigned(l.priority) << ':' << unsigned(l.weight);
        if (l.pub_key_file)
            os << ':' << *l.pub_key_file;
        os << '\n';
    }
    return os.str();
}

}  // namespace andna
