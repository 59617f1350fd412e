#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "andna/identity.hpp"
#include "andna/types.hpp"

namespace andna {

struct AndnaEntry;  // registry.hpp

// An SNSD target is either a literal address or another hostname
// (the latter is resolved one chain hop further, at service 0).
using SnsdTarget = std::variant<Ip, std::string>;

bool target_is_ip(const SnsdTarget& t);
std::string target_to_string(const SnsdTarget& t);

struct SnsdRecord {
    SnsdTarget target;
    std::uint16_t service = 0;
    std::uint8_t priority = 16;
    std::uint8_t weight = 1;  // 0 disables the record; must stay < 128
    std::optional<PubKey> trusted_pubkey;

    friend bool operator==(const SnsdRecord& a, const SnsdRecord& b) {
        return a.target == b.target && a.service == b.service && a.priority == b.priority &&
               a.weight == b.weight && a.trusted_pubkey == b.trusted_pubkey;
    }
};

// Priority/weight of the implicit service-0 record. Its target is always the
// register node's own ip and cannot be overridden, only re-weighted.
struct ZeroRecordPolicy {
    std::uint8_t priority = 16;
    std::uint8_t weight = 1;

    friend bool operator==(ZeroRecordPolicy a, ZeroRecordPolicy b) {
        return a.priority == b.priority && a.weight == b.weight;
    }
};

// One accepted line of an snsd_nodes file.
struct SnsdConfigLine {
    std::string hostname;
    SnsdTarget target;
    std::uint16_t service = 0;
    std::uint8_t priority = 16;
    std::uint8_t weight = 1;
    std::optional<std::string> pub_key_file;

    friend bool operator==(const SnsdConfigLine& a, const SnsdConfigLine& b) {
        return a.hostname == b.hostname && a.target == b.target && a.service == b.service &&
               a.priority == b.priority && a.weight == b.weight &&
               a.pub_key_file == b.pub_key_file;
    }
};

struct SnsdParseResult {
    std::vector<SnsdConfigLine> lines;
    std::vector<std::string> diagnostics;  // "line N: message"
};

// Built-in substitute for /etc/services lookups.
const std::map<std::string, std::uint16_t>& builtin_service_table();

// Record validation. `own_ip`, when known, enables the service-0
// main-ip immutability check. Violations are reported, never thrown.
std::vector<std::string> validate_record(const SnsdRecord& r,
                                         std::optional<Ip> own_ip = std::nullopt);

enum class SnsdRegResult {
    Ok,
    NotOwner,
    QueuedNotActive,
    PerNameLimit,
    GlobalLimit,
    BadSignature,
    InvalidRecord,
};
const char* to_string(SnsdRegResult r);

// Appends a record to an entry, enforcing head-only ownership, the
// 16-per-name and 256-per-key limits, and a caller-verified signature flag.
SnsdRegResult register_snsd(AndnaEntry& entry, const SnsdRecord& r, const PubKey& pk,
                            bool signature_ok, std::size_t total_for_key);

struct ResolvedRecord {
    SnsdTarget target;
    std::uint8_t priority = 0;
    std::uint8_t weight = 0;
};

// Records visible to a resolution request with the given service number.
// Service 0 yields the implicit zero record first, then stored aliases.
std::vector<ResolvedRecord> resolve_service(const AndnaEntry& entry, std::uint16_t service);

// Weighted pick per the SRV-style rule: lowest reachable priority class,
// probability proportional to weight inside the class, weight-0 records
// never chosen. Returns nullopt when everything is disabled or unreachable.
using Reachability = std::function<bool(const SnsdTarget&)>;
using RandBelow = std::function<std::uint64_t(std::uint64_t)>;  // uniform draw in [0, n)
std::optional<ResolvedRecord> select_record(const std::vector<ResolvedRecord>& records,
                                            const Reachability& reachable,
                                            const RandBelow& rand_below);

// snsd_nodes parser: ':'-separated fields, '#' comments, blank lines skipped,
// per-line diagnostics instead of aborts.
SnsdParseResult parse_snsd_nodes(const std::string& text,
                                 const std::map<std::string, std::uint16_t>& service_table =
                                     builtin_service_table());

// Canonical text form; parse(serialize(parse(x))) == parse(x) for accepted lines.
std::string serialize_snsd_lines(const std::vector<SnsdConfigLine>& lines);

}  // namespace andna
