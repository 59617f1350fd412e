#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "andna/identity.hpp"
#include "andna/types.hpp"

namespace andna {

// Per-key bookkeeping on a counter node. The full set of hostname hashes is
// kept (not a bare count) so repeated checks for the same name stay idempotent.
struct CounterEntry {
    PubKey pubkey;
    std::set<std::uint32_t> hname_hashes;
    Secs last_check_at = 0;
};

struct CounterDb {
    GnodeId owner_gnode;
    std::map<Bytes, CounterEntry> entries;  // keyed by pubkey bytes
};

enum class CheckVerdict {
    Ok,
    OverQuota,
};

// Registration-path check: counts the hostname against the key's 256 quota.
// Already-counted hashes refresh and pass; over-quota leaves the db untouched.
CheckVerdict check_request(CounterDb& db, const PubKey& pk, Ip hname_hash, Secs now);

enum class UpdateCheckVerdict {
    Ok,
    Inactive,
};

// Update-path check: passes only while the key's entry is alive and the
// hostname is among its counted hashes; passing refreshes the keepalive.
UpdateCheckVerdict update_check(CounterDb& db, const PubKey& pk, Ip hname_hash, Secs now);

// Drops entries not checked for 30 virtual days (same window as hibernation).
std::vector<PubKey> counter_expire_sweep(CounterDb& db, Secs now);

// Debug dump, one line per entry: pubkey-digest-hex \t count \t last_check_at
std::string dump_counter(const CounterDb& db);

}  // namespace andna
