#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "andna/identity.hpp"
#include "andna/snsd.hpp"
#include "andna/types.hpp"

namespace andna {

// One registrant waiting (or serving) on a hostname.
struct QueueSlot {
    Ip registrant_ip;
    PubKey pubkey;
    Secs registered_at = 0;
    Secs last_update_at = 0;
    std::uint32_t update_count = 0;
};

// A hostname's registration state: the queue head is the active registrant,
// SNSD records and the zero policy belong to the head and die with it.
struct AndnaEntry {
    Ip hname_hash;
    std::vector<QueueSlot> queue;
    std::vector<SnsdRecord> snsd;
    ZeroRecordPolicy zero_policy;
};

struct RegistryDb {
    GnodeId owner_gnode;
    std::map<std::uint32_t, AndnaEntry> entries;  // keyed by hname_hash.value
};

// Registration into the queue. Returns the slot position (0 = head); the
// same pubkey re-registering reports its existing position unchanged.
// Returns nullopt when the queue already holds 5 distinct keys.
std::optional<std::size_t> apply_registration(RegistryDb& db, Ip hname_hash, Ip registrant,
                                              const PubKey& pk, Secs now);

enum class UpdateResult {
    Ok,
    UnknownHostname,
    UnknownKey,
    StaleId,
    GapId,
};
const char* to_string(UpdateResult r);

// Accepts the k-th update only with update_id == k; replays and gaps are
// rejected without mutating anything.
UpdateResult apply_update(RegistryDb& db, Ip hname_hash, const PubKey& pk, Ip new_ip,
                          std::uint32_t update_id, Secs now);

struct ExpiredSlot {
    Ip hname_hash;
    PubKey expired;
    std::optional<PubKey> promoted;  // set when a queued slot took over the head
};

// Removes every slot aged >= 30 virtual days, promoting queued slots into
// freed heads (promoted heads start without SNSD records).
std::vector<ExpiredSlot> expire_sweep(RegistryDb& db, Secs now);

struct HeadView {
    Ip ip;
    Secs last_update_at = 0;
    std::uint32_t update_count = 0;
};

// Read-only view of the active registrant.
std::optional<HeadView> lookup(const RegistryDb& db, Ip hname_hash);

// Entries whose rounded hash gnode under `active` is no longer the owner.
std::vector<Ip> audit_misplaced(const RegistryDb& db, const std::set<GnodeId>& active);

// Debug dump, one line per slot:
// hash-hex \t position \t registrant-ip \t update_count \t last_update_at
std::string dump_registry(const RegistryDb& db);

// Test aid: SNSD record state, one line per record, stable order.
std::string dump_snsd(const RegistryDb& db);

}  // namespace andna
