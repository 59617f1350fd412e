#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "andna/counter.hpp"
#include "andna/identity.hpp"
#include "andna/registry.hpp"
#include "andna/snsd.hpp"
#include "andna/types.hpp"

namespace andna {

struct SimState;  // netsim.hpp

enum class MsgKind : std::uint8_t {
    RegisterReq = 1,
    UpdateReq = 2,
    CounterCheckReq = 3,
    ResolveReq = 4,
    DelegatedResolveReq = 5,
    ReverseReq = 6,
    CacheTransferReq = 7,
    DoubleCheckReq = 8,
    SnsdRegisterReq = 9,
    SnsdDeleteReq = 10,
    ChallengeReq = 11,
    RegisterResp = 12,
    UpdateResp = 13,
    CounterCheckResp = 14,
    ResolveResp = 15,
    DelegatedResolveResp = 16,
    ReverseResp = 17,
    CacheTransferResp = 18,
    DoubleCheckResp = 19,
    SnsdResp = 20,
    ChallengeResp = 21,
};
const char* to_string(MsgKind k);

enum class Verdict : std::uint8_t {
    Ok = 0,
    NotFound = 1,
    WrongGnode = 2,
    BadSignature = 3,
    OverQuota = 4,
    QueueFull = 5,
    StolenNameBlocked = 6,
    StaleId = 7,
    GapId = 8,
    UnknownHostname = 9,
    UnknownKey = 10,
    CounterInactive = 11,
    Timeout = 12,
    Unreachable = 13,
    NotOwner = 14,
    QueuedNotActive = 15,
    PerNameLimit = 16,
    GlobalLimit = 17,
    InvalidRecord = 18,
    AllDisabled = 19,
    BadName = 20,
    Dropped = 21,
};
const char* to_string(Verdict v);

enum class CounterMode : std::uint8_t {
    Register = 1,
    Update = 2,
};

struct RegisterPayload {
    Ip hname_hash;
    Ip registrant;
};
struct UpdatePayload {
    Ip hname_hash;
    Ip new_ip;
    std::uint32_t update_id = 0;
};
struct CounterCheckPayload {
    CounterMode mode = CounterMode::Register;
    PubKey subject;
    Ip hname_hash;
    Ip registrant;
};
struct ResolvePayload {
    Ip hname_hash;
    std::uint16_t service = 0;
};
struct DelegatedResolvePayload {
    Ip hname_hash;
};
struct ReversePayload {};
struct CacheTransferPayload {
    Ip hname_hash;
};
struct DoubleCheckPayload {
    Ip hname_hash;
};
struct SnsdRegisterPayload {
    Ip hname_hash;
    SnsdRecord record;
};
struct SnsdDeletePayload {
    Ip hname_hash;
    std::uint16_t service = 0;
    SnsdTarget target;
};
struct ChallengePayload {
    Bytes nonce;
};
struct RegisterRespPayload {
    Verdict verdict = Verdict::Ok;
    std::uint8_t position = 0;
};
struct UpdateRespPayload {
    Verdict verdict = Verdict::Ok;
};
struct CounterCheckRespPayload {
    Verdict verdict = Verdict::Ok;
    CounterMode mode = CounterMode::Register;
};
struct ResolveRespPayload {
    Verdict verdict = Verdict::Ok;
    Ip zero_ip;                       // the entry's head ip
    Secs registered_or_updated_at = 0;
    std::vector<ResolvedRecord> records;
};
struct ReverseRespPayload {
    std::vector<std::string> hostnames;
};
struct CacheTransferRespPayload {
    bool found = false;
    AndnaEntry entry;
};
struct DoubleCheckRespPayload {
    bool found = false;
    AndnaEntry entry;
};
struct SnsdRespPayload {
    Verdict verdict = Verdict::Ok;
};
struct ChallengeRespPayload {
    Bytes nonce;
};

using Payload =
    std::variant<RegisterPayload, UpdatePayload, CounterCheckPayload, ResolvePayload,
                 DelegatedResolvePayload, ReversePayload, CacheTransferPayload,
                 DoubleCheckPayload, SnsdRegisterPayload, SnsdDeletePayload, ChallengePayload,
                 RegisterRespPayload, UpdateRespPayload, CounterCheckRespPayload,
                 ResolveRespPayload, ReverseRespPayload, CacheTransferRespPayload,
                 DoubleCheckRespPayload, SnsdRespPayload, ChallengeRespPayload>;

// A protocol message. `sender` is the originator and is preserved verbatim
// when a serving node replicates the request inside its gnode; per-hop
// addressing lives in the Delivery envelope.
struct Message {
    MsgKind kind = MsgKind::RegisterReq;
    Ip sender;
    std::uint64_t req_id = 0;
    Payload payload;
    std::optional<PubKey> pubkey;
    Signature signature;  // empty = unsigned
};

// Envelope for one hop. Forwarded gnode-replication writes carry the
// serving node's commit time so every replica stores identical timestamps.
struct Delivery {
    Ip from;
    Ip to;
    bool forwarded = false;
    Secs applied_at = 0;
    Message msg;
};

// Client-side cache of resolutions; expires exactly when the upstream
// registration would.
struct ResolvedCacheEntry {
    Ip hname_hash;
    Ip ip;
    Secs registered_or_updated_at = 0;
    Secs expires_at = 0;
};

// Completed (or failed) top-level operation, for logs and tests.
struct OpOutcome {
    std::string verb;
    Ip actor;
    bool done = false;
    Verdict verdict = Verdict::Ok;
    Secs completed_at = 0;
    std::optional<std::size_t> position;          // register
    std::optional<Ip> resolved_ip;                // resolve service 0 / chain target
    std::vector<ResolvedRecord> records;          // resolve service != 0
    std::optional<std::string> chosen;            // selected record, rendered
    std::optional<Ip> final_ip;                   // after the chain hop
    std::vector<std::string> hostnames;           // reverse
    bool from_cache = false;
    bool service_query = false;  // non-zero-service resolve; always log records
};

// --- pending continuations -------------------------------------------------

struct PendRegister {
    std::uint64_t op_id = 0;
    std::string hostname;
};
struct PendUpdate {
    std::uint64_t op_id = 0;
    std::string hostname;
    std::uint32_t update_id = 0;
};
// Awaiting a direct ResolveResp; `purpose` routes the completion.
struct PendResolve {
    enum class Purpose { ClientOp, ChainHop, Delegated, ChallengeTarget } purpose =
        Purpose::ClientOp;
    std::uint64_t op_id = 0;   // ClientOp / ChainHop
    std::string hostname;      // the name this request resolves (cache key)
    Ip hname_hash;
    std::uint16_t service = 0;
    // ChainHop: the operation being chained for
    std::string orig_hostname;
    std::uint16_t orig_service = 0;
    // Delegated: reply path back to the asking node
    Ip delegated_client;
    std::uint64_t delegated_req = 0;
    // ChallengeTarget: the record being challenged
    std::string challenge_hostname;
    SnsdRecord challenge_record;
};
struct PendDelegated {
    std::uint64_t op_id = 0;
    std::string hostname;
};
struct PendReverse {
    std::uint64_t op_id = 0;
    Ip target;
};
struct PendSnsdRegister {
    std::uint64_t op_id = 0;
    std::string hostname;
    SnsdRecord record;
};
struct PendSnsdDelete {
    std::optional<std::uint64_t> op_id;  // unset when challenge-triggered
    std::string hostname;
};
struct PendChallenge {
    std::string hostname;
    SnsdRecord record;
    Bytes nonce;
};
// Server side: registration paused on the old-gnode double check.
struct PendSrvDoubleCheck {
    Delivery original;
};
// Server side: registration or update paused on the counter gnode.
struct PendSrvCounter {
    Delivery original;
};
// Server side: request paused on a passive transfer from the old gnode.
struct PendSrvTransfer {
    Delivery original;
};
using Pending =
    std::variant<PendRegister, PendUpdate, PendResolve, PendDelegated, PendReverse,
                 PendSnsdRegister, PendSnsdDelete, PendChallenge, PendSrvDoubleCheck,
                 PendSrvCounter, PendSrvTransfer>;

// --- entry points ----------------------------------------------------------

// Executes one delivered message against the destination node. Returns the
// verdict recorded on the trace line.
Verdict handle_delivery(SimState& s, const Delivery& d);

// Fires a request timeout; no-op when the request already completed.
void handle_timeout(SimState& s, Ip owner, std::uint64_t req_id);

// Client-side operations. Each returns an op id whose OpOutcome fills in
// when the flow completes (possibly synchronously, e.g. cache hits).
std::uint64_t start_register(SimState& s, Ip node, const std::string& hostname);
std::uint64_t start_update(SimState& s, Ip node, const std::string& hostname, Ip new_ip);
std::uint64_t start_resolve(SimState& s, Ip node, const std::string& hostname,
                            std::uint16_t service);
std::uint64_t start_delegated_resolve(SimState& s, Ip node, const std::string& hostname);
std::uint64_t start_reverse(SimState& s, Ip node, Ip target);
std::uint64_t start_snsd_register(SimState& s, Ip node, const std::string& hostname,
                                  const SnsdRecord& record);
std::uint64_t start_snsd_delete(SimState& s, Ip node, const std::string& hostname,
                                std::uint16_t service, const SnsdTarget& target);
// One round of trusted-record challenges for every record this node watches.
void start_challenge_round(SimState& s, Ip node);

// Database sync a joining node performs against a same-gnode peer.
void andna_hook(SimState& s, Ip joiner);

}  // namespace andna
