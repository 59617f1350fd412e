#include "andna/protocol.hpp"

#include <algorithm>
#include <sstream>

#include "andna/idspace.hpp"
#include "andna/netsim.hpp"
#include "andna/wire.hpp"

namespace andna {

const char* to_string(MsgKind k) {
    switch (k) {
    case MsgKind::RegisterReq: return "RegisterReq";
    case MsgKind::UpdateReq: return "UpdateReq";
    case MsgKind::CounterCheckReq: return "CounterCheckReq";
    case MsgKind::ResolveReq: return "ResolveReq";
    case MsgKind::DelegatedResolveReq: return "DelegatedResolveReq";
    case MsgKind::ReverseReq: return "ReverseReq";
    case MsgKind::CacheTransferReq: return "CacheTransferReq";
    case MsgKind::DoubleCheckReq: return "DoubleCheckReq";
    case MsgKind::SnsdRegisterReq: return "SnsdRegisterReq";
    case MsgKind::SnsdDeleteReq: return "SnsdDeleteReq";
    case MsgKind::ChallengeReq: return "ChallengeReq";
    case MsgKind::RegisterResp: return "RegisterResp";
    case MsgKind::UpdateResp: return "UpdateResp";
    case MsgKind::CounterCheckResp: return "CounterCheckResp";
    case MsgKind::ResolveResp: return "ResolveResp";
    case MsgKind::DelegatedResolveResp: return "DelegatedResolveResp";
    case MsgKind::ReverseResp: return "ReverseResp";
    case MsgKind::CacheTransferResp: return "CacheTransferResp";
    case MsgKind::DoubleCheckResp: return "DoubleCheckResp";
    case MsgKind::SnsdResp: return "SnsdResp";
    case MsgKind::ChallengeResp: return "ChallengeResp";
    }
    return "?";
}

const char* to_string(Verdict v) {
    switch (v) {
    case Verdict::Ok: return "ok";
    case Verdict::NotFound: return "NotFound";
    case Verdict::WrongGnode: return "WrongGnode";
    case Verdict::BadSignature: return "BadSignature";
    case Verdict::OverQuota: return "OverQuota";
    case Verdict::QueueFull: return "QueueFull";
    case Verdict::StolenNameBlocked: return "StolenNameBlocked";
    case Verdict::StaleId: return "StaleId";
    case Verdict::GapId: return "GapId";
    case Verdict::UnknownHostname: return "UnknownHostname";
    case Verdict::UnknownKey: return "UnknownKey";
    case Verdict::CounterInactive: return "CounterInactive";
    case Verdict::Timeout: return "Timeout";
    case Verdict::Unreachable: return "Unreachable";
    case Verdict::NotOwner: return "NotOwner";
    case Verdict::QueuedNotActive: return "QueuedNotActive";
    case Verdict::PerNameLimit: return "PerNameLimit";
    case Verdict::GlobalLimit: return "GlobalLimit";
    case Verdict::InvalidRecord: return "InvalidRecord";
    case Verdict::AllDisabled: return "AllDisabled";
    case Verdict::BadName: return "BadName";
    case Verdict::Dropped: return "Dropped";
    }
    return "?";
}

namespace {

// Sub-requests a serving node issues (double check, counter check, transfer,
// challenge) give up well before the client-side deadline does, so a dead
// peer mid-flow degrades into a verdict instead of a hung continuation.
constexpr Secs kSubTimeoutFactor = 16;
constexpr Secs kClientTimeoutFactor = 64;

Secs sub_timeout(const SimState& s) { return kSubTimeoutFactor * s.config.link_delay; }
Secs client_timeout(const SimState& s) { return kClientTimeoutFactor * s.config.link_delay; }

GnodeId current_rgh(const SimState& s, Ip hname_hash) {
    return rounded_hash_gnode(gnode_of(hname_hash), live_gnodes(s));
}

// The gnode that served the hash before `exclude` appeared: nearest active
// gnode to the hash gnode once the current server's gnode is removed.
std::optional<GnodeId> previous_rounded_gnode(const SimState& s, Ip hname_hash,
                                              GnodeId exclude) {
    std::set<GnodeId> rest = live_gnodes(s);
    rest.erase(exclude);
    if (rest.empty())
        return std::nullopt;
    return rounded_hash_gnode(gnode_of(hname_hash), rest);
}

void sign_message(Message& msg, const KeyPair& kp) {
    msg.pubkey = kp.pub;
    msg.signature.clear();
    msg.signature = sign(kp, canonical_bytes(msg));
}

// Verifies a message's signature against an explicit key (the challenge
// flow trusts a configured key, not whatever the response attaches).
bool signature_okay_for(const PubKey& pk, const Message& msg) {
    if (msg.signature.empty())
        return false;
    Message unsigned_copy = msg;
    unsigned_copy.signature.clear();
    try {
        return verify(pk, canonical_bytes(unsigned_copy), msg.signature);
    } catch (const MalformedKey&) {
        return false;
    }
}

bool signature_ok(const Message& msg) {
    if (!msg.pubkey)
        return false;
    return signature_okay_for(*msg.pubkey, msg);
}

void reply_to(SimState& s, const Delivery& req, MsgKind kind, Payload payload) {
    Message resp;
    resp.kind = kind;
    resp.sender = req.to;
    resp.req_id = req.msg.req_id;
    resp.payload = std::move(payload);
    send_message(s, Delivery{req.to, req.from, false, 0, std::move(resp)});
}

// Fresh correlated request from `from`; continuation keyed by the req id.
std::uint64_t send_request(SimState& s, Ip from, Ip to, MsgKind kind, Payload payload,
                           Pending pending, Secs timeout, const KeyPair* signer = nullptr) {
    Message msg;
    msg.kind = kind;
    msg.sender = from;
    msg.req_id = s.next_req_id++;
    msg.payload = std::move(payload);
    if (signer)
        sign_message(msg, *signer);
    node_at(s, from).pending.emplace(msg.req_id, std::move(pending));
    schedule_timeout(s, from, msg.req_id, timeout);
    send_message(s, Delivery{from, to, false, 0, std::move(msg)});
    return s.next_req_id - 1;
}

// Gnode-wide replication of an accepted write: the serving node re-sends the
// (still signed) request to every other live member, stamped with its own
// commit time so replicas store identical state.
void forward_to_gnode(SimState& s, Ip serving, const Message& msg) {
    for (Ip member : members_of_gnode(s, gnode_of(serving))) {
        if (member == serving)
            continue;
        send_message(s, Delivery{serving, member, true, s.now, msg});
    }
}

void install_entry(NodeState& node, const AndnaEntry& entry) {
    node.registry.entries[entry.hname_hash.value] = entry;
}

// Installs a transferred entry and replicates it across the gnode.
void install_and_forward(SimState& s, NodeState& me, const AndnaEntry& entry) {
    install_entry(me, entry);
    Message fwd;
    fwd.kind = MsgKind::CacheTransferResp;
    fwd.sender = me.ip;
    fwd.payload = CacheTransferRespPayload{true, entry};
    forward_to_gnode(s, me.ip, fwd);
}

std::size_t local_snsd_total_for_key(const NodeState& node, const PubKey& pk) {
    std::size_t total = 0;
    for (const auto& [hash, entry] : node.registry.entries) {
        if (!entry.queue.empty() && entry.queue.front().pubkey == pk)
            total += entry.snsd.size();
    }
    return total;
}

std::optional<ResolvedCacheEntry> cache_lookup(NodeState& node, Ip hname_hash, Secs now) {
    auto it = node.resolved_cache.find(hname_hash.value);
    if (it == node.resolved_cache.end())
        return std::nullopt;
    if (now >= it->second.expires_at) {
        node.resolved_cache.erase(it);
        return std::nullopt;
    }
    return it->second;
}

void store_cache(NodeState& node, Ip hname_hash, Ip ip, Secs registered_or_updated_at) {
    node.resolved_cache[hname_hash.value] = ResolvedCacheEntry{
        hname_hash, ip, registered_or_updated_at,
        registered_or_updated_at + kHibernationSecs};
}

std::string render_records(const std::vector<ResolvedRecord>& records) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (i)
            os << ',';
        os << target_to_string(records[i].target) << '/' << unsigned(records[i].priority)
           << '/' << unsigned(records[i].weight);
    }
    os << ']';
    return os.str();
}

OpOutcome& outcome_of(SimState& s, std::uint64_t op_id) {
    return s.outcomes.at(op_id);
}

void log_outcome(SimState& s, const OpOutcome& o, const std::string& detail) {
    std::string verdict = to_string(o.verdict);
    if (o.verdict == Verdict::Ok) {
        std::ostringstream os;
        os << "ok";
        if (o.position)
            os << ":pos=" << *o.position;
        if (o.resolved_ip)
            os << ":ip=" << to_string(*o.resolved_ip);
        if (o.service_query || !o.records.empty() || o.chosen) {
            os << ":records=" << render_records(o.records);
            os << " chosen=" << (o.chosen ? *o.chosen : "none");
            os << " final=" << (o.final_ip ? to_string(*o.final_ip) : "none");
        }
        if (o.verb == "reverse") {
            os << ":[";
            for (std::size_t i = 0; i < o.hostnames.size(); ++i)
                os << (i ? "," : "") << o.hostnames[i];
            os << ']';
        }
        if (o.from_cache)
            os << " (cache)";
        verdict = os.str();
    }
    log_line(s, o.verb, o.actor, detail, verdict);
}

std::uint64_t new_op(SimState& s, const std::string& verb, Ip actor) {
    std::uint64_t id = s.next_op_id++;
    OpOutcome o;
    o.verb = verb;
    o.actor = actor;
    s.outcomes.emplace(id, std::move(o));
    return id;
}

void complete_op(SimState& s, std::uint64_t op_id, Verdict v, const std::string& detail) {
    OpOutcome& o = outcome_of(s, op_id);
    if (o.done)
        return;
    o.done = true;
    o.verdict = v;
    o.completed_at = s.now;
    if (v != Verdict::Ok)
        ++s.rejections;
    log_outcome(s, o, detail);
}

std::string resolve_detail(const std::string& hostname, std::uint16_t service) {
    return hostname + " svc=" + std::to_string(service);
}

// A response consumes its continuation only when kind, payload variant and
// pending variant line up; anything else is treated as junk and dropped.
bool response_matches(const Message& msg, const Pending& pend) {
    switch (msg.kind) {
    case MsgKind::RegisterResp:
        return std::holds_alternative<RegisterRespPayload>(msg.payload) &&
               std::holds_alternative<PendRegister>(pend);
    case MsgKind::UpdateResp:
        return std::holds_alternative<UpdateRespPayload>(msg.payload) &&
               std::holds_alternative<PendUpdate>(pend);
    case MsgKind::CounterCheckResp:
        return std::holds_alternative<CounterCheckRespPayload>(msg.payload) &&
               std::holds_alternative<PendSrvCounter>(pend);
    case MsgKind::ResolveResp:
        return std::holds_alternative<ResolveRespPayload>(msg.payload) &&
               std::holds_alternative<PendResolve>(pend);
    case MsgKind::DelegatedResolveResp:
        return std::holds_alternative<ResolveRespPayload>(msg.payload) &&
               std::holds_alternative<PendDelegated>(pend);
    case MsgKind::ReverseResp:
        return std::holds_alternative<ReverseRespPayload>(msg.payload) &&
               std::holds_alternative<PendReverse>(pend);
    case MsgKind::CacheTransferResp:
        return std::holds_alternative<CacheTransferRespPayload>(msg.payload) &&
               std::holds_alternative<PendSrvTransfer>(pend);
    case MsgKind::DoubleCheckResp:
        return std::holds_alternative<DoubleCheckRespPayload>(msg.payload) &&
               std::holds_alternative<PendSrvDoubleCheck>(pend);
    case MsgKind::SnsdResp:
        return std::holds_alternative<SnsdRespPayload>(msg.payload) &&
               (std::holds_alternative<PendSnsdRegister>(pend) ||
                std::holds_alternative<PendSnsdDelete>(pend));
    case MsgKind::ChallengeResp:
        return std::holds_alternative<ChallengeRespPayload>(msg.payload) &&
               std::holds_alternative<PendChallenge>(pend);
    default:
        return false;
    }
}

// --- registration flow (serving side) ---------------------------------------

void counter_phase(SimState& s, NodeState& me, const Delivery& original) {
    const Message& msg = original.msg;
    CounterCheckPayload check;
    check.subject = *msg.pubkey;
    if (msg.kind == MsgKind::RegisterReq) {
        const auto& pay = std::get<RegisterPayload>(msg.payload);
        check.mode = CounterMode::Register;
        check.hname_hash = pay.hname_hash;
        check.registrant = pay.registrant;
    } else {
        const auto& pay = std::get<UpdatePayload>(msg.payload);
        check.mode = CounterMode::Update;
        check.hname_hash = pay.hname_hash;
        check.registrant = msg.sender;
    }
    GnodeId counter_gnode = rounded_hash_gnode(gnode_of(counter_ip(check.subject)),
                                               live_gnodes(s));
    Ip target = random_member_of_gnode(s, counter_gnode);
    send_request(s, me.ip, target, MsgKind::CounterCheckReq, std::move(check),
                 PendSrvCounter{original}, sub_timeout(s));
}

// Counter verdict arrived (or timed out): commit or reject the paused write.
// Returns the verdict sent back to the requester.
Verdict finish_register_flow(SimState& s, NodeState& me, const Delivery& original,
                             Verdict counter_verdict) {
    const Message& msg = original.msg;
    if (msg.kind == MsgKind::RegisterReq) {
        const auto& pay = std::get<RegisterPayload>(msg.payload);
        if (counter_verdict != Verdict::Ok) {
            reply_to(s, original, MsgKind::RegisterResp,
                     RegisterRespPayload{counter_verdict, 0});
            return counter_verdict;
        }
        auto pos = apply_registration(me.registry, pay.hname_hash, pay.registrant,
                                      *msg.pubkey, s.now);
        if (!pos) {
            reply_to(s, original, MsgKind::RegisterResp,
                     RegisterRespPayload{Verdict::QueueFull, 0});
            return Verdict::QueueFull;
        }
        forward_to_gnode(s, me.ip, msg);
        reply_to(s, original, MsgKind::RegisterResp,
                 RegisterRespPayload{Verdict::Ok, std::uint8_t(*pos)});
        return Verdict::Ok;
    }
    // UpdateReq
    const auto& pay = std::get<UpdatePayload>(msg.payload);
    if (counter_verdict != Verdict::Ok) {
        reply_to(s, original, MsgKind::UpdateResp, UpdateRespPayload{counter_verdict});
        return counter_verdict;
    }
    UpdateResult r = apply_update(me.registry, pay.hname_hash, *msg.pubkey, pay.new_ip,
                                  pay.update_id, s.now);
    Verdict v = Verdict::Ok;
    switch (r) {
    case UpdateResult::Ok: v = Verdict::Ok; break;
    case UpdateResult::UnknownHostname: v = Verdict::UnknownHostname; break;
    case UpdateResult::UnknownKey: v = Verdict::UnknownKey; break;
    case UpdateResult::StaleId: v = Verdict::StaleId; break;
    case UpdateResult::GapId: v = Verdict::GapId; break;
    }
    if (v == Verdict::Ok)
        forward_to_gnode(s, me.ip, msg);
    reply_to(s, original, MsgKind::UpdateResp, UpdateRespPayload{v});
    return v;
}

Verdict serve_register(SimState& s, NodeState& me, const Delivery& d) {
    const auto& pay = std::get<RegisterPayload>(d.msg.payload);
    if (current_rgh(s, pay.hname_hash) != gnode_of(me.ip)) {
        reply_to(s, d, MsgKind::RegisterResp, RegisterRespPayload{Verdict::WrongGnode, 0});
        return Verdict::WrongGnode;
    }
    if (!signature_ok(d.msg)) {
        reply_to(s, d, MsgKind::RegisterResp, RegisterRespPayload{Verdict::BadSignature, 0});
        return Verdict::BadSignature;
    }
    // Names we already replicate are guarded by the queue rules themselves;
    // unknown names get the old-gnode double check against theft.
    if (!me.registry.entries.count(pay.hname_hash.value)) {
        auto prev = previous_rounded_gnode(s, pay.hname_hash, gnode_of(me.ip));
        if (prev) {
            Ip target = random_member_of_gnode(s, *prev);
            send_request(s, me.ip, target, MsgKind::DoubleCheckReq,
                         DoubleCheckPayload{pay.hname_hash}, PendSrvDoubleCheck{d},
                         sub_timeout(s));
            return Verdict::Ok;
        }
    }
    counter_phase(s, me, d);
    return Verdict::Ok;
}

// --- serving side, requests that operate on an existing entry ---------------

Verdict answer_resolve(SimState& s, NodeState& me, const Delivery& d) {
    const auto& pay = std::get<ResolvePayload>(d.msg.payload);
    auto it = me.registry.entries.find(pay.hname_hash.value);
    if (it == me.registry.entries.end() || it->second.queue.empty()) {
        reply_to(s, d, MsgKind::ResolveResp, ResolveRespPayload{Verdict::NotFound, Ip{}, 0, {}});
        return Verdict::NotFound;
    }
    const AndnaEntry& entry = it->second;
    ResolveRespPayload resp;
    resp.verdict = Verdict::Ok;
    resp.zero_ip = entry.queue.front().registrant_ip;
    resp.registered_or_updated_at = entry.queue.front().last_update_at;
    resp.records = resolve_service(entry, pay.service);
    reply_to(s, d, MsgKind::ResolveResp, std::move(resp));
    return Verdict::Ok;
}

SnsdRegResult apply_snsd_register(NodeState& me, AndnaEntry& entry,
                                  const SnsdRegisterPayload& pay, const PubKey& pk) {
    // "name:name:0:prio:weight" re-weights the implicit zero record.
    if (pay.record.service == 0 && !target_is_ip(pay.record.target) &&
        hash_hostname(std::get<std::string>(pay.record.target)) == entry.hname_hash) {
        if (entry.queue.empty() || entry.queue.front().pubkey != pk) {
            for (std::size_t i = 1; i < entry.queue.size(); ++i) {
                if (entry.queue[i].pubkey == pk)
                    return SnsdRegResult::QueuedNotActive;
            }
            return SnsdRegResult::NotOwner;
        }
        if (pay.record.weight > kMaxSnsdWeight)
            return SnsdRegResult::InvalidRecord;
        entry.zero_policy = ZeroRecordPolicy{pay.record.priority, pay.record.weight};
        return SnsdRegResult::Ok;
    }
    return register_snsd(entry, pay.record, pk, true,
                         local_snsd_total_for_key(me, pk));
}

Verdict serve_snsd_register(SimState& s, NodeState& me, const Delivery& d) {
    const auto& pay = std::get<SnsdRegisterPayload>(d.msg.payload);
    auto it = me.registry.entries.find(pay.hname_hash.value);
    if (it == me.registry.entries.end()) {
        reply_to(s, d, MsgKind::SnsdResp, SnsdRespPayload{Verdict::UnknownHostname});
        return Verdict::UnknownHostname;
    }
    if (!signature_ok(d.msg)) {
        reply_to(s, d, MsgKind::SnsdResp, SnsdRespPayload{Verdict::BadSignature});
        return Verdict::BadSignature;
    }
    SnsdRegResult r = apply_snsd_register(me, it->second, pay, *d.msg.pubkey);
    Verdict v = Verdict::Ok;
    switch (r) {
    case SnsdRegResult::Ok: v = Verdict::Ok; break;
    case SnsdRegResult::NotOwner: v = Verdict::NotOwner; break;
    case SnsdRegResult::QueuedNotActive: v = Verdict::QueuedNotActive; break;
    case SnsdRegResult::PerNameLimit: v = Verdict::PerNameLimit; break;
    case SnsdRegResult::GlobalLimit: v = Verdict::GlobalLimit; break;
    case SnsdRegResult::BadSignature: v = Verdict::BadSignature; break;
    case SnsdRegResult::InvalidRecord: v = Verdict::InvalidRecord; break;
    }
    if (v == Verdict::Ok)
        forward_to_gnode(s, me.ip, d.msg);
    reply_to(s, d, MsgKind::SnsdResp, SnsdRespPayload{v});
    return v;
}

Verdict serve_snsd_delete(SimState& s, NodeState& me, const Delivery& d) {
    const auto& pay = std::get<SnsdDeletePayload>(d.msg.payload);
    auto it = me.registry.entries.find(pay.hname_hash.value);
    if (it == me.registry.entries.end()) {
        reply_to(s, d, MsgKind::SnsdResp, SnsdRespPayload{Verdict::UnknownHostname});
        return Verdict::UnknownHostname;
    }
    if (!signature_ok(d.msg)) {
        reply_to(s, d, MsgKind::SnsdResp, SnsdRespPayload{Verdict::BadSignature});
        return Verdict::BadSignature;
    }
    AndnaEntry& entry = it->second;
    if (entry.queue.empty() || entry.queue.front().pubkey != *d.msg.pubkey) {
        reply_to(s, d, MsgKind::SnsdResp, SnsdRespPayload{Verdict::NotOwner});
        return Verdict::NotOwner;
    }
    auto match = std::find_if(entry.snsd.begin(), entry.snsd.end(), [&](const SnsdRecord& r) {
        return r.service == pay.service && r.target == pay.target;
    });
    if (match == entry.snsd.end()) {
        reply_to(s, d, MsgKind::SnsdResp, SnsdRespPayload{Verdict::NotFound});
        return Verdict::NotFound;
    }
    entry.snsd.erase(match);
    forward_to_gnode(s, me.ip, d.msg);
    reply_to(s, d, MsgKind::SnsdResp, SnsdRespPayload{Verdict::Ok});
    return Verdict::Ok;
}

// Entry presence is settled (a transfer ran or none was possible); answer.
Verdict continue_with_entry(SimState& s, NodeState& me, const Delivery& d) {
    switch (d.msg.kind) {
    case MsgKind::ResolveReq:
        return answer_resolve(s, me, d);
    case MsgKind::UpdateReq: {
        const auto& pay = std::get<UpdatePayload>(d.msg.payload);
        if (!me.registry.entries.count(pay.hname_hash.value)) {
            reply_to(s, d, MsgKind::UpdateResp, UpdateRespPayload{Verdict::UnknownHostname});
            return Verdict::UnknownHostname;
        }
        counter_phase(s, me, d);
        return Verdict::Ok;
    }
    case MsgKind::SnsdRegisterReq:
        return serve_snsd_register(s, me, d);
    case MsgKind::SnsdDeleteReq:
        return serve_snsd_delete(s, me, d);
    default:
        return Verdict::Dropped;
    }
}

Ip payload_hash(const Message& msg) {
    switch (msg.kind) {
    case MsgKind::ResolveReq: return std::get<ResolvePayload>(msg.payload).hname_hash;
    case MsgKind::UpdateReq: return std::get<UpdatePayload>(msg.payload).hname_hash;
    case MsgKind::SnsdRegisterReq:
        return std::get<SnsdRegisterPayload>(msg.payload).hname_hash;
    case MsgKind::SnsdDeleteReq: return std::get<SnsdDeletePayload>(msg.payload).hname_hash;
    default: return Ip{};
    }
}

// Entry-backed request: when the name is missing locally, first try the
// passive transfer from the previous rounded gnode, then continue.
Verdict serve_entry_request(SimState& s, NodeState& me, const Delivery& d) {
    Ip hash = payload_hash(d.msg);
    if (!me.registry.entries.count(hash.value)) {
        auto prev = previous_rounded_gnode(s, hash, gnode_of(me.ip));
        if (prev) {
            Ip target = random_member_of_gnode(s, *prev);
            send_request(s, me.ip, target, MsgKind::CacheTransferReq,
                         CacheTransferPayload{hash}, PendSrvTransfer{d}, sub_timeout(s));
            return Verdict::Ok;
        }
    }
    return continue_with_entry(s, me, d);
}

// --- forwarded replication writes -------------------------------------------

Verdict apply_forwarded(SimState&, NodeState& me, const Delivery& d) {
    const Message& msg = d.msg;
    switch (msg.kind) {
    case MsgKind::RegisterReq: {
        if (!signature_ok(msg))
            return Verdict::BadSignature;
        const auto& pay = std::get<RegisterPayload>(msg.payload);
        auto pos = apply_registration(me.registry, pay.hname_hash, pay.registrant,
                                      *msg.pubkey, d.applied_at);
        return pos ? Verdict::Ok : Verdict::QueueFull;
    }
    case MsgKind::UpdateReq: {
        if (!signature_ok(msg))
            return Verdict::BadSignature;
        const auto& pay = std::get<UpdatePayload>(msg.payload);
        UpdateResult r = apply_update(me.registry, pay.hname_hash, *msg.pubkey, pay.new_ip,
                                      pay.update_id, d.applied_at);
        return r == UpdateResult::Ok ? Verdict::Ok : Verdict::StaleId;
    }
    case MsgKind::CounterCheckReq: {
        const auto& pay = std::get<CounterCheckPayload>(msg.payload);
        if (pay.mode == CounterMode::Register) {
            check_request(me.counter, pay.subject, pay.hname_hash, d.applied_at);
        } else {
            update_check(me.counter, pay.subject, pay.hname_hash, d.applied_at);
        }
        return Verdict::Ok;
    }
    case MsgKind::SnsdRegisterReq: {
        if (!signature_ok(msg))
            return Verdict::BadSignature;
        const auto& pay = std::get<SnsdRegisterPayload>(msg.payload);
        auto it = me.registry.entries.find(pay.hname_hash.value);
        if (it == me.registry.entries.end())
            return Verdict::UnknownHostname;
        apply_snsd_register(me, it->second, pay, *msg.pubkey);
        return Verdict::Ok;
    }
    case MsgKind::SnsdDeleteReq: {
        if (!signature_ok(msg))
            return Verdict::BadSignature;
        const auto& pay = std::get<SnsdDeletePayload>(msg.payload);
        auto it = me.registry.entries.find(pay.hname_hash.value);
        if (it == me.registry.entries.end())
            return Verdict::UnknownHostname;
        AndnaEntry& entry = it->second;
        auto match =
            std::find_if(entry.snsd.begin(), entry.snsd.end(), [&](const SnsdRecord& r) {
                return r.service == pay.service && r.target == pay.target;
            });
        if (match == entry.snsd.end())
            return Verdict::NotFound;
        entry.snsd.erase(match);
        return Verdict::Ok;
    }
    case MsgKind::CacheTransferResp: {
        const auto& pay = std::get<CacheTransferRespPayload>(msg.payload);
        if (pay.found)
            install_entry(me, pay.entry);
        return Verdict::Ok;
    }
    default:
        return Verdict::Dropped;
    }
}

// --- client-side completions -------------------------------------------------

void challenge_failed(SimState& s, NodeState& me, const std::string& hostname,
                      const SnsdRecord& record);

void begin_challenge_probe(SimState& s, NodeState& me, const std::string& hostname,
                           const SnsdRecord& record, Ip target_ip) {
    Bytes nonce(16);
    for (auto& b : nonce)
        b = std::uint8_t(rand_below(s, 256));
    send_request(s, me.ip, target_ip, MsgKind::ChallengeReq, ChallengePayload{nonce},
                 PendChallenge{hostname, record, nonce}, sub_timeout(s));
}

// Sends the signed delete for a record that failed its challenge.
void challenge_failed(SimState& s, NodeState& me, const std::string& hostname,
                      const SnsdRecord& record) {
    log_line(s, "challenge", me.ip,
             hostname + " target=" + target_to_string(record.target), "fail");
    me.trusted.erase(std::remove_if(me.trusted.begin(), me.trusted.end(),
                                    [&](const TrustedRecord& t) {
                                        return t.hostname == hostname && t.record == record;
                                    }),
                     me.trusted.end());
    Ip hash = hash_hostname(hostname);
    Ip target = random_member_of_gnode(s, current_rgh(s, hash));
    Message msg;
    msg.kind = MsgKind::SnsdDeleteReq;
    msg.sender = me.ip;
    msg.req_id = s.next_req_id++;
    msg.payload = SnsdDeletePayload{hash, record.service, record.target};
    sign_message(msg, me.keys);
    me.pending.emplace(msg.req_id, PendSnsdDelete{std::nullopt, hostname});
    schedule_timeout(s, me.ip, msg.req_id, client_timeout(s));
    send_message(s, Delivery{me.ip, target, false, 0, msg});
}

void finish_resolve_chain(SimState& s, std::uint64_t op_id, std::optional<Ip> final_ip,
                          const std::string& orig_hostname, std::uint16_t orig_service) {
    OpOutcome& o = outcome_of(s, op_id);
    o.final_ip = final_ip;
    complete_op(s, op_id, Verdict::Ok, resolve_detail(orig_hostname, orig_service));
}

// Handles the selected record of a non-zero-service resolution: ip targets
// finish immediately, hostname targets get exactly one zero-service hop.
void continue_after_selection(SimState& s, NodeState& me, std::uint64_t op_id,
                              const std::string& hostname, std::uint16_t service) {
    OpOutcome& o = outcome_of(s, op_id);
    if (!o.chosen) {
        complete_op(s, op_id, Verdict::Ok, resolve_detail(hostname, service));
        return;
    }
    // find the chosen record again (string form was stored)
    std::optional<ResolvedRecord> chosen;
    for (const ResolvedRecord& r : o.records) {
        if (target_to_string(r.target) == *o.chosen) {
            chosen = r;
            break;
        }
    }
    if (!chosen) {
        complete_op(s, op_id, Verdict::Ok, resolve_detail(hostname, service));
        return;
    }
    if (target_is_ip(chosen->target)) {
        finish_resolve_chain(s, op_id, std::get<Ip>(chosen->target), hostname, service);
        return;
    }
    const std::string& next = std::get<std::string>(chosen->target);
    Ip next_hash;
    try {
        next_hash = hash_hostname(next);
    } catch (const LengthError&) {
        finish_resolve_chain(s, op_id, std::nullopt, hostname, service);
        return;
    }
    if (auto cached = cache_lookup(me, next_hash, s.now)) {
        finish_resolve_chain(s, op_id, cached->ip, hostname, service);
        return;
    }
    Ip target = random_member_of_gnode(s, current_rgh(s, next_hash));
    PendResolve pend;
    pend.purpose = PendResolve::Purpose::ChainHop;
    pend.op_id = op_id;
    pend.hostname = next;
    pend.hname_hash = next_hash;
    pend.service = 0;
    pend.orig_hostname = hostname;
    pend.orig_service = service;
    send_request(s, me.ip, target, MsgKind::ResolveReq, ResolvePayload{next_hash, 0},
                 std::move(pend), client_timeout(s));
}

void complete_client_resolve(SimState& s, NodeState& me, const PendResolve& pend,
                             const ResolveRespPayload& resp) {
    std::uint64_t op_id = pend.op_id;
    if (resp.verdict != Verdict::Ok) {
        complete_op(s, op_id, resp.verdict, resolve_detail(pend.hostname, pend.service));
        return;
    }
    store_cache(me, pend.hname_hash, resp.zero_ip, resp.registered_or_updated_at);
    OpOutcome& o = outcome_of(s, op_id);
    if (pend.service == 0) {
        o.resolved_ip = resp.zero_ip;
        complete_op(s, op_id, Verdict::Ok, resolve_detail(pend.hostname, 0));
        return;
    }
    o.service_query = true;
    o.records = resp.records;
    auto chosen = select_record(
        resp.records,
        [&s](const SnsdTarget& t) { return !target_is_ip(t) || alive(s, std::get<Ip>(t)); },
        [&s](std::uint64_t n) { return rand_below(s, n); });
    if (chosen)
        o.chosen = target_to_string(chosen->target);
    continue_after_selection(s, me, op_id, pend.hostname, pend.service);
}

void handle_resolve_resp(SimState& s, NodeState& me, const PendResolve& pend,
                         const ResolveRespPayload& resp) {
    switch (pend.purpose) {
    case PendResolve::Purpose::ClientOp:
        complete_client_resolve(s, me, pend, resp);
        return;
    case PendResolve::Purpose::ChainHop:
        if (resp.verdict == Verdict::Ok) {
            store_cache(me, pend.hname_hash, resp.zero_ip, resp.registered_or_updated_at);
            finish_resolve_chain(s, pend.op_id, resp.zero_ip, pend.orig_hostname,
                                 pend.orig_service);
        } else {
            finish_resolve_chain(s, pend.op_id, std::nullopt, pend.orig_hostname,
                                 pend.orig_service);
        }
        return;
    case PendResolve::Purpose::Delegated: {
        if (resp.verdict == Verdict::Ok)
            store_cache(me, pend.hname_hash, resp.zero_ip, resp.registered_or_updated_at);
        Message out;
        out.kind = MsgKind::DelegatedResolveResp;
        out.sender = me.ip;
        out.req_id = pend.delegated_req;
        out.payload = resp;
        send_message(s, Delivery{me.ip, pend.delegated_client, false, 0, std::move(out)});
        return;
    }
    case PendResolve::Purpose::ChallengeTarget:
        if (resp.verdict == Verdict::Ok) {
            store_cache(me, pend.hname_hash, resp.zero_ip, resp.registered_or_updated_at);
            begin_challenge_probe(s, me, pend.challenge_hostname, pend.challenge_record,
                                  resp.zero_ip);
        } else {
            challenge_failed(s, me, pend.challenge_hostname, pend.challenge_record);
        }
        return;
    }
}

// --- timeout fallbacks -------------------------------------------------------

struct TimeoutVisitor {
    SimState& s;
    NodeState& me;

    void operator()(const PendRegister& p) {
        complete_op(s, p.op_id, Verdict::Timeout, p.hostname);
    }
    void operator()(const PendUpdate& p) {
        complete_op(s, p.op_id, Verdict::Timeout, p.hostname);
    }
    void operator()(const PendResolve& p) {
        switch (p.purpose) {
        case PendResolve::Purpose::ClientOp:
            complete_op(s, p.op_id, Verdict::Timeout, resolve_detail(p.hostname, p.service));
            return;
        case PendResolve::Purpose::ChainHop:
            finish_resolve_chain(s, p.op_id, std::nullopt, p.orig_hostname, p.orig_service);
            return;
        case PendResolve::Purpose::Delegated: {
            Message out;
            out.kind = MsgKind::DelegatedResolveResp;
            out.sender = me.ip;
            out.req_id = p.delegated_req;
            out.payload = ResolveRespPayload{Verdict::Timeout, Ip{}, 0, {}};
            send_message(s, Delivery{me.ip, p.delegated_client, false, 0, std::move(out)});
            return;
        }
        case PendResolve::Purpose::ChallengeTarget:
            challenge_failed(s, me, p.challenge_hostname, p.challenge_record);
            return;
        }
    }
    void operator()(const PendDelegated& p) {
        complete_op(s, p.op_id, Verdict::Timeout, resolve_detail(p.hostname, 0));
    }
    void operator()(const PendReverse& p) {
        complete_op(s, p.op_id, Verdict::Unreachable, to_string(p.target));
    }
    void operator()(const PendSnsdRegister& p) {
        complete_op(s, p.op_id, Verdict::Timeout, p.hostname);
    }
    void operator()(const PendSnsdDelete& p) {
        if (p.op_id)
            complete_op(s, *p.op_id, Verdict::Timeout, p.hostname);
        else
            log_line(s, "snsd-delete", me.ip, p.hostname, "Timeout");
    }
    void operator()(const PendChallenge& p) {
        challenge_failed(s, me, p.hostname, p.record);
    }
    void operator()(const PendSrvDoubleCheck& p) {
        // Old gnode unreachable: availability wins, proceed to the counter.
        log_line(s, "double-check", me.ip,
                 "hash=" + hex32(payload_hash(p.original.msg).value), "timeout:clear");
        counter_phase(s, me, p.original);
    }
    void operator()(const PendSrvCounter& p) {
        if (p.original.msg.kind == MsgKind::RegisterReq)
            reply_to(s, p.original, MsgKind::RegisterResp,
                     RegisterRespPayload{Verdict::Timeout, 0});
        else
            reply_to(s, p.original, MsgKind::UpdateResp, UpdateRespPayload{Verdict::Timeout});
    }
    void operator()(const PendSrvTransfer& p) { continue_with_entry(s, me, p.original); }
};

}  // namespace

// --- public entry points -----------------------------------------------------

void handle_timeout(SimState& s, Ip owner, std::uint64_t req_id) {
    if (!alive(s, owner))
        return;
    NodeState& me = node_at(s, owner);
    auto it = me.pending.find(req_id);
    if (it == me.pending.end())
        return;  // already answered
    Pending pend = std::move(it->second);
    me.pending.erase(it);
    std::visit(TimeoutVisitor{s, me}, pend);
}

Verdict handle_delivery(SimState& s, const Delivery& d) {
    NodeState& me = node_at(s, d.to);
    if (d.forwarded)
        return apply_forwarded(s, me, d);

    switch (d.msg.kind) {
    case MsgKind::RegisterReq:
        return serve_register(s, me, d);

    case MsgKind::UpdateReq:
        if (!signature_ok(d.msg)) {
            reply_to(s, d, MsgKind::UpdateResp, UpdateRespPayload{Verdict::BadSignature});
            return Verdict::BadSignature;
        }
        return serve_entry_request(s, me, d);

    case MsgKind::ResolveReq:
        return serve_entry_request(s, me, d);

    case MsgKind::SnsdRegisterReq:
    case MsgKind::SnsdDeleteReq:
        return serve_entry_request(s, me, d);

    case MsgKind::CounterCheckReq: {
        const auto& pay = std::get<CounterCheckPayload>(d.msg.payload);
        Verdict v = Verdict::Ok;
        if (pay.mode == CounterMode::Register) {
            v = check_request(me.counter, pay.subject, pay.hname_hash, s.now) ==
                        CheckVerdict::Ok
                    ? Verdict::Ok
                    : Verdict::OverQuota;
        } else {
            v = update_check(me.counter, pay.subject, pay.hname_hash, s.now) ==
                        UpdateCheckVerdict::Ok
                    ? Verdict::Ok
                    : Verdict::CounterInactive;
        }
        if (v == Verdict::Ok)
            forward_to_gnode(s, me.ip, d.msg);
        reply_to(s, d, MsgKind::CounterCheckResp, CounterCheckRespPayload{v, pay.mode});
        return v;
    }

    case MsgKind::DoubleCheckReq: {
        const auto& pay = std::get<DoubleCheckPayload>(d.msg.payload);
        DoubleCheckRespPayload resp;
        auto it = me.registry.entries.find(pay.hname_hash.value);
        if (it != me.registry.entries.end() && !it->second.queue.empty()) {
            resp.found = true;
            resp.entry = it->second;
        }
        reply_to(s, d, MsgKind::DoubleCheckResp, std::move(resp));
        return Verdict::Ok;
    }

    case MsgKind::CacheTransferReq: {
        const auto& pay = std::get<CacheTransferPayload>(d.msg.payload);
        CacheTransferRespPayload resp;
        auto it = me.registry.entries.find(pay.hname_hash.value);
        if (it != me.registry.entries.end() && !it->second.queue.empty()) {
            resp.found = true;
            resp.entry = it->second;
        }
        reply_to(s, d, MsgKind::CacheTransferResp, std::move(resp));
        return Verdict::Ok;
    }

    case MsgKind::DelegatedResolveReq: {
        const auto& pay = std::get<DelegatedResolvePayload>(d.msg.payload);
        if (auto cached = cache_lookup(me, pay.hname_hash, s.now)) {
            reply_to(s, d, MsgKind::DelegatedResolveResp,
                     ResolveRespPayload{Verdict::Ok, cached->ip,
                                        cached->registered_or_updated_at, {}});
            return Verdict::Ok;
        }
        // Cache miss: resolve in the standard way on the peer's behalf.
        PendResolve pend;
        pend.purpose = PendResolve::Purpose::Delegated;
        pend.hname_hash = pay.hname_hash;
        pend.delegated_client = d.from;
        pend.delegated_req = d.msg.req_id;
        Ip target = random_member_of_gnode(s, current_rgh(s, pay.hname_hash));
        send_request(s, me.ip, target, MsgKind::ResolveReq,
                     ResolvePayload{pay.hname_hash, 0}, std::move(pend), sub_timeout(s));
        return Verdict::Ok;
    }

    case MsgKind::ReverseReq: {
        ReverseRespPayload resp;
        resp.hostnames.assign(me.local_hostnames.begin(), me.local_hostnames.end());
        reply_to(s, d, MsgKind::ReverseResp, std::move(resp));
        return Verdict::Ok;
    }

    case MsgKind::ChallengeReq: {
        const auto& pay = std::get<ChallengePayload>(d.msg.payload);
        Message resp;
        resp.kind = MsgKind::ChallengeResp;
        resp.sender = me.ip;
        resp.req_id = d.msg.req_id;
        resp.payload = ChallengeRespPayload{pay.nonce};
        sign_message(resp, me.keys);
        send_message(s, Delivery{me.ip, d.from, false, 0, std::move(resp)});
        return Verdict::Ok;
    }

    // ---- responses: look up the pending continuation ----
    case MsgKind::RegisterResp:
    case MsgKind::UpdateResp:
    case MsgKind::CounterCheckResp:
    case MsgKind::ResolveResp:
    case MsgKind::DelegatedResolveResp:
    case MsgKind::ReverseResp:
    case MsgKind::CacheTransferResp:
    case MsgKind::DoubleCheckResp:
    case MsgKind::SnsdResp:
    case MsgKind::ChallengeResp: {
        auto it = me.pending.find(d.msg.req_id);
        if (it == me.pending.end())
            return Verdict::Dropped;  // late reply, already timed out
        if (!response_matches(d.msg, it->second))
            return Verdict::Dropped;  // junk; the continuation stays armed
        Pending pend = std::move(it->second);
        me.pending.erase(it);

        switch (d.msg.kind) {
        case MsgKind::RegisterResp: {
            const auto& p = std::get<PendRegister>(pend);
            const auto& resp = std::get<RegisterRespPayload>(d.msg.payload);
            OpOutcome& o = outcome_of(s, p.op_id);
            if (resp.verdict == Verdict::Ok) {
                o.position = resp.position;
                me.local_hostnames.insert(p.hostname);
                me.update_counts.emplace(p.hostname, 0);
            }
            complete_op(s, p.op_id, resp.verdict, p.hostname);
            return resp.verdict;
        }
        case MsgKind::UpdateResp: {
            const auto& p = std::get<PendUpdate>(pend);
            const auto& resp = std::get<UpdateRespPayload>(d.msg.payload);
            if (resp.verdict == Verdict::Ok)
                me.update_counts[p.hostname] = p.update_id;
            complete_op(s, p.op_id, resp.verdict,
                        p.hostname + " id=" + std::to_string(p.update_id));
            return resp.verdict;
        }
        case MsgKind::CounterCheckResp: {
            const auto& p = std::get<PendSrvCounter>(pend);
            const auto& resp = std::get<CounterCheckRespPayload>(d.msg.payload);
            return finish_register_flow(s, me, p.original, resp.verdict);
        }
        case MsgKind::ResolveResp: {
            const auto& p = std::get<PendResolve>(pend);
            handle_resolve_resp(s, me, p, std::get<ResolveRespPayload>(d.msg.payload));
            return std::get<ResolveRespPayload>(d.msg.payload).verdict;
        }
        case MsgKind::DelegatedResolveResp: {
            const auto& p = std::get<PendDelegated>(pend);
            const auto& resp = std::get<ResolveRespPayload>(d.msg.payload);
            OpOutcome& o = outcome_of(s, p.op_id);
            if (resp.verdict == Verdict::Ok) {
                o.resolved_ip = resp.zero_ip;
                store_cache(me, hash_hostname(p.hostname), resp.zero_ip,
                            resp.registered_or_updated_at);
            }
            complete_op(s, p.op_id, resp.verdict, resolve_detail(p.hostname, 0));
            return resp.verdict;
        }
        case MsgKind::ReverseResp: {
            const auto& p = std::get<PendReverse>(pend);
            const auto& resp = std::get<ReverseRespPayload>(d.msg.payload);
            OpOutcome& o = outcome_of(s, p.op_id);
            o.hostnames = resp.hostnames;
            complete_op(s, p.op_id, Verdict::Ok, to_string(p.target));
            return Verdict::Ok;
        }
        case MsgKind::CacheTransferResp: {
            const auto& p = std::get<PendSrvTransfer>(pend);
            const auto& resp = std::get<CacheTransferRespPayload>(d.msg.payload);
            if (resp.found) {
                install_and_forward(s, me, resp.entry);
                log_line(s, "transfer", me.ip,
                         "hash=" + hex32(resp.entry.hname_hash.value), "installed");
            }
            return continue_with_entry(s, me, p.original);
        }
        case MsgKind::DoubleCheckResp: {
            const auto& p = std::get<PendSrvDoubleCheck>(pend);
            const auto& resp = std::get<DoubleCheckRespPayload>(d.msg.payload);
            const auto& pay = std::get<RegisterPayload>(p.original.msg.payload);
            if (resp.found && !resp.entry.queue.empty() &&
                resp.entry.queue.front().pubkey != *p.original.msg.pubkey) {
                install_and_forward(s, me, resp.entry);
                log_line(s, "double-check", me.ip, "hash=" + hex32(pay.hname_hash.value),
                         "blocked");
                reply_to(s, p.original, MsgKind::RegisterResp,
                         RegisterRespPayload{Verdict::StolenNameBlocked, 0});
                return Verdict::StolenNameBlocked;
            }
            counter_phase(s, me, p.original);
            return Verdict::Ok;
        }
        case MsgKind::SnsdResp: {
            const auto& resp = std::get<SnsdRespPayload>(d.msg.payload);
            if (std::holds_alternative<PendSnsdRegister>(pend)) {
                const auto& p = std::get<PendSnsdRegister>(pend);
                if (resp.verdict == Verdict::Ok && p.record.trusted_pubkey)
                    me.trusted.push_back(TrustedRecord{p.hostname, p.record});
                complete_op(s, p.op_id, resp.verdict,
                            p.hostname + " svc=" + std::to_string(p.record.service) +
                                " target=" + target_to_string(p.record.target));
            } else {
                const auto& p = std::get<PendSnsdDelete>(pend);
                if (p.op_id)
                    complete_op(s, *p.op_id, resp.verdict, p.hostname);
                else
                    log_line(s, "snsd-delete", me.ip, p.hostname, to_string(resp.verdict));
            }
            return resp.verdict;
        }
        case MsgKind::ChallengeResp: {
            const auto& p = std::get<PendChallenge>(pend);
            const auto& resp = std::get<ChallengeRespPayload>(d.msg.payload);
            bool pass = resp.nonce == p.nonce && p.record.trusted_pubkey &&
                        signature_okay_for(*p.record.trusted_pubkey, d.msg);
            if (pass) {
                log_line(s, "challenge", me.ip,
                         p.hostname + " target=" + target_to_string(p.record.target),
                         "pass");
            } else {
                challenge_failed(s, me, p.hostname, p.record);
            }
            return pass ? Verdict::Ok : Verdict::NotFound;
        }
        default:
            return Verdict::Dropped;
        }
    }
    }
    return Verdict::Dropped;
}

// --- client-side operations ----------------------------------------------------

std::uint64_t start_register(SimState& s, Ip node, const std::string& hostname) {
    NodeState& me = node_at(s, node);
    std::uint64_t op = new_op(s, "register", node);
    Ip hash;
    try {
        hash = hash_hostname(hostname);
    } catch (const LengthError&) {
        complete_op(s, op, Verdict::BadName, hostname.substr(0, 32));
        return op;
    }
    Ip target = random_member_of_gnode(s, current_rgh(s, hash));
    send_request(s, node, target, MsgKind::RegisterReq, RegisterPayload{hash, node},
                 PendRegister{op, hostname}, client_timeout(s), &me.keys);
    return op;
}

std::uint64_t start_update(SimState& s, Ip node, const std::string& hostname, Ip new_ip) {
    NodeState& me = node_at(s, node);
    std::uint64_t op = new_op(s, "update", node);
    Ip hash;
    try {
        hash = hash_hostname(hostname);
    } catch (const LengthError&) {
        complete_op(s, op, Verdict::BadName, hostname.substr(0, 32));
        return op;
    }
    std::uint32_t update_id = 1;
    auto it = me.update_counts.find(hostname);
    if (it != me.update_counts.end())
        update_id = it->second + 1;
    Ip target = random_member_of_gnode(s, current_rgh(s, hash));
    send_request(s, node, target, MsgKind::UpdateReq, UpdatePayload{hash, new_ip, update_id},
                 PendUpdate{op, hostname, update_id}, client_timeout(s), &me.keys);
    return op;
}

std::uint64_t start_resolve(SimState& s, Ip node, const std::string& hostname,
                            std::uint16_t service) {
    NodeState& me = node_at(s, node);
    std::uint64_t op = new_op(s, "resolve", node);
    Ip hash;
    try {
        hash = hash_hostname(hostname);
    } catch (const LengthError&) {
        complete_op(s, op, Verdict::BadName, hostname.substr(0, 32));
        return op;
    }
    if (service == 0) {
        if (auto cached = cache_lookup(me, hash, s.now)) {
            OpOutcome& o = outcome_of(s, op);
            o.resolved_ip = cached->ip;
            o.from_cache = true;
            complete_op(s, op, Verdict::Ok, resolve_detail(hostname, 0));
            return op;
        }
    }
    PendResolve pend;
    pend.purpose = PendResolve::Purpose::ClientOp;
    pend.op_id = op;
    pend.hostname = hostname;
    pend.hname_hash = hash;
    pend.service = service;
    Ip target = random_member_of_gnode(s, current_rgh(s, hash));
    send_request(s, node, target, MsgKind::ResolveReq, ResolvePayload{hash, service},
                 std::move(pend), client_timeout(s));
    return op;
}

std::uint64_t start_delegated_resolve(SimState& s, Ip node, const std::string& hostname) {
    node_at(s, node);
    std::uint64_t op = new_op(s, "delegated-resolve", node);
    Ip hash;
    try {
        hash = hash_hostname(hostname);
    } catch (const LengthError&) {
        complete_op(s, op, Verdict::BadName, hostname.substr(0, 32));
        return op;
    }
    std::vector<Ip> peers = members_of_gnode(s, gnode_of(node));
    peers.erase(std::remove(peers.begin(), peers.end(), node), peers.end());
    if (peers.empty()) {
        // Degenerate membership: resolve directly.
        PendResolve pend;
        pend.purpose = PendResolve::Purpose::ClientOp;
        pend.op_id = op;
        pend.hostname = hostname;
        pend.hname_hash = hash;
        pend.service = 0;
        Ip target = random_member_of_gnode(s, current_rgh(s, hash));
        send_request(s, node, target, MsgKind::ResolveReq, ResolvePayload{hash, 0},
                     std::move(pend), client_timeout(s));
        return op;
    }
    Ip peer = peers[rand_below(s, peers.size())];
    send_request(s, node, peer, MsgKind::DelegatedResolveReq, DelegatedResolvePayload{hash},
                 PendDelegated{op, hostname}, client_timeout(s));
    return op;
}

std::uint64_t start_reverse(SimState& s, Ip node, Ip target) {
    node_at(s, node);
    std::uint64_t op = new_op(s, "reverse", node);
    send_request(s, node, target, MsgKind::ReverseReq, ReversePayload{},
                 PendReverse{op, target}, client_timeout(s));
    return op;
}

std::uint64_t start_snsd_register(SimState& s, Ip node, const std::string& hostname,
                                  const SnsdRecord& record) {
    NodeState& me = node_at(s, node);
    std::uint64_t op = new_op(s, "snsd-register", node);
    Ip hash;
    try {
        hash = hash_hostname(hostname);
    } catch (const LengthError&) {
        complete_op(s, op, Verdict::BadName, hostname.substr(0, 32));
        return op;
    }
    Ip target = random_member_of_gnode(s, current_rgh(s, hash));
    send_request(s, node, target, MsgKind::SnsdRegisterReq, SnsdRegisterPayload{hash, record},
                 PendSnsdRegister{op, hostname, record}, client_timeout(s), &me.keys);
    return op;
}

std::uint64_t start_snsd_delete(SimState& s, Ip node, const std::string& hostname,
                                std::uint16_t service, const SnsdTarget& target) {
    NodeState& me = node_at(s, node);
    std::uint64_t op = new_op(s, "snsd-delete", node);
    Ip hash;
    try {
        hash = hash_hostname(hostname);
    } catch (const LengthError&) {
        complete_op(s, op, Verdict::BadName, hostname.substr(0, 32));
        return op;
    }
    Ip server = random_member_of_gnode(s, current_rgh(s, hash));
    send_request(s, node, server, MsgKind::SnsdDeleteReq,
                 SnsdDeletePayload{hash, service, target},
                 PendSnsdDelete{op, hostname}, client_timeout(s), &me.keys);
    return op;
}

void start_challenge_round(SimState& s, Ip node) {
    NodeState& me = node_at(s, node);
    std::vector<TrustedRecord> snapshot = me.trusted;
    for (const TrustedRecord& t : snapshot) {
        if (target_is_ip(t.record.target)) {
            begin_challenge_probe(s, me, t.hostname, t.record, std::get<Ip>(t.record.target));
            continue;
        }
        const std::string& target_name = std::get<std::string>(t.record.target);
        Ip target_hash = hash_hostname(target_name);
        if (auto cached = cache_lookup(me, target_hash, s.now)) {
            begin_challenge_probe(s, me, t.hostname, t.record, cached->ip);
            continue;
        }
        PendResolve pend;
        pend.purpose = PendResolve::Purpose::ChallengeTarget;
        pend.hostname = target_name;
        pend.hname_hash = target_hash;
        pend.challenge_hostname = t.hostname;
        pend.challenge_record = t.record;
        Ip server = random_member_of_gnode(s, current_rgh(s, target_hash));
        send_request(s, node, server, MsgKind::ResolveReq, ResolvePayload{target_hash, 0},
                     std::move(pend), sub_timeout(s));
    }
}

void andna_hook(SimState& s, Ip joiner) {
    NodeState& me = node_at(s, joiner);
    std::vector<Ip> peers = members_of_gnode(s, gnode_of(joiner));
    peers.erase(std::remove(peers.begin(), peers.end(), joiner), peers.end());
    std::string hook = "empty";
    if (!peers.empty()) {
        Ip peer = peers[rand_below(s, peers.size())];
        const NodeState& src = node_at(s, peer);
        me.registry.entries = src.registry.entries;
        me.counter.entries = src.counter.entries;
        me.resolved_cache = src.resolved_cache;
        hook = to_string(peer);
    }
    log_line(s, "join", joiner, "gnode=" + to_string(gnode_of(joiner)) + " hook=" + hook,
             "ok");
}

}  // namespace andna
