#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "andna/counter.hpp"
#include "andna/protocol.hpp"
#include "andna/registry.hpp"
#include "andna/types.hpp"

namespace andna {

struct SimConfig {
    std::uint64_t seed = 1;
    Secs link_delay = 1;
    Secs sweep_interval = 86'400;
    Secs challenge_interval = 86'400;
    bool trace = false;
    SigScheme scheme = SigScheme::Ed25519;
};

// Scenario command, executed inside the event loop at its scheduled time.
struct Command {
    enum class Verb {
        Join,
        Leave,
        Register,
        Update,
        Resolve,
        Reverse,
        SnsdLoad,
        SnsdRegister,
        Advance,
    };
    Verb verb = Verb::Advance;
    Ip node;
    std::string hostname;
    Ip target_ip;
    std::uint16_t service = 0;
    std::string text;      // snsd line or file contents
    std::string base_dir;  // for pub_key_file paths
};

struct Event {
    enum class Kind { Deliver, Sweep, Challenge, Timeout, Command };
    Secs at = 0;
    std::uint64_t seq = 0;  // tie break; assignment order is deterministic
    Kind kind = Kind::Sweep;
    Delivery delivery;                  // Deliver
    Ip timeout_owner;                   // Timeout
    std::uint64_t timeout_req = 0;      // Timeout
    Command command;                    // Command

    friend bool operator<(const Event& a, const Event& b) {
        if (a.at != b.at)
            return a.at < b.at;
        return a.seq < b.seq;
    }
};

struct TrustedRecord {
    std::string hostname;
    SnsdRecord record;  // trusted_pubkey engaged
};

struct NodeState {
    Ip ip;
    KeyPair keys;
    RegistryDb registry;
    CounterDb counter;
    std::map<std::uint32_t, ResolvedCacheEntry> resolved_cache;
    std::set<std::string> local_hostnames;             // names this node registered
    std::map<std::string, std::uint32_t> update_counts;  // accepted updates per name
    std::vector<TrustedRecord> trusted;
    std::map<std::uint64_t, Pending> pending;
};

// The simulation's single source of truth. One instance per thread;
// handlers run sequentially on the event loop, so no locking anywhere.
struct SimState {
    SimConfig config;
    Secs now = 0;
    std::map<std::uint32_t, NodeState> members;  // live nodes only
    std::set<Event> queue;
    std::mt19937_64 rng;
    std::uint64_t next_seq = 0;
    std::uint64_t next_req_id = 1;
    std::uint64_t next_op_id = 1;
    std::uint64_t join_generation = 0;
    std::uint64_t deliveries = 0;
    std::uint64_t rejections = 0;  // commands or operations that did not end Ok
    std::vector<std::string> log;
    std::map<std::uint64_t, OpOutcome> outcomes;
};

SimState make_sim(const SimConfig& config);

// Membership. Joining runs the andna hook; leaving drops the node's state,
// and in-flight messages to it are dropped (logged) at delivery time.
void join_node(SimState& s, Ip ip, std::optional<std::uint64_t> key_seed = std::nullopt);
void leave_node(SimState& s, Ip ip);

bool alive(const SimState& s, Ip ip);
NodeState& node_at(SimState& s, Ip ip);  // throws UnknownIp

std::set<GnodeId> live_gnodes(const SimState& s);
std::vector<Ip> members_of_gnode(const SimState& s, GnodeId g);

// Deterministic uniform draw in [0, n); consumes the shared rng.
std::uint64_t rand_below(SimState& s, std::uint64_t n);
Ip random_member_of_gnode(SimState& s, GnodeId g);  // throws EmptyNetwork

// Scheduling.
void send_message(SimState& s, Delivery d);  // delivers at now + link_delay
void schedule_timeout(SimState& s, Ip owner, std::uint64_t req_id, Secs delay);
void schedule_command(SimState& s, Secs at, const Command& cmd);

// Event loop. step() executes the earliest event; advance_to() runs events
// up to and including time t, then parks the clock at t.
bool step(SimState& s);
void advance_to(SimState& s, Secs t);
// Runs until only periodic events (sweeps, challenge rounds) remain queued.
void settle(SimState& s);

void log_line(SimState& s, const std::string& kind, Ip actor, const std::string& detail,
              const std::string& verdict);

// Per-node periodic maintenance, also callable directly from tests.
void run_sweep(SimState& s);

}  // namespace andna
