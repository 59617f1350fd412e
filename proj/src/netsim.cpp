#include "andna/netsim.hpp"

#include <algorithm>
#include <sstream>

#include "andna/commands.hpp"
#include "andna/idspace.hpp"

namespace andna {

SimState make_sim(const SimConfig& config) {
    SimState s;
    s.config = config;
    s.rng.seed(config.seed);
    // Periodic maintenance, self-rescheduling.
    Event sweep;
    sweep.at = config.sweep_interval;
    sweep.seq = s.next_seq++;
    sweep.kind = Event::Kind::Sweep;
    s.queue.insert(sweep);
    Event challenge;
    challenge.at = config.challenge_interval;
    challenge.seq = s.next_seq++;
    challenge.kind = Event::Kind::Challenge;
    s.queue.insert(challenge);
    return s;
}

bool alive(const SimState& s, Ip ip) {
    return s.members.count(ip.value) != 0;
}

NodeState& node_at(SimState& s, Ip ip) {
    auto it = s.members.find(ip.value);
    if (it == s.members.end())
        throw UnknownIp("no live node at " + to_string(ip));
    return it->second;
}

std::set<GnodeId> live_gnodes(const SimState& s) {
    std::set<GnodeId> out;
    for (const auto& [ip, node] : s.members)
        out.insert(gnode_of(Ip{ip}));
    return out;
}

std::vector<Ip> members_of_gnode(const SimState& s, GnodeId g) {
    std::vector<Ip> out;
    for (const auto& [ip, node] : s.members) {
        if (gnode_of(Ip{ip}) == g)
            out.push_back(Ip{ip});
    }
    return out;
}

std::uint64_t rand_below(SimState& s, std::uint64_t n) {
    // Rejection sampling; unbiased and stable across standard libraries,
    // unlike std::uniform_int_distribution.
    if (n == 0)
        return 0;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v;
    do {
        v = s.rng();
    } while (v >= limit);
    return v % n;
}

Ip random_member_of_gnode(SimState& s, GnodeId g) {
    std::vector<Ip> members = members_of_gnode(s, g);
    if (members.empty())
        throw EmptyNetwork("gnode " + to_string(g) + " has no live member");
    return members[rand_below(s, members.size())];
}

void log_line(SimState& s, const std::string& kind, Ip actor, const std::string& detail,
              const std::string& verdict) {
    std::ostringstream os;
    os << s.now << '\t' << kind << '\t' << to_string(actor) << '\t' << detail << '\t'
       << verdict;
    s.log.push_back(os.str());
}

void send_message(SimState& s, Delivery d) {
    Event e;
    e.at = s.now + s.config.link_delay;
    e.seq = s.next_seq++;
    e.kind = Event::Kind::Deliver;
    e.delivery = std::move(d);
    s.queue.insert(std::move(e));
}

void schedule_timeout(SimState& s, Ip owner, std::uint64_t req_id, Secs delay) {
    Event e;
    e.at = s.now + delay;
    e.seq = s.next_seq++;
    e.kind = Event::Kind::Timeout;
    e.timeout_owner = owner;
    e.timeout_req = req_id;
    s.queue.insert(std::move(e));
}

void schedule_command(SimState& s, Secs at, const Command& cmd) {
    Event e;
    e.at = at;
    e.seq = s.next_seq++;
    e.kind = Event::Kind::Command;
    e.command = cmd;
    s.queue.insert(std::move(e));
}

void join_node(SimState& s, Ip ip, std::optional<std::uint64_t> key_seed) {
    if (alive(s, ip))
        throw DuplicateIp("node " + to_string(ip) + " already alive");
    ++s.join_generation;
    std::uint64_t seed = key_seed ? *key_seed
                                  : (s.config.seed * 0x9e3779b97f4a7c15ULL) ^
                                        (std::uint64_t(ip.value) << 16) ^ s.join_generation;
    NodeState node;
    node.ip = ip;
    node.keys = keygen(s.config.scheme, seed);
    node.registry.owner_gnode = gnode_of(ip);
    node.counter.owner_gnode = gnode_of(ip);
    s.members.emplace(ip.value, std::move(node));
    andna_hook(s, ip);
}

void leave_node(SimState& s, Ip ip) {
    if (!alive(s, ip))
        throw UnknownIp("node " + to_string(ip) + " is not alive");
    s.members.erase(ip.value);
    log_line(s, "leave", ip, "-", "ok");
}

void run_sweep(SimState& s) {
    for (auto& [ip_value, node] : s.members) {
        for (const ExpiredSlot& ex : expire_sweep(node.registry, s.now)) {
            std::string detail = "hash=" + hex32(ex.hname_hash.value);
            std::string verdict =
                ex.promoted ? "promoted=" + hex32(counter_ip(*ex.promoted).value) : "removed";
            log_line(s, "expire", Ip{ip_value}, detail, verdict);
        }
        for (const PubKey& pk : counter_expire_sweep(node.counter, s.now)) {
            log_line(s, "counter-expire", Ip{ip_value}, "key=" + hex32(counter_ip(pk).value),
                     "deactivated");
        }
        // Resolved-cache hygiene; expiry is also enforced at lookup time.
        for (auto it = node.resolved_cache.begin(); it != node.resolved_cache.end();) {
            if (s.now >= it->second.expires_at)
                it = node.resolved_cache.erase(it);
            else
                ++it;
        }
    }
}

namespace {

void run_challenge_round(SimState& s) {
    std::vector<Ip> nodes;
    for (const auto& [ip, node] : s.members) {
        if (!node.trusted.empty())
            nodes.push_back(Ip{ip});
    }
    for (Ip ip : nodes) {
        if (alive(s, ip))
            start_challenge_round(s, ip);
    }
}

void execute_event(SimState& s, const Event& e) {
    switch (e.kind) {
    case Event::Kind::Deliver: {
        ++s.deliveries;
        if (!alive(s, e.delivery.to)) {
            log_line(s, "drop", e.delivery.to,
                     std::string(to_string(e.delivery.msg.kind)) + " from " +
                         to_string(e.delivery.from),
                     "dead");
            return;
        }
        Verdict v = handle_delivery(s, e.delivery);
        if (s.config.trace) {
            std::ostringstream os;
            os << to_string(e.delivery.msg.kind) << " -> " << to_string(e.delivery.to);
            if (e.delivery.forwarded)
                os << " fwd";
            log_line(s, "msg", e.delivery.from, os.str(), to_string(v));
        }
        return;
    }
    case Event::Kind::Sweep: {
        run_sweep(s);
        Event next;
        next.at = s.now + s.config.sweep_interval;
        next.seq = s.next_seq++;
        next.kind = Event::Kind::Sweep;
        s.queue.insert(next);
        return;
    }
    case Event::Kind::Challenge: {
        run_challenge_round(s);
        Event next;
        next.at = s.now + s.config.challenge_interval;
        next.seq = s.next_seq++;
        next.kind = Event::Kind::Challenge;
        s.queue.insert(next);
        return;
    }
    case Event::Kind::Timeout:
        handle_timeout(s, e.timeout_owner, e.timeout_req);
        return;
    case Event::Kind::Command:
        execute_command(s, e.command);
        return;
    }
}

}  // namespace

bool step(SimState& s) {
    if (s.queue.empty())
        return false;
    Event e = *s.queue.begin();
    s.queue.erase(s.queue.begin());
    s.now = e.at;
    execute_event(s, e);
    return true;
}

void advance_to(SimState& s, Secs t) {
    while (!s.queue.empty() && s.queue.begin()->at <= t)
        step(s);
    if (t > s.now)
        s.now = t;
}

void settle(SimState& s) {
    for (;;) {
        auto pending = std::find_if(s.queue.begin(), s.queue.end(), [](const Event& e) {
            return e.kind != Event::Kind::Sweep && e.kind != Event::Kind::Challenge;
        });
        if (pending == s.queue.end())
            return;
        advance_to(s, pending->at);
    }
}

}  // namespace andna
