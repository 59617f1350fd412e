#include "andna/wire.hpp"

namespace andna {

namespace {

struct ByteWriter {
    Bytes out;

    void u8(std::uint8_t v) { out.push_back(v); }
    void u16(std::uint16_t v) {
        out.push_back(std::uint8_t(v >> 8));
        out.push_back(std::uint8_t(v));
    }
    void u32(std::uint32_t v) {
        for (int s = 24; s >= 0; s -= 8)
            out.push_back(std::uint8_t(v >> s));
    }
    void u64(std::uint64_t v) {
        for (int s = 56; s >= 0; s -= 8)
            out.push_back(std::uint8_t(v >> s));
    }
    void bytes(const Bytes& b) {
        u32(std::uint32_t(b.size()));
        out.insert(out.end(), b.begin(), b.end());
    }
    void str(const std::string& s) {
        u32(std::uint32_t(s.size()));
        out.insert(out.end(), s.begin(), s.end());
    }
    void ip(Ip v) { u32(v.value); }
    void target(const SnsdTarget& t) {
        if (target_is_ip(t)) {
            u8(1);
            ip(std::get<Ip>(t));
        } else {
            u8(2);
            str(std::get<std::string>(t));
        }
    }
    void record(const SnsdRecord& r) {
        target(r.target);
        u16(r.service);
        u8(r.priority);
        u8(r.weight);
        if (r.trusted_pubkey) {
            u8(1);
            bytes(r.trusted_pubkey->bytes);
        } else {
            u8(0);
        }
    }
    void resolved(const ResolvedRecord& r) {
        target(r.target);
        u8(r.priority);
        u8(r.weight);
    }
    void entry(const AndnaEntry& e) {
        ip(e.hname_hash);
        u32(std::uint32_t(e.queue.size()));
        for (const QueueSlot& slot : e.queue) {
            ip(slot.registrant_ip);
            bytes(slot.pubkey.bytes);
            u64(slot.registered_at);
            u64(slot.last_update_at);
            u32(slot.update_count);
        }
        u32(std::uint32_t(e.snsd.size()));
        for (const SnsdRecord& r : e.snsd)
            record(r);
        u8(e.zero_policy.priority);
        u8(e.zero_policy.weight);
    }
};

}  // namespace

Bytes entry_bytes(const AndnaEntry& entry) {
    ByteWriter w;
    w.entry(entry);
    return std::move(w.out);
}

Bytes canonical_bytes(const Message& msg) {
    ByteWriter w;
    w.u8(std::uint8_t(msg.kind));
    w.ip(msg.sender);
    w.u64(msg.req_id);
    if (msg.pubkey) {
        w.u8(1);
        w.bytes(msg.pubkey->bytes);
    } else {
        w.u8(0);
    }
    std::visit(
        [&w](const auto& p) {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, RegisterPayload>) {
                w.ip(p.hname_hash);
                w.ip(p.registrant);
            } else if constexpr (std::is_same_v<T, UpdatePayload>) {
                w.ip(p.hname_hash);
                w.ip(p.new_ip);
                w.u32(p.update_id);
            } else if constexpr (std::is_same_v<T, CounterCheckPayload>) {
                w.u8(std::uint8_t(p.mode));
                w.bytes(p.subject.bytes);
                w.ip(p.hname_hash);
                w.ip(p.registrant);
            } else if constexpr (std::is_same_v<T, ResolvePayload>) {
                w.ip(p.hname_hash);
                w.u16(p.service);
            } else if constexpr (std::is_same_v<T, DelegatedResolvePayload>) {
                w.ip(p.hname_hash);
            } else if constexpr (std::is_same_v<T, ReversePayload>) {
                // no fields
            } else if constexpr (std::is_same_v<T, CacheTransferPayload>) {
                w.ip(p.hname_hash);
            } else if constexpr (std::is_same_v<T, DoubleCheckPayload>) {
                w.ip(p.hname_hash);
            } else if constexpr (std::is_same_v<T, SnsdRegisterPayload>) {
                w.ip(p.hname_hash);
                w.record(p.record);
            } else if constexpr (std::is_same_v<T, SnsdDeletePayload>) {
                w.ip(p.hname_hash);
                w.u16(p.service);
                w.target(p.target);
            } else if constexpr (std::is_same_v<T, ChallengePayload>) {
                w.bytes(p.nonce);
            } else if constexpr (std::is_same_v<T, RegisterRespPayload>) {
                w.u8(std::uint8_t(p.verdict));
                w.u8(p.position);
            } else if constexpr (std::is_same_v<T, UpdateRespPayload>) {
                w.u8(std::uint8_t(p.verdict));
            } else if constexpr (std::is_same_v<T, CounterCheckRespPayload>) {
                w.u8(std::uint8_t(p.verdict));
                w.u8(std::uint8_t(p.mode));
            } else if constexpr (std::is_same_v<T, ResolveRespPayload>) {
                w.u8(std::uint8_t(p.verdict));
                w.ip(p.zero_ip);
                w.u64(p.registered_or_updated_at);
                w.u32(std::uint32_t(p.records.size()));
                for (const ResolvedRecord& r : p.records)
                    w.resolved(r);
            } else if constexpr (std::is_same_v<T, ReverseRespPayload>) {
                w.u32(std::uint32_t(p.hostnames.size()));
                for (const std::string& h : p.hostnames)
                    w.str(h);
            } else if constexpr (std::is_same_v<T, CacheTransferRespPayload> ||
                                 std::is_same_v<T, DoubleCheckRespPayload>) {
                w.u8(p.found ? 1 : 0);
                if (p.found)
                    w.entry(p.entry);
            } else if constexpr (std::is_same_v<T, SnsdRespPayload>) {
                w.u8(std::uint8_t(p.verdict));
            } else if constexpr (std::is_same_v<T, ChallengeRespPayload>) {
                w.bytes(p.nonce);
            }
        },
        msg.payload);
    return std::move(w.out);
}

std::string to_hex(const Bytes& b) {
    static const char* digits = "0123456789abcdef";
    std::string out;
    out.reserve(b.size() * 2);
    for (std::uint8_t v : b) {
        out.push_back(digits[v >> 4]);
        out.push_back(digits[v & 0xf]);
    }
    return out;
}

}  // namespace andna
