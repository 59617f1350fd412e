#include "andna/registry.hpp"

#include <algorithm>
#include <sstream>

#include "andna/idspace.hpp"

namespace andna {

const char* to_string(UpdateResult r) {
    switch (r) {
    case UpdateResult::Ok: return "ok";
    case UpdateResult::UnknownHostname: return "UnknownHostname";
    case UpdateResult::UnknownKey: return "UnknownKey";
    case UpdateResult::StaleId: return "StaleId";
    case UpdateResult::GapId: return "GapId";
    }
    return "?";
}

std::optional<std::size_t> apply_registration(RegistryDb& db, Ip hname_hash, Ip registrant,
                                              const PubKey& pk, Secs now) {
    auto it = db.entries.find(hname_hash.value);
    if (it == db.entries.end()) {
        AndnaEntry entry;
        entry.hname_hash = hname_hash;
        entry.queue.push_back(QueueSlot{registrant, pk, now, now, 0});
        db.entries.emplace(hname_hash.value, std::move(entry));
        return 0;
    }
    AndnaEntry& entry = it->second;
    for (std::size_t i = 0; i < entry.queue.size(); ++i) {
        if (entry.queue[i].pubkey == pk)
            return i;  // retry-safe: same key keeps its slot
    }
    if (entry.queue.size() >= kMaxAndnaQueue)
        return std::nullopt;
    entry.queue.push_back(QueueSlot{registrant, pk, now, now, 0});
    return entry.queue.size() - 1;
}

UpdateResult apply_update(RegistryDb& db, Ip hname_hash, const PubKey& pk, Ip new_ip,
                          std::uint32_t update_id, Secs now) {
    auto it = db.entries.find(hname_hash.value);
    if (it == db.entries.end())
        return UpdateResult::UnknownHostname;
    for (QueueSlot& slot : it->second.queue) {
        if (slot.pubkey != pk)
            continue;
        if (update_id <= slot.update_count)
            return UpdateResult::StaleId;
        if (update_id > slot.update_count + 1)
            return UpdateResult::GapId;
        slot.registrant_ip = new_ip;
        slot.last_update_at = now;
        slot.update_count = update_id;
        return UpdateResult::Ok;
    }
    return UpdateResult::UnknownKey;
}

std::vector<ExpiredSlot> expire_sweep(RegistryDb& db, Secs now) {
    std::vector<ExpiredSlot> out;
    for (auto it = db.entries.begin(); it != db.entries.end();) {
        AndnaEntry& entry = it->second;
        bool first_is_original_head = true;
        std::optional<std::size_t> head_record;  // index into `out`
        for (std::size_t i = 0; i < entry.queue.size();) {
            const QueueSlot& slot = entry.queue[i];
            if (now >= slot.last_update_at && now - slot.last_update_at >= kHibernationSecs) {
                if (i == 0 && first_is_original_head)
                    head_record = out.size();
                out.push_back(ExpiredSlot{entry.hname_hash, slot.pubkey, std::nullopt});
                entry.queue.erase(entry.queue.begin() + std::ptrdiff_t(i));
                if (i == 0)
                    first_is_original_head = false;
            } else {
                ++i;
            }
        }
        if (head_record) {
            // SNSD records and zero policy belonged to the expired head.
            entry.snsd.clear();
            entry.zero_policy = ZeroRecordPolicy{};
            if (!entry.queue.empty())
                out[*head_record].promoted = entry.queue.front().pubkey;
        }
        if (entry.queue.empty())
            it = db.entries.erase(it);
        else
            ++it;
    }
    return out;
}

std::optional<HeadView> lookup(const RegistryDb& db, Ip hname_hash) {
    auto it = db.entries.find(hname_hash.value);
    if (it == db.entries.end() || it->second.queue.empty())
        return std::nullopt;
    const QueueSlot& head = it->second.queue.front();
    return HeadView{head.registrant_ip, head.last_update_at, head.update_count};
}

std::vector<Ip> audit_misplaced(const RegistryDb& db, const std::set<GnodeId>& active) {
    std::vector<Ip> out;
    for (const auto& [hash, entry] : db.entries) {
        if (rounded_hash_gnode(gnode_of(Ip{hash}), active) != db.owner_gnode)
            out.push_back(Ip{hash});
    }
    return out;
}

std::string dump_registry(const RegistryDb& db) {
    std::ostringstream os;
    for (const auto& [hash, entry] : db.entries) {
        for (std::size_t i = 0; i < entry.queue.size(); ++i) {
            const QueueSlot& s = entry.queue[i];
            os << hex32(hash) << '\t' << i << '\t' << to_string(s.registrant_ip) << '\t'
               << s.update_count << '\t' << s.last_update_at << '\n';
        }
    }
    return os.str();
}

std::string dump_snsd(const RegistryDb& db) {
    std::ostringstream os;
    for (const auto& [hash, entry] : db.entries) {
        os << hex32(hash) << "\tzero\t" << unsigned(entry.zero_policy.priority) << '\t'
           << unsigned(entry.zero_policy.weight) << '\n';
        for (const SnsdRecord& r : entry.snsd) {
            os << hex32(hash) << '\t' << r.service << '\t' << target_to_string(r.target)
               << '\t' << unsigned(r.priority) << '\t' << unsigned(r.weight) << '\t'
               << (r.trusted_pubkey ? "trusted" : "-") << '\n';
        }
    }
    return os.str();
}

}  // namespace andna
