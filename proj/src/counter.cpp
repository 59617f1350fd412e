#include "andna/counter.hpp"

#include <sstream>

#include "andna/idspace.hpp"

namespace andna {

CheckVerdict check_request(CounterDb& db, const PubKey& pk, Ip hname_hash, Secs now) {
    auto it = db.entries.find(pk.bytes);
    if (it == db.entries.end()) {
        CounterEntry entry;
        entry.pubkey = pk;
        entry.hname_hashes.insert(hname_hash.value);
        entry.last_check_at = now;
        db.entries.emplace(pk.bytes, std::move(entry));
        return CheckVerdict::Ok;
    }
    CounterEntry& entry = it->second;
    if (entry.hname_hashes.count(hname_hash.value)) {
        entry.last_check_at = now;
        return CheckVerdict::Ok;
    }
    if (entry.hname_hashes.size() >= kMaxHostnamesPerKey)
        return CheckVerdict::OverQuota;
    entry.hname_hashes.insert(hname_hash.value);
    entry.last_check_at = now;
    return CheckVerdict::Ok;
}

UpdateCheckVerdict update_check(CounterDb& db, const PubKey& pk, Ip hname_hash, Secs now) {
    auto it = db.entries.find(pk.bytes);
    if (it == db.entries.end() || !it->second.hname_hashes.count(hname_hash.value))
        return UpdateCheckVerdict::Inactive;
    it->second.last_check_at = now;
    return UpdateCheckVerdict::Ok;
}

std::vector<PubKey> counter_expire_sweep(CounterDb& db, Secs now) {
    std::vector<PubKey> out;
    for (auto it = db.entries.begin(); it != db.entries.end();) {
        if (now >= it->second.last_check_at &&
            now - it->second.last_check_at >= kHibernationSecs) {
            out.push_back(it->second.pubkey);
            it = db.entries.erase(it);
        } else {
            ++it;
        }
    }
    return out;
}

std::string dump_counter(const CounterDb& db) {
    std::ostringstream os;
    for (const auto& [bytes, entry] : db.entries) {
        os << hex32(counter_ip(entry.pubkey).value) << '\t' << entry.hname_hashes.size()
           << '\t' << entry.last_check_at << '\n';
    }
    return os.str();
}

}  // namespace andna
