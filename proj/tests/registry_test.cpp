#include <doctest.h>

#include <random>

#include "andna/idspace.hpp"
#include "andna/registry.hpp"

using namespace andna;

namespace {

PubKey test_key(std::uint64_t seed) {
    return keygen(SigScheme::TestMac, seed).pub;
}

RegistryDb make_db() {
    RegistryDb db;
    db.owner_gnode = GnodeId{0x0B1621};
    return db;
}

const Ip kHash{0x8B38AE9A};

}  // namespace

TEST_CASE("first registration becomes head") {
    RegistryDb db = make_db();
    auto pos = apply_registration(db, kHash, Ip{0x01020304}, test_key(1), 100);
    REQUIRE(pos.has_value());
    CHECK(*pos == 0);
    auto head = lookup(db, kHash);
    REQUIRE(head.has_value());
    CHECK(head->ip == Ip{0x01020304});
    CHECK(head->update_count == 0);
}

TEST_CASE("queue holds five distinct keys, sixth is rejected") {
    RegistryDb db = make_db();
    for (std::uint64_t i = 0; i < 5; ++i) {
        auto pos = apply_registration(db, kHash, Ip{std::uint32_t(i + 1)}, test_key(i), 100);
        REQUIRE(pos.has_value());
        CHECK(*pos == i);
    }
    CHECK_FALSE(apply_registration(db, kHash, Ip{99}, test_key(99), 100).has_value());
    CHECK(db.entries.at(kHash.value).queue.size() == 5);
}

TEST_CASE("same key re-registering is idempotent") {
    RegistryDb db = make_db();
    apply_registration(db, kHash, Ip{1}, test_key(0), 100);
    apply_registration(db, kHash, Ip{2}, test_key(1), 101);
    auto again = apply_registration(db, kHash, Ip{3}, test_key(1), 102);
    REQUIRE(again.has_value());
    CHECK(*again == 1);
    CHECK(db.entries.at(kHash.value).queue.size() == 2);
    // the original slot is untouched
    CHECK(db.entries.at(kHash.value).queue[1].registrant_ip == Ip{2});
    CHECK(db.entries.at(kHash.value).queue[1].registered_at == 101);
}

TEST_CASE("update ids must increase exactly by one") {
    RegistryDb db = make_db();
    PubKey pk = test_key(0);
    apply_registration(db, kHash, Ip{1}, pk, 100);

    CHECK(apply_update(db, kHash, pk, Ip{2}, 1, 200) == UpdateResult::Ok);
    CHECK(db.entries.at(kHash.value).queue[0].update_count == 1);
    CHECK(db.entries.at(kHash.value).queue[0].registrant_ip == Ip{2});
    CHECK(db.entries.at(kHash.value).queue[0].last_update_at == 200);

    // replay of the already-applied packet
    CHECK(apply_update(db, kHash, pk, Ip{2}, 1, 300) == UpdateResult::StaleId);
    CHECK(db.entries.at(kHash.value).queue[0].last_update_at == 200);

    CHECK(apply_update(db, kHash, pk, Ip{3}, 3, 300) == UpdateResult::GapId);
    CHECK(apply_update(db, kHash, pk, Ip{3}, 2, 300) == UpdateResult::Ok);

    CHECK(apply_update(db, Ip{0xDEAD}, pk, Ip{3}, 1, 300) == UpdateResult::UnknownHostname);
    CHECK(apply_update(db, kHash, test_key(5), Ip{3}, 1, 300) == UpdateResult::UnknownKey);
}

TEST_CASE("replay oracle: applying any accepted update twice fails the second time") {
    std::mt19937_64 rng(8);
    RegistryDb db = make_db();
    PubKey pk = test_key(0);
    apply_registration(db, kHash, Ip{1}, pk, 0);
    for (std::uint32_t id = 1; id <= 30; ++id) {
        Ip ip{std::uint32_t(rng())};
        Secs at = id * 100;
        REQUIRE(apply_update(db, kHash, pk, ip, id, at) == UpdateResult::Ok);
        CHECK(apply_update(db, kHash, pk, ip, id, at + 1) == UpdateResult::StaleId);
    }
}

TEST_CASE("expiry boundary sits exactly at 30 days") {
    RegistryDb db = make_db();
    apply_registration(db, kHash, Ip{1}, test_key(0), 1000);
    CHECK(expire_sweep(db, 1000 + kHibernationSecs - 1).empty());
    CHECK(lookup(db, kHash).has_value());
    auto expired = expire_sweep(db, 1000 + kHibernationSecs);
    REQUIRE(expired.size() == 1);
    CHECK_FALSE(expired[0].promoted.has_value());
    CHECK_FALSE(lookup(db, kHash).has_value());
    CHECK(db.entries.empty());
}

TEST_CASE("expired head promotes the next queued slot without its snsd records") {
    RegistryDb db = make_db();
    PubKey head_key = test_key(0);
    PubKey queued_key = test_key(1);
    apply_registration(db, kHash, Ip{1}, head_key, 0);
    apply_registration(db, kHash, Ip{2}, queued_key, 10);
    AndnaEntry& entry = db.entries.at(kHash.value);
    entry.snsd.push_back(SnsdRecord{SnsdTarget{Ip{7}}, 80, 1, 1, std::nullopt});
    entry.zero_policy = ZeroRecordPolicy{23, 12};
    // keep the queued slot alive past the head's deadline
    REQUIRE(apply_update(db, kHash, queued_key, Ip{2}, 1, 10) == UpdateResult::Ok);

    auto expired = expire_sweep(db, kHibernationSecs);  // head aged out, queued at age-10
    REQUIRE(expired.size() == 1);
    CHECK(expired[0].expired == head_key);
    REQUIRE(expired[0].promoted.has_value());
    CHECK(*expired[0].promoted == queued_key);

    auto head = lookup(db, kHash);
    REQUIRE(head.has_value());
    CHECK(head->ip == Ip{2});
    CHECK(entry.snsd.empty());
    CHECK(entry.zero_policy == ZeroRecordPolicy{});
}

TEST_CASE("timeline oracle: sweeps replayed against the 30-day rule") {
    // Events: (time, key, action). The oracle below recomputes liveness
    // directly from last-update times.
    struct Reg { std::uint64_t key; Secs at; };
    std::mt19937_64 rng(31);
    for (int round = 0; round < 40; ++round) {
        RegistryDb db = make_db();
        std::vector<Reg> regs;
        Secs t = 0;
        for (int i = 0; i < 5; ++i) {
            t += rng() % 2'000'000;
            if (apply_registration(db, kHash, Ip{std::uint32_t(i)}, test_key(i), t))
                regs.push_back(Reg{std::uint64_t(i), t});
        }
        Secs probe = t + rng() % (2 * kHibernationSecs);
        expire_sweep(db, probe);
        // oracle: a slot survives iff probe - last_update < 30 days
        std::size_t survivors = 0;
        for (const Reg& r : regs) {
            if (probe < r.at + kHibernationSecs)
                ++survivors;
        }
        auto it = db.entries.find(kHash.value);
        std::size_t kept = it == db.entries.end() ? 0 : it->second.queue.size();
        CHECK(kept == survivors);
    }
}

TEST_CASE("sweep on empty db is empty") {
    RegistryDb db = make_db();
    CHECK(expire_sweep(db, 123456).empty());
}

TEST_CASE("lookup is read-only and absent for unknown names") {
    RegistryDb db = make_db();
    CHECK_FALSE(lookup(db, Ip{1}).has_value());
    apply_registration(db, kHash, Ip{1}, test_key(0), 0);
    std::string before = dump_registry(db);
    lookup(db, kHash);
    lookup(db, kHash);
    CHECK(dump_registry(db) == before);
}

TEST_CASE("queue length is bounded under random operation mixes") {
    std::mt19937_64 rng(77);
    RegistryDb db = make_db();
    for (int i = 0; i < 3000; ++i) {
        Ip hash{std::uint32_t(rng() % 7)};
        std::uint64_t key = rng() % 10;
        switch (rng() % 3) {
        case 0:
            apply_registration(db, hash, Ip{std::uint32_t(rng())}, test_key(key), i);
            break;
        case 1:
            apply_update(db, hash, test_key(key), Ip{std::uint32_t(rng())},
                         std::uint32_t(rng() % 4), i);
            break;
        case 2:
            if (rng() % 16 == 0)
                expire_sweep(db, i + rng() % kHibernationSecs);
            break;
        }
        for (const auto& [h, entry] : db.entries) {
            CHECK(entry.queue.size() >= 1);
            CHECK(entry.queue.size() <= kMaxAndnaQueue);
        }
    }
}

TEST_CASE("registry dump format") {
    RegistryDb db = make_db();
    apply_registration(db, Ip{0x8B38AE9A}, Ip{0x7B7B7B7B}, test_key(0), 5);
    apply_registration(db, Ip{0x8B38AE9A}, Ip{0x01020304}, test_key(1), 6);
    CHECK(dump_registry(db) ==
          "8b38ae9a\t0\t123.123.123.123\t0\t5\n"
          "8b38ae9a\t1\t1.2.3.4\t0\t6\n");
}

TEST_CASE("audit_misplaced flags entries whose rounded gnode moved") {
    RegistryDb db = make_db();
    db.owner_gnode = GnodeId{0x8B38AE};
    apply_registration(db, Ip{0x8B38AE9A}, Ip{1}, test_key(0), 0);
    std::set<GnodeId> active{GnodeId{0x8B38AE}, GnodeId{0x111111}};
    CHECK(audit_misplaced(db, active).empty());
    // a closer gnode appears
    active.insert(GnodeId{0x8B38AD});
    CHECK(audit_misplaced(db, active).empty());  // exact gnode still present
    active.erase(GnodeId{0x8B38AE});
    auto misplaced = audit_misplaced(db, active);
    REQUIRE(misplaced.size() == 1);
    CHECK(misplaced[0] == Ip{0x8B38AE9A});
}
