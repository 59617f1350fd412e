#include <doctest.h>

#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "andna/registry.hpp"
#include "andna/snsd.hpp"

using namespace andna;

namespace {

PubKey test_key(std::uint64_t seed) {
    return keygen(SigScheme::TestMac, seed).pub;
}

AndnaEntry entry_with_head(std::uint64_t key_seed, Ip head_ip) {
    AndnaEntry entry;
    entry.hname_hash = Ip{0x8B38AE9A};
    entry.queue.push_back(QueueSlot{head_ip, test_key(key_seed), 0, 0, 0});
    return entry;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::uint64_t rng_draw(std::mt19937_64& rng, std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v;
    do {
        v = rng();
    } while (v >= limit);
    return v % n;
}

}  // namespace

TEST_CASE("record validation") {
    SnsdRecord r{SnsdTarget{std::string("pippo")}, 80, 1, 1, std::nullopt};
    CHECK(validate_record(r).empty());

    r.weight = 128;
    CHECK_FALSE(validate_record(r).empty());
    r.weight = 0;  // disabled record is fine
    CHECK(validate_record(r).empty());

    SnsdRecord zero_ip{SnsdTarget{Ip{0x01020304}}, 0, 16, 1, std::nullopt};
    CHECK(validate_record(zero_ip, Ip{0x01020304}).empty());
    CHECK_FALSE(validate_record(zero_ip, Ip{0x05060708}).empty());
    CHECK(validate_record(zero_ip).empty());  // no context, nothing to check

    SnsdRecord long_name{SnsdTarget{std::string(513, 'x')}, 80, 1, 1, std::nullopt};
    CHECK_FALSE(validate_record(long_name).empty());
}

TEST_CASE("snsd registration limits") {
    AndnaEntry entry = entry_with_head(0, Ip{0x01020304});
    PubKey head = test_key(0);
    SnsdRecord r{SnsdTarget{std::string("pippo")}, 80, 1, 1, std::nullopt};

    for (std::size_t i = 0; i < kMaxSnsdPerName; ++i) {
        r.service = std::uint16_t(80 + i);
        CHECK(register_snsd(entry, r, head, true, i) == SnsdRegResult::Ok);
    }
    r.service = 7777;
    CHECK(register_snsd(entry, r, head, true, 16) == SnsdRegResult::PerNameLimit);
    CHECK(entry.snsd.size() == kMaxSnsdPerName);
}

TEST_CASE("only the active head may register records") {
    AndnaEntry entry = entry_with_head(0, Ip{1});
    entry.queue.push_back(QueueSlot{Ip{2}, test_key(1), 0, 0, 0});
    SnsdRecord r{SnsdTarget{std::string("pippo")}, 80, 1, 1, std::nullopt};
    CHECK(register_snsd(entry, r, test_key(1), true, 0) == SnsdRegResult::QueuedNotActive);
    CHECK(register_snsd(entry, r, test_key(9), true, 0) == SnsdRegResult::NotOwner);
    CHECK(register_snsd(entry, r, test_key(0), false, 0) == SnsdRegResult::BadSignature);
    CHECK(entry.snsd.empty());
    CHECK(register_snsd(entry, r, test_key(0), true, 0) == SnsdRegResult::Ok);
}

TEST_CASE("the 256-record per-key total is enforced") {
    AndnaEntry entry = entry_with_head(0, Ip{1});
    SnsdRecord r{SnsdTarget{std::string("pippo")}, 80, 1, 1, std::nullopt};
    CHECK(register_snsd(entry, r, test_key(0), true, kMaxSnsdPerKey - 1) == SnsdRegResult::Ok);
    r.service = 81;
    CHECK(register_snsd(entry, r, test_key(0), true, kMaxSnsdPerKey) ==
          SnsdRegResult::GlobalLimit);
}

TEST_CASE("resolve_service scopes by service number") {
    AndnaEntry entry = entry_with_head(0, Ip{0x01020304});
    // no snsd configured: service 0 yields the implicit zero record
    auto zero = resolve_service(entry, 0);
    REQUIRE(zero.size() == 1);
    CHECK(target_is_ip(zero[0].target));
    CHECK(std::get<Ip>(zero[0].target) == Ip{0x01020304});
    CHECK(zero[0].priority == 16);
    CHECK(zero[0].weight == 1);

    entry.snsd.push_back(SnsdRecord{SnsdTarget{std::string("depausceve")}, 80, 1, 1, {}});
    entry.snsd.push_back(SnsdRecord{SnsdTarget{Ip{0x0B16212C}}, 21, 0, 1, {}});
    entry.snsd.push_back(SnsdRecord{SnsdTarget{std::string("alias")}, 0, 8, 2, {}});

    auto http = resolve_service(entry, 80);
    REQUIRE(http.size() == 1);
    CHECK(target_to_string(http[0].target) == "depausceve");

    auto ftp = resolve_service(entry, 21);
    REQUIRE(ftp.size() == 1);
    CHECK(std::get<Ip>(ftp[0].target) == Ip{0x0B16212C});

    CHECK(resolve_service(entry, 9999).empty());

    // stored service-0 aliases ride along after the implicit record
    auto zero2 = resolve_service(entry, 0);
    REQUIRE(zero2.size() == 2);
    CHECK(std::get<Ip>(zero2[0].target) == Ip{0x01020304});
    CHECK(target_to_string(zero2[1].target) == "alias");

    // zero policy override changes the implicit record's numbers
    entry.zero_policy = ZeroRecordPolicy{23, 12};
    CHECK(resolve_service(entry, 0)[0].priority == 23);
    CHECK(resolve_service(entry, 0)[0].weight == 12);
}

TEST_CASE("select_record: single live record wins") {
    std::mt19937_64 rng(5);
    std::vector<ResolvedRecord> records{{SnsdTarget{Ip{1}}, 16, 1}};
    auto chosen = select_record(
        records, [](const SnsdTarget&) { return true; },
        [&rng](std::uint64_t n) { return rng_draw(rng, n); });
    REQUIRE(chosen.has_value());
    CHECK(std::get<Ip>(chosen->target) == Ip{1});
}

TEST_CASE("select_record: numerically lower priority always preferred when reachable") {
    std::mt19937_64 rng(6);
    std::vector<ResolvedRecord> records{{SnsdTarget{Ip{1}}, 9, 100}, {SnsdTarget{Ip{2}}, 1, 1}};
    for (int i = 0; i < 500; ++i) {
        auto chosen = select_record(
            records, [](const SnsdTarget&) { return true; },
            [&rng](std::uint64_t n) { return rng_draw(rng, n); });
        REQUIRE(chosen.has_value());
        CHECK(std::get<Ip>(chosen->target) == Ip{2});
    }
}

TEST_CASE("select_record: unreachable better class falls through") {
    std::mt19937_64 rng(7);
    std::vector<ResolvedRecord> records{{SnsdTarget{Ip{1}}, 1, 5}, {SnsdTarget{Ip{2}}, 9, 5}};
    auto chosen = select_record(
        records, [](const SnsdTarget& t) { return std::get<Ip>(t) != Ip{1}; },
        [&rng](std::uint64_t n) { return rng_draw(rng, n); });
    REQUIRE(chosen.has_value());
    CHECK(std::get<Ip>(chosen->target) == Ip{2});
}

TEST_CASE("select_record: weight-0 records are never chosen, all-disabled fails") {
    std::mt19937_64 rng(8);
    std::vector<ResolvedRecord> records{{SnsdTarget{Ip{1}}, 1, 0}, {SnsdTarget{Ip{2}}, 1, 3}};
    for (int i = 0; i < 300; ++i) {
        auto chosen = select_record(
            records, [](const SnsdTarget&) { return true; },
            [&rng](std::uint64_t n) { return rng_draw(rng, n); });
        REQUIRE(chosen.has_value());
        CHECK(std::get<Ip>(chosen->target) == Ip{2});
    }
    std::vector<ResolvedRecord> disabled{{SnsdTarget{Ip{1}}, 1, 0}};
    CHECK_FALSE(select_record(
                    disabled, [](const SnsdTarget&) { return true; },
                    [&rng](std::uint64_t n) { return rng_draw(rng, n); })
                    .has_value());
    std::vector<ResolvedRecord> unreachable{{SnsdTarget{Ip{1}}, 1, 3}};
    CHECK_FALSE(select_record(
                    unreachable, [](const SnsdTarget&) { return false; },
                    [&rng](std::uint64_t n) { return rng_draw(rng, n); })
                    .has_value());
}

TEST_CASE("select_record: weights 3:1 draw close to 75/25") {
    std::mt19937_64 rng(9);
    std::vector<ResolvedRecord> records{{SnsdTarget{Ip{1}}, 1, 3}, {SnsdTarget{Ip{2}}, 1, 1}};
    int first = 0;
    const int trials = 10'000;
    for (int i = 0; i < trials; ++i) {
        auto chosen = select_record(
            records, [](const SnsdTarget&) { return true; },
            [&rng](std::uint64_t n) { return rng_draw(rng, n); });
        REQUIRE(chosen.has_value());
        if (std::get<Ip>(chosen->target) == Ip{1})
            ++first;
    }
    CHECK(double(first) / trials == doctest::Approx(0.75).epsilon(0.03));
}

TEST_CASE("select_record: scaling weights leaves the distribution unchanged") {
    auto frequencies = [](std::uint8_t w1, std::uint8_t w2, std::uint64_t seed) {
        std::mt19937_64 rng(seed);
        std::vector<ResolvedRecord> records{{SnsdTarget{Ip{1}}, 1, w1},
                                            {SnsdTarget{Ip{2}}, 1, w2}};
        int first = 0;
        for (int i = 0; i < 6000; ++i) {
            auto chosen = select_record(
                records, [](const SnsdTarget&) { return true; },
                [&rng](std::uint64_t n) { return rng_draw(rng, n); });
            if (std::get<Ip>(chosen->target) == Ip{1})
                ++first;
        }
        return double(first) / 6000.0;
    };
    CHECK(frequencies(2, 6, 10) == doctest::Approx(frequencies(20, 60, 11)).epsilon(0.05));
}

TEST_CASE("parser accepts the shipped snsd_nodes file with zero diagnostics") {
    SnsdParseResult parsed = parse_snsd_nodes(read_file(ANDNA_TEST_DATA_DIR "/snsd_nodes"));
    CHECK(parsed.diagnostics.empty());
    REQUIRE(parsed.lines.size() == 3);

    CHECK(parsed.lines[0].hostname == "depausceve");
    CHECK(target_to_string(parsed.lines[0].target) == "pippo");
    CHECK_FALSE(target_is_ip(parsed.lines[0].target));
    CHECK(parsed.lines[0].service == 80);
    CHECK(parsed.lines[0].priority == 1);
    CHECK(parsed.lines[0].weight == 1);
    CHECK_FALSE(parsed.lines[0].pub_key_file.has_value());

    CHECK(parsed.lines[1].hostname == "depausceve");
    CHECK(target_is_ip(parsed.lines[1].target));
    CHECK(std::get<Ip>(parsed.lines[1].target) == Ip{0x01020304});
    CHECK(parsed.lines[1].service == 21);
    CHECK(parsed.lines[1].priority == 0);
    CHECK(parsed.lines[1].weight == 1);

    CHECK(parsed.lines[2].hostname == "angelica");
    CHECK(target_to_string(parsed.lines[2].target) == "frenzu");
    CHECK(parsed.lines[2].service == 22);
    CHECK(parsed.lines[2].priority == 1);
    CHECK(parsed.lines[2].weight == 1);
    REQUIRE(parsed.lines[2].pub_key_file.has_value());
    CHECK(*parsed.lines[2].pub_key_file == "/etc/netsukuku/snsd/frenzu.pubk");
}

TEST_CASE("parse -> serialize -> parse is a fixed point") {
    SnsdParseResult first = parse_snsd_nodes(read_file(ANDNA_TEST_DATA_DIR "/snsd_nodes"));
    std::string serialized = serialize_snsd_lines(first.lines);
    SnsdParseResult second = parse_snsd_nodes(serialized);
    CHECK(second.diagnostics.empty());
    CHECK(second.lines == first.lines);
    CHECK(serialize_snsd_lines(second.lines) == serialized);
}

TEST_CASE("parser diagnostics carry line numbers and never abort the file") {
    std::string text =
        "ok1:pippo:http:1\n"
        "bad\n"
        "ok2:1.2.3.4:21\n"
        "weighty:pippo:80:1:200\n"
        "svc:pippo:nosuch:1\n"
        "ok3:pippo:domain:2:3\n";
    SnsdParseResult parsed = parse_snsd_nodes(text);
    REQUIRE(parsed.lines.size() == 3);
    CHECK(parsed.lines[0].hostname == "ok1");
    CHECK(parsed.lines[1].hostname == "ok2");
    CHECK(parsed.lines[2].hostname == "ok3");
    CHECK(parsed.lines[2].service == 53);
    REQUIRE(parsed.diagnostics.size() == 3);
    CHECK(parsed.diagnostics[0].find("line 2:") == 0);
    CHECK(parsed.diagnostics[1].find("line 4:") == 0);
    CHECK(parsed.diagnostics[1].find("128") != std::string::npos);
    CHECK(parsed.diagnostics[2].find("line 5:") == 0);
}

TEST_CASE("parser defaults, numeric services, and the zero override shape") {
    SnsdParseResult parsed = parse_snsd_nodes(
        "name:pippo:8080\n"
        "depausceve:depausceve:0:23:12\n");
    REQUIRE(parsed.diagnostics.empty());
    REQUIRE(parsed.lines.size() == 2);
    CHECK(parsed.lines[0].service == 8080);
    CHECK(parsed.lines[0].priority == 16);  // default
    CHECK(parsed.lines[0].weight == 1);     // default
    CHECK(parsed.lines[1].hostname == "depausceve");
    CHECK(target_to_string(parsed.lines[1].target) == "depausceve");
    CHECK(parsed.lines[1].service == 0);
    CHECK(parsed.lines[1].priority == 23);
    CHECK(parsed.lines[1].weight == 12);
}

TEST_CASE("empty input parses to nothing") {
    SnsdParseResult parsed = parse_snsd_nodes("");
    CHECK(parsed.lines.empty());
    CHECK(parsed.diagnostics.empty());
}
