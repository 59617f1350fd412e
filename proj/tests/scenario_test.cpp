#include <doctest.h>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "andna/scenario.hpp"
#include "sim_helpers.hpp"

using namespace andna;
using namespace andna::testing;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    REQUIRE_MESSAGE(in.good(), path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

const char* kScenarios[] = {"basic",    "queue",    "expiry",   "mutation_transfer",
                            "mutation_doublecheck", "angelica", "challenge"};

ScenarioRun run_file(const std::string& name, std::uint64_t seed = 1) {
    ScenarioParseResult parsed =
        parse_scenario(read_file(std::string(ANDNA_TEST_DIR "/scenarios/") + name + ".scn"));
    REQUIRE(parsed.errors.empty());
    SimConfig config;
    config.seed = seed;
    return run_scenario(parsed.commands, config, ANDNA_TEST_DIR "/scenarios");
}

std::string joined(const std::vector<std::string>& lines) {
    std::string out;
    for (const std::string& line : lines) {
        out += line;
        out += '\n';
    }
    return out;
}

}  // namespace

TEST_CASE("scenario parser: verbs and arguments") {
    ScenarioParseResult r = parse_scenario(
        "# comment\n"
        "\n"
        "0 join 1.2.3.4\n"
        "5 register 1.2.3.4 \"two words\"\n"
        "7 resolve 1.2.3.4 \"name\" http\n"
        "8 resolve 1.2.3.4 \"name\" 8080\n"
        "9 update 1.2.3.4 \"name\" 5.6.7.8\n"
        "10 reverse 1.2.3.4 9.9.9.9\n"
        "11 snsd-load 1.2.3.4 some/file\n"
        "12 snsd-register 1.2.3.4 \"a:b:http:1\"\n"
        "99 advance\n");
    CHECK(r.errors.empty());
    REQUIRE(r.commands.size() == 9);
    CHECK(r.commands[0].command.verb == Command::Verb::Join);
    CHECK(r.commands[1].command.hostname == "two words");
    CHECK(r.commands[2].command.service == 80);
    CHECK(r.commands[3].command.service == 8080);
    CHECK(r.commands[4].command.target_ip == ip("5.6.7.8"));
    CHECK(r.commands[5].command.target_ip == ip("9.9.9.9"));
    CHECK(r.commands[6].command.text == "some/file");
    CHECK(r.commands[8].at == 99);
}

TEST_CASE("scenario parser: diagnostics carry line numbers") {
    ScenarioParseResult r = parse_scenario(
        "0 join 1.2.3.4\n"
        "1 frobnicate 1.2.3.4\n"
        "2 join not-an-ip\n"
        "3 register 1.2.3.4\n"
        "4 resolve 1.2.3.4 \"x\" nosuchservice\n"
        "5 register 1.2.3.4 \"unterminated\n");
    CHECK(r.commands.size() == 1);
    REQUIRE(r.errors.size() == 5);
    CHECK(r.errors[0].find("line 2:") == 0);
    CHECK(r.errors[1].find("line 3:") == 0);
    CHECK(r.errors[2].find("line 4:") == 0);
    CHECK(r.errors[3].find("line 5:") == 0);
    CHECK(r.errors[4].find("line 6:") == 0);
}

TEST_CASE("scenario parser: out-of-order timestamps are rejected") {
    ScenarioParseResult r = parse_scenario(
        "10 join 1.2.3.4\n"
        "5 join 1.2.3.5\n");
    CHECK(r.commands.size() == 1);
    REQUIRE(r.errors.size() == 1);
    CHECK(r.errors[0].find("out of order") != std::string::npos);
}

TEST_CASE("corpus scenarios reproduce their golden logs byte for byte") {
    for (const char* name : kScenarios) {
        CAPTURE(name);
        ScenarioRun run = run_file(name);
        std::string golden = read_file(std::string(ANDNA_TEST_DIR "/golden/") + name + ".log");
        CHECK(joined(run.log) == golden);
    }
}

TEST_CASE("scenario output is a pure function of scenario bytes and flags") {
    for (const char* name : kScenarios) {
        CAPTURE(name);
        CHECK(run_file(name).log == run_file(name).log);
    }
}

TEST_CASE("rejections are counted for strict mode") {
    CHECK(run_file("basic").rejections == 1);  // the reverse to a departed node
    CHECK(run_file("queue").rejections == 1);  // the sixth registrant
    CHECK(run_file("angelica").rejections == 0);
}

TEST_CASE("every corpus scenario leaves replicas in agreement") {
    for (const char* name : kScenarios) {
        CAPTURE(name);
        ScenarioRun run = run_file(name);
        CHECK(all_replicas_agree(run.sim));
    }
}

namespace {

int run_cli(const std::string& args) {
    std::string cmd = std::string(ANDNA_SIM_BIN) + " " + args + " >/dev/null 2>&1";
    int status = std::system(cmd.c_str());
    REQUIRE(status != -1);
    return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("cli exit codes: 0 clean, 1 strict rejection, 2 parse error") {
    const std::string dir = ANDNA_TEST_DIR "/scenarios/";
    CHECK(run_cli("run " + dir + "basic.scn") == 0);
    CHECK(run_cli("run --strict " + dir + "angelica.scn") == 0);
    // basic.scn ends with a reverse to a departed node
    CHECK(run_cli("run --strict " + dir + "basic.scn") == 1);

    std::string bad = "/tmp/andna_bad_scenario.scn";
    std::ofstream(bad) << "0 join 1.2.3.4\n1 frobnicate\n";
    CHECK(run_cli("run " + bad) == 2);
    std::remove(bad.c_str());

    CHECK(run_cli(std::string("snsd-check ") + ANDNA_TEST_DATA_DIR "/snsd_nodes") == 0);
    std::string badsnsd = "/tmp/andna_bad_snsd";
    std::ofstream(badsnsd) << "name:pippo:80:1:200\n";
    CHECK(run_cli("snsd-check " + badsnsd) == 1);
    std::remove(badsnsd.c_str());
}
