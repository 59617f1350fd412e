#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace andna {

// Virtual time, in seconds. The simulator never touches wall-clock time.
using Secs = std::uint64_t;

constexpr Secs kHibernationSecs = 2'592'000;  // 30 days
constexpr std::size_t kMaxHostnameLen = 512;
constexpr std::size_t kMaxPubKeyLen = 1024;
constexpr std::size_t kMaxAndnaQueue = 5;
constexpr std::size_t kMaxHostnamesPerKey = 256;
constexpr std::size_t kMaxSnsdPerName = 16;
constexpr std::size_t kMaxSnsdPerKey = 256;
constexpr unsigned kMaxSnsdWeight = 127;

struct LengthError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct MalformedKey : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct EmptyNetwork : std::logic_error {
    using std::logic_error::logic_error;
};
struct DuplicateIp : std::logic_error {
    using std::logic_error::logic_error;
};
struct UnknownIp : std::logic_error {
    using std::logic_error::logic_error;
};

// 32-bit node address. Displayed dotted-quad, compared numerically.
struct Ip {
    std::uint32_t value = 0;

    friend bool operator==(Ip a, Ip b) { return a.value == b.value; }
    friend bool operator!=(Ip a, Ip b) { return a.value != b.value; }
    friend bool operator<(Ip a, Ip b) { return a.value < b.value; }
};

// Level-1 group id: the top 24 bits of an Ip.
struct GnodeId {
    std::uint32_t value = 0;  // < 2^24

    friend bool operator==(GnodeId a, GnodeId b) { return a.value == b.value; }
    friend bool operator!=(GnodeId a, GnodeId b) { return a.value != b.value; }
    friend bool operator<(GnodeId a, GnodeId b) { return a.value < b.value; }
};

std::string to_string(Ip ip);
std::string to_string(GnodeId g);  // six hex digits

// Parses "a.b.c.d"; returns false on anything else.
bool parse_ip(const std::string& text, Ip& out);

std::string hex32(std::uint32_t v);  // eight lowercase hex digits

}  // namespace andna
