#include "andna/idspace.hpp"

#include <sodium.h>

#include <cstdio>

namespace andna {

std::string to_string(Ip ip) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%u.%u.%u.%u", (ip.value >> 24) & 0xff,
                  (ip.value >> 16) & 0xff, (ip.value >> 8) & 0xff, ip.value & 0xff);
    return buf;
}

std::string to_string(GnodeId g) {
    char buf[8];
    std::snprintf(buf, sizeof(buf), "%06x", g.value & 0xffffff);
    return buf;
}

std::string hex32(std::uint32_t v) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%08x", v);
    return buf;
}

bool parse_ip(const std::string& text, Ip& out) {
    unsigned a, b, c, d;
    char tail;
    if (std::sscanf(text.c_str(), "%u.%u.%u.%u%c", &a, &b, &c, &d, &tail) != 4)
        return false;
    if (a > 255 || b > 255 || c > 255 || d > 255)
        return false;
    out = Ip{(a << 24) | (b << 16) | (c << 8) | d};
    return true;
}

Ip digest32(const std::uint8_t* data, std::size_t len) {
    unsigned char h[crypto_hash_sha256_BYTES];
    crypto_hash_sha256(h, data, len);
    std::uint32_t v = (std::uint32_t(h[0]) << 24) | (std::uint32_t(h[1]) << 16) |
                      (std::uint32_t(h[2]) << 8) | std::uint32_t(h[3]);
    return Ip{v};
}

Ip digest32(const std::string& data) {
    return digest32(reinterpret_cast<const std::uint8_t*>(data.data()), data.size());
}

Ip hash_hostname(const std::string& hostname) {
    if (hostname.empty())
        throw LengthError("hostname is empty");
    if (hostname.size() > kMaxHostnameLen)
        throw LengthError("hostname exceeds 512 bytes");
    return digest32(hostname);
}

std::uint32_t ring_distance(GnodeId a, GnodeId b) {
    constexpr std::uint32_t ring = 1u << 24;
    std::uint32_t diff = a.value > b.value ? a.value - b.value : b.value - a.value;
    return diff <= ring - diff ? diff : ring - diff;
}

GnodeId rounded_hash_gnode(GnodeId target, const std::set<GnodeId>& active) {
    if (active.empty())
        throw EmptyNetwork("no active gnode");
    GnodeId best = *active.begin();
    std::uint32_t best_d = ring_distance(target, best);
    for (GnodeId g : active) {
        std::uint32_t d = ring_distance(target, g);
        // std::set iterates ascending, so on ties the smaller id sticks.
        if (d < best_d) {
            best = g;
            best_d = d;
        }
    }
    return best;
}

}  // namespace andna
