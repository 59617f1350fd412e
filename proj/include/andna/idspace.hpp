#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "andna/types.hpp"

namespace andna {

// Repo-wide digest: SHA-256, truncated to its first 4 bytes, big-endian.
// Every placement decision (hostnames and public keys alike) goes through
// this one function so all nodes of a simulation agree bit for bit.
Ip digest32(const std::uint8_t* data, std::size_t len);
Ip digest32(const std::string& data);

// Hash of a hostname. Enforces the 1..512 byte bound.
Ip hash_hostname(const std::string& hostname);

// Level-1 gnode of an address: top 24 bits.
inline GnodeId gnode_of(Ip ip) { return GnodeId{ip.value >> 8}; }

// Circular distance on the 24-bit gnode ring.
std::uint32_t ring_distance(GnodeId a, GnodeId b);

// Nearest active gnode to the target, ties broken toward the smaller id.
// Throws EmptyNetwork when no gnode is active.
GnodeId rounded_hash_gnode(GnodeId target, const std::set<GnodeId>& active);

}  // namespace andna
