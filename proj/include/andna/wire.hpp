#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "andna/protocol.hpp"

namespace andna {

// Canonical message serialization: big-endian fixed-width integers and
// u32-length-prefixed byte fields, written in declaration order. The
// signature field is excluded; signing covers exactly these bytes.
// Layout is documented in docs/wire.md and pinned by golden tests.
Bytes canonical_bytes(const Message& msg);

Bytes entry_bytes(const AndnaEntry& entry);

std::string to_hex(const Bytes& b);

}  // namespace andna
