#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "andna/types.hpp"

namespace andna {

using Bytes = std::vector<std::uint8_t>;

// Serialized public key. Byte 0 is the scheme tag, the rest is key material:
//   0x01  Ed25519 (32-byte key)
//   0x02  keyed-MAC test double; the key material doubles as the secret,
//         which keeps property tests fast and fully transparent.
struct PubKey {
    Bytes bytes;

    friend bool operator==(const PubKey& a, const PubKey& b) { return a.bytes == b.bytes; }
    friend bool operator!=(const PubKey& a, const PubKey& b) { return a.bytes != b.bytes; }
    friend bool operator<(const PubKey& a, const PubKey& b) { return a.bytes < b.bytes; }
};

struct KeyPair {
    PubKey pub;
    Bytes priv;  // opaque; layout depends on the scheme
};

using Signature = Bytes;

enum class SigScheme : std::uint8_t {
    Ed25519 = 1,
    TestMac = 2,
};

// Fresh key pair. With a seed the generation is reproducible; without one
// it draws from the OS entropy source.
KeyPair keygen(SigScheme scheme = SigScheme::Ed25519,
               std::optional<std::uint64_t> seed = std::nullopt);

Signature sign(const KeyPair& kp, const Bytes& msg);
// True iff sig was produced over msg by the pair owning pk.
// Throws MalformedKey when pk cannot be parsed.
bool verify(const PubKey& pk, const Bytes& msg, const Signature& sig);

// Address of the counter node responsible for this key: digest32(pub bytes).
Ip counter_ip(const PubKey& pk);

// Raw octet import/export, the format the snsd_nodes pub_key_file column uses.
PubKey read_pubkey_file(const std::string& path);
void write_pubkey_file(const std::string& path, const PubKey& pk);

}  // namespace andna
