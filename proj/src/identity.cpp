#include "andna/identity.hpp"

#include <sodium.h>

#include <cstring>
#include <fstream>

#include "andna/idspace.hpp"

namespace andna {

namespace {

constexpr std::size_t kTestKeyLen = 16;

void ensure_sodium() {
    static const int rc = sodium_init();
    if (rc < 0)
        throw std::runtime_error("sodium_init failed");
}

void fill_seed(std::uint8_t* out, std::size_t len, std::optional<std::uint64_t> seed) {
    if (seed) {
        // Stretch the 64-bit seed through the repo digest so distinct seeds
        // give unrelated key material.
        std::uint8_t s[8];
        for (int i = 0; i < 8; ++i)
            s[i] = std::uint8_t(*seed >> (8 * (7 - i)));
        unsigned char block[crypto_hash_sha256_BYTES];
        crypto_hash_sha256(block, s, sizeof(s));
        for (std::size_t i = 0; i < len; ++i)
            out[i] = block[i % sizeof(block)];
    } else {
        randombytes_buf(out, len);
    }
}

SigScheme scheme_of(const PubKey& pk) {
    if (pk.bytes.empty() || pk.bytes.size() > kMaxPubKeyLen)
        throw MalformedKey("public key has invalid size");
    switch (pk.bytes[0]) {
    case 1:
        if (pk.bytes.size() != 1 + crypto_sign_PUBLICKEYBYTES)
            throw MalformedKey("ed25519 key has wrong length");
        return SigScheme::Ed25519;
    case 2:
        if (pk.bytes.size() != 1 + kTestKeyLen)
            throw MalformedKey("test key has wrong length");
        return SigScheme::TestMac;
    default:
        throw MalformedKey("unknown key scheme tag");
    }
}

Signature mac_sign(const Bytes& key_material, const Bytes& msg) {
    Bytes buf;
    buf.reserve(key_material.size() + msg.size());
    buf.insert(buf.end(), key_material.begin(), key_material.end());
    buf.insert(buf.end(), msg.begin(), msg.end());
    unsigned char h[crypto_hash_sha256_BYTES];
    crypto_hash_sha256(h, buf.data(), buf.size());
    return Signature(h, h + sizeof(h));
}

}  // namespace

KeyPair keygen(SigScheme scheme, std::optional<std::uint64_t> seed) {
    ensure_sodium();
    KeyPair kp;
    if (scheme == SigScheme::Ed25519) {
        std::uint8_t sd[crypto_sign_SEEDBYTES];
        fill_seed(sd, sizeof(sd), seed);
        std::uint8_t pk[crypto_sign_PUBLICKEYBYTES];
        std::uint8_t sk[crypto_sign_SECRETKEYBYTES];
        crypto_sign_seed_keypair(pk, sk, sd);
        kp.pub.bytes.push_back(1);
        kp.pub.bytes.insert(kp.pub.bytes.end(), pk, pk + sizeof(pk));
        kp.priv.assign(sk, sk + sizeof(sk));
    } else {
        std::uint8_t key[kTestKeyLen];
        fill_seed(key, sizeof(key), seed);
        kp.pub.bytes.push_back(2);
        kp.pub.bytes.insert(kp.pub.bytes.end(), key, key + sizeof(key));
        kp.priv.assign(key, key + sizeof(key));
    }
    return kp;
}

Signature sign(const KeyPair& kp, const Bytes& msg) {
    ensure_sodium();
    switch (scheme_of(kp.pub)) {
    case SigScheme::Ed25519: {
        std::uint8_t sig[crypto_sign_BYTES];
        unsigned long long siglen = 0;
        crypto_sign_detached(sig, &siglen, msg.data(), msg.size(), kp.priv.data());
        return Signature(sig, sig + siglen);
    }
    case SigScheme::TestMac:
        return mac_sign(kp.priv, msg);
    }
    throw MalformedKey("unreachable scheme");
}

bool verify(const PubKey& pk, const Bytes& msg, const Signature& sig) {
    ensure_sodium();
    switch (scheme_of(pk)) {
    case SigScheme::Ed25519: {
        if (sig.size() != crypto_sign_BYTES)
            return false;
        return crypto_sign_verify_detached(sig.data(), msg.data(), msg.size(),
                                           pk.bytes.data() + 1) == 0;
    }
    case SigScheme::TestMac: {
        // Transparent double: the pub key carries the MAC key.
        Bytes key(pk.bytes.begin() + 1, pk.bytes.end());
        return sig == mac_sign(key, msg);
    }
    }
    return false;
}

Ip counter_ip(const PubKey& pk) {
    scheme_of(pk);  // validates
    return digest32(pk.bytes.data(), pk.bytes.size());
}

PubKey read_pubkey_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot read key file: " + path);
    PubKey pk;
    pk.bytes.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    return pk;
}

void write_pubkey_file(const std::string& path, const PubKey& pk) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw std::runtime_error("cannot write key file: " + path);
    out.write(reinterpret_cast<const char*>(pk.bytes.data()),
              std::streamsize(pk.bytes.size()));
}

}  // namespace andna
