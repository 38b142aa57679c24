#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "caudit/bigint.hpp"
#include "caudit/digest.hpp"

namespace caudit::cryptbox {

struct PublicKey {
    BigUint modulus;
    BigUint exponent;
    int version = 1;
    std::uint64_t created_at = 0;   // epoch day
    std::uint64_t validity_days = 90;
};

struct KeyPair {
    BigUint modulus;
    BigUint public_exponent;
    BigUint private_exponent;
    int version = 1;
    std::uint64_t created_at = 0;   // epoch day
    std::uint64_t validity_days = 90;

    PublicKey public_part() const {
        return {modulus, public_exponent, version, created_at, validity_days};
    }
};

struct Ciphertext {
    BigUint value;
    int key_version = 1;
};

struct SessionKey {
    std::array<std::uint8_t, 16> bytes{};
};

/// Deterministic for a given seed: both primes and the Miller-Rabin bases
/// come from one mt19937_64 stream. bits must be even and >= 32.
KeyPair keygen(unsigned bits, std::uint64_t seed, std::uint64_t created_at = 0,
               std::uint64_t validity_days = 90);

/// Successor pair for scheduled replacement: fresh primes, version + 1.
KeyPair rotate(const KeyPair& old, unsigned bits, std::uint64_t seed,
               std::uint64_t today);

Ciphertext encrypt(const BigUint& m, const PublicKey& key);
BigUint decrypt(const Ciphertext& c, const KeyPair& key);

bool is_expired(const KeyPair& key, std::uint64_t today);
bool is_expired(const PublicKey& key, std::uint64_t today);

/// Self-inverse keystream cipher: block i of the stream is
/// H(session_key || i_be64), XORed over the payload.
std::vector<std::uint8_t> keystream_xor(std::span<const std::uint8_t> payload,
                                        const SessionKey& key);

SessionKey make_session_key(std::mt19937_64& rng);

/// Digest-domain image of a time case: H over its decimal text, truncated
/// to (modulus_bits - 8) leading bits, so it always fits under the modulus.
BigUint time_case_digest(const BigUint& time_case_value,
                         unsigned modulus_bits);

// Key record, single line: version modulus public_exponent private_exponent
// created_at validity_days (decimal fields).
std::string serialize(const KeyPair& key);
KeyPair parse_keypair(std::string_view record);

} // namespace caudit::cryptbox
