#include "caudit/cryptbox.hpp"

#include <random>

#include "caudit/errors.hpp"
#include "caudit/wire.hpp"

namespace caudit::cryptbox {

namespace {

constexpr int kMillerRabinRounds = 40;

BigUint generate_prime(unsigned bits, std::mt19937_64& rng) {
    for (;;) {
        BigUint candidate = random_prime_candidate(bits, rng);
        if (is_probable_prime(candidate, kMillerRabinRounds, rng)) {
            return candidate;
        }
    }
}

} // namespace

KeyPair keygen(unsigned bits, std::uint64_t seed, std::uint64_t created_at,
               std::uint64_t validity_days) {
    if (bits < 32 || bits % 2 != 0) {
        raise(Errc::parameter, "key size must be even and >= 32 bits");
    }
    std::mt19937_64 rng(seed);
    const unsigned half = bits / 2;
    BigUint p = generate_prime(half, rng);
    BigUint q = generate_prime(half, rng);
    while (q == p) q = generate_prime(half, rng);

    BigUint modulus = p * q;
    BigUint lambda;
    {
        BigUint p1 = p - 1;
        BigUint q1 = q - 1;
        mpz_lcm(lambda.get_mpz_t(), p1.get_mpz_t(), q1.get_mpz_t());
    }

    BigUint e = 65537;
    BigUint g;
    for (;;) {
        mpz_gcd(g.get_mpz_t(), e.get_mpz_t(), lambda.get_mpz_t());
        if (g == 1) break;
        e += 2;
    }

    BigUint d;
    if (mpz_invert(d.get_mpz_t(), e.get_mpz_t(), lambda.get_mpz_t()) == 0) {
        raise(Errc::parameter, "exponent not invertible");
    }

    KeyPair kp;
    kp.modulus = std::move(modulus);
    kp.public_exponent = std::move(e);
    kp.private_exponent = std::move(d);
    kp.version = 1;
    kp.created_at = created_at;
    kp.validity_days = validity_days == 0 ? 90 : validity_days;
    return kp;
}

KeyPair rotate(const KeyPair& old, unsigned bits, std::uint64_t seed,
               std::uint64_t today) {
    KeyPair next = keygen(bits, seed, today, old.validity_days);
    next.version = old.version + 1;
    return next;
}

Ciphertext encrypt(const BigUint& m, const PublicKey& key) {
    if (m < 0) raise(Errc::parameter, "message must be non-negative");
    if (m >= key.modulus) {
        raise(Errc::message_too_large, "message must be below the modulus");
    }
    return Ciphertext{mod_pow(m, key.exponent, key.modulus), key.version};
}

BigUint decrypt(const Ciphertext& c, const KeyPair& key) {
    if (c.key_version != key.version) {
        raise(Errc::stale_key, "ciphertext was made under another key version");
    }
    if (c.value < 0 || c.value >= key.modulus) {
        raise(Errc::parameter, "ciphertext out of range");
    }
    return mod_pow(c.value, key.private_exponent, key.modulus);
}

bool is_expired(const KeyPair& key, std::uint64_t today) {
    return today >= key.created_at + key.validity_days;
}

bool is_expired(const PublicKey& key, std::uint64_t today) {
    return today >= key.created_at + key.validity_days;
}

std::vector<std::uint8_t> keystream_xor(std::span<const std::uint8_t> payload,
                                        const SessionKey& key) {
    std::vector<std::uint8_t> out(payload.begin(), payload.end());
    std::array<std::uint8_t, 24> block_input{};
    std::copy(key.bytes.begin(), key.bytes.end(), block_input.begin());
    for (std::size_t offset = 0, counter = 0; offset < out.size();
         offset += 32, ++counter) {
        for (int i = 0; i < 8; ++i) {
            block_input[16 + i] =
                static_cast<std::uint8_t>(counter >> (56 - 8 * i));
        }
        Digest ks = sha256(std::span<const std::uint8_t>(block_input));
        const std::size_t n = std::min<std::size_t>(32, out.size() - offset);
        for (std::size_t i = 0; i < n; ++i) out[offset + i] ^= ks[i];
    }
    return out;
}

SessionKey make_session_key(std::mt19937_64& rng) {
    SessionKey key;
    for (int i = 0; i < 2; ++i) {
        std::uint64_t w = rng();
        for (int j = 0; j < 8; ++j) {
            key.bytes[8 * i + j] = static_cast<std::uint8_t>(w >> (8 * j));
        }
    }
    return key;
}

BigUint time_case_digest(const BigUint& time_case_value,
                         unsigned modulus_bits) {
    if (modulus_bits < 16) raise(Errc::parameter, "modulus too small");
    Digest d = sha256(big_to_dec(time_case_value));
    BigUint v = big_from_bytes_be(std::span<const std::uint8_t>(d.data(),
                                                                d.size()));
    const unsigned keep = modulus_bits - 8;
    if (keep < 256) v >>= (256 - keep);
    return v;
}

std::string serialize(const KeyPair& key) {
    wire::Writer w;
    w.u64(static_cast<std::uint64_t>(key.version))
        .big(big_to_dec(key.modulus))
        .big(big_to_dec(key.public_exponent))
        .big(big_to_dec(key.private_exponent))
        .u64(key.created_at)
        .u64(key.validity_days);
    return w.take();
}

KeyPair parse_keypair(std::string_view record) {
    wire::Reader r(record);
    KeyPair kp;
    kp.version = static_cast<int>(r.u64());
    kp.modulus = big_from_dec(r.big());
    kp.public_exponent = big_from_dec(r.big());
    kp.private_exponent = big_from_dec(r.big());
    kp.created_at = r.u64();
    kp.validity_days = r.u64();
    r.expect_end();
    return kp;
}

} // namespace caudit::cryptbox
