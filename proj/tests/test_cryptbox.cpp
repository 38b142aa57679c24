#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <set>
#include <vector>

#include "caudit/cryptbox.hpp"
#include "caudit/errors.hpp"

using namespace caudit;
using namespace caudit::cryptbox;

// The classic textbook pair p=61, q=53: n=3233, e=17, d=413.
static KeyPair toy_keypair() {
    KeyPair kp;
    kp.modulus = 3233;
    kp.public_exponent = 17;
    kp.private_exponent = 413;
    kp.version = 1;
    return kp;
}

TEST_CASE("keygen is deterministic per seed and hits the exact bit length") {
    KeyPair a = keygen(32, 1);
    KeyPair b = keygen(32, 1);
    CHECK(a.modulus == b.modulus);
    CHECK(a.public_exponent == b.public_exponent);
    CHECK(a.private_exponent == b.private_exponent);
    for (unsigned bits : {32u, 64u, 128u}) {
        KeyPair kp = keygen(bits, 99);
        CHECK(bit_length(kp.modulus) == bits);
    }
    CHECK_THROWS_AS(keygen(16, 1), Error);
    CHECK_THROWS_AS(keygen(33, 1), Error);
}

TEST_CASE("distinct seeds give distinct moduli") {
    std::set<std::string> moduli;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        moduli.insert(big_to_dec(keygen(32, seed).modulus));
    }
    CHECK(moduli.size() == 100);
}

TEST_CASE("encrypt fixed points and the classic example") {
    KeyPair kp = toy_keypair();
    PublicKey pub = kp.public_part();
    CHECK(encrypt(BigUint(0), pub).value == 0);
    CHECK(encrypt(BigUint(1), pub).value == 1);
    CHECK(encrypt(BigUint(65), pub).value == 2790);
    // odd exponent: (n-1)^e = -1 mod n
    CHECK(encrypt(kp.modulus - 1, pub).value == kp.modulus - 1);
    CHECK_THROWS_AS(encrypt(kp.modulus, pub), Error);
}

TEST_CASE("decrypt inverts encrypt and checks the key version") {
    KeyPair kp = toy_keypair();
    CHECK(decrypt(Ciphertext{2790, 1}, kp) == 65);
    CHECK(decrypt(encrypt(BigUint(42), kp.public_part()), kp) == 42);
    CHECK_THROWS_AS(decrypt(Ciphertext{2790, 2}, kp), Error);
}

TEST_CASE("round-trip identity, 1000 random messages per key size") {
    for (unsigned bits : {32u, 64u, 128u}) {
        KeyPair kp = keygen(bits, 7);
        PublicKey pub = kp.public_part();
        std::mt19937_64 rng(bits);
        for (int i = 0; i < 1000; ++i) {
            BigUint m = big_uniform_below(kp.modulus, rng);
            CHECK(decrypt(encrypt(m, pub), kp) == m);
        }
    }
}

TEST_CASE("encryption is a bijection on the toy modulus") {
    KeyPair kp = toy_keypair();
    PublicKey pub = kp.public_part();
    std::vector<bool> hit(3233, false);
    for (long m = 0; m < 3233; ++m) {
        const BigUint c = encrypt(BigUint(m), pub).value;
        const long ci = c.get_si();
        CHECK(!hit[ci]);
        hit[ci] = true;
    }
}

TEST_CASE("expiry boundaries") {
    KeyPair kp = keygen(32, 5, /*created_at=*/0, /*validity_days=*/90);
    CHECK(kp.validity_days == 90);
    CHECK(!is_expired(kp, 89));
    CHECK(is_expired(kp, 90));
    CHECK(is_expired(kp, 400));
    CHECK(!is_expired(kp.public_part(), 89));
    CHECK(is_expired(kp.public_part(), 90));
}

TEST_CASE("rotate bumps the version and re-dates the pair") {
    KeyPair kp = keygen(32, 5, 0, 90);
    KeyPair next = rotate(kp, 32, 6, 91);
    CHECK(next.version == 2);
    CHECK(next.created_at == 91);
    CHECK(next.modulus != kp.modulus);
    CHECK_THROWS_AS(decrypt(encrypt(BigUint(9), kp.public_part()), next),
                    Error); // stale version
}

TEST_CASE("keystream_xor is a length-preserving involution") {
    SessionKey key;
    for (std::size_t i = 0; i < key.bytes.size(); ++i) {
        key.bytes[i] = static_cast<std::uint8_t>(i + 1);
    }
    std::mt19937_64 rng(3);
    for (int iter = 0; iter < 50; ++iter) {
        std::vector<std::uint8_t> payload(rng() % 5000);
        for (auto& b : payload) b = static_cast<std::uint8_t>(rng());
        auto enc = keystream_xor(payload, key);
        CHECK(enc.size() == payload.size());
        if (!payload.empty()) CHECK(enc != payload);
        CHECK(keystream_xor(enc, key) == payload);
    }
    CHECK(keystream_xor({}, key).empty());
}

TEST_CASE("session keys are deterministic per engine state") {
    std::mt19937_64 a(10), b(10);
    CHECK(make_session_key(a).bytes == make_session_key(b).bytes);
}

TEST_CASE("time_case_digest stays below the modulus headroom") {
    std::mt19937_64 rng(12);
    for (int i = 0; i < 200; ++i) {
        BigUint tc = big_uniform_below(BigUint(1) << 220, rng) + 1;
        for (unsigned bits : {32u, 64u, 128u, 512u}) {
            BigUint d = time_case_digest(tc, bits);
            CHECK(d < (BigUint(1) << (bits - 8)));
        }
        CHECK(time_case_digest(tc, 128) == time_case_digest(tc, 128));
    }
}

TEST_CASE("key record serialization round-trips in field order") {
    KeyPair kp = keygen(64, 21, 10, 45);
    kp.version = 3;
    const std::string record = serialize(kp);
    // version modulus e d created_at validity_days
    CHECK(record ==
          "3 " + big_to_dec(kp.modulus) + " " +
              big_to_dec(kp.public_exponent) + " " +
              big_to_dec(kp.private_exponent) + " 10 45");
    KeyPair back = parse_keypair(record);
    CHECK(back.version == 3);
    CHECK(back.modulus == kp.modulus);
    CHECK(back.public_exponent == kp.public_exponent);
    CHECK(back.private_exponent == kp.private_exponent);
    CHECK(back.created_at == 10);
    CHECK(back.validity_days == 45);
}
