#include "caudit/bigint.hpp"

#include <cctype>
#include <vector>

#include "caudit/errors.hpp"

namespace caudit {

std::string big_to_dec(const BigUint& v) {
    return v.get_str(10);
}

BigUint big_from_dec(std::string_view s) {
    if (s.empty()) raise(Errc::malformed_record, "empty integer field");
    for (char c : s) {
        if (c < '0' || c > '9') {
            raise(Errc::malformed_record, "non-digit in integer field");
        }
    }
    if (s.size() > 1 && s.front() == '0') {
        raise(Errc::malformed_record, "leading zero in integer field");
    }
    BigUint v;
    if (v.set_str(std::string(s), 10) != 0) {
        raise(Errc::malformed_record, "unparseable integer field");
    }
    return v;
}

BigUint big_from_bytes_be(std::span<const std::uint8_t> bytes) {
    BigUint v = 0;
    for (std::uint8_t b : bytes) {
        v <<= 8;
        v += b;
    }
    return v;
}

std::size_t bit_length(const BigUint& v) {
    if (v == 0) return 0;
    return mpz_sizeinbase(v.get_mpz_t(), 2);
}

BigUint mod_pow(const BigUint& base, const BigUint& exp, const BigUint& mod) {
    if (mod <= 0) raise(Errc::parameter, "mod_pow requires positive modulus");
    BigUint out;
    mpz_powm(out.get_mpz_t(), base.get_mpz_t(), exp.get_mpz_t(),
             mod.get_mpz_t());
    return out;
}

std::uint64_t uniform_below(std::uint64_t bound, std::mt19937_64& rng) {
    if (bound == 0) raise(Errc::parameter, "uniform_below bound must be > 0");
    // Rejection sampling keeps the draw exactly uniform and, unlike the
    // std distributions, bit-stable across standard library implementations.
    const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % bound);
    for (;;) {
        std::uint64_t r = rng();
        if (r < limit) return r % bound;
    }
}

BigUint big_uniform_below(const BigUint& bound, std::mt19937_64& rng) {
    if (bound <= 0) raise(Errc::parameter, "bound must be positive");
    const std::size_t bits = bit_length(bound);
    const std::size_t bytes = (bits + 7) / 8;
    std::vector<std::uint8_t> buf(bytes);
    for (;;) {
        for (std::size_t i = 0; i < bytes; i += 8) {
            std::uint64_t w = rng();
            for (std::size_t j = 0; j < 8 && i + j < bytes; ++j) {
                buf[i + j] = static_cast<std::uint8_t>(w >> (8 * j));
            }
        }
        // Mask the top byte down to the bound's width, then reject overshoot.
        const unsigned top_bits = bits % 8 == 0 ? 8 : bits % 8;
        buf[0] &= static_cast<std::uint8_t>((1u << top_bits) - 1u);
        BigUint v = big_from_bytes_be(buf);
        if (v < bound) return v;
    }
}

BigUint random_prime_candidate(unsigned bits, std::mt19937_64& rng) {
    if (bits < 8) raise(Errc::parameter, "prime candidate needs >= 8 bits");
    const std::size_t bytes = (bits + 7) / 8;
    std::vector<std::uint8_t> buf(bytes);
    for (std::size_t i = 0; i < bytes; i += 8) {
        std::uint64_t w = rng();
        for (std::size_t j = 0; j < 8 && i + j < bytes; ++j) {
            buf[i + j] = static_cast<std::uint8_t>(w >> (8 * j));
        }
    }
    BigUint v = big_from_bytes_be(buf);
    BigUint one = 1;
    mpz_tdiv_r_2exp(v.get_mpz_t(), v.get_mpz_t(), bits); // keep low `bits`
    v |= (one << (bits - 1)) | (one << (bits - 2));       // full width product
    v |= 1;                                               // odd
    return v;
}

bool is_probable_prime(const BigUint& n, int rounds, std::mt19937_64& rng) {
    if (n < 2) return false;
    for (unsigned small : {2u, 3u, 5u, 7u, 11u, 13u, 17u, 19u, 23u, 29u, 31u,
                           37u}) {
        if (n == small) return true;
        if (mpz_divisible_ui_p(n.get_mpz_t(), small)) return false;
    }
    // n - 1 = d * 2^s with d odd
    BigUint n_minus_1 = n - 1;
    BigUint d = n_minus_1;
    unsigned long s = mpz_scan1(d.get_mpz_t(), 0);
    d >>= s;
    for (int i = 0; i < rounds; ++i) {
        BigUint a = 2 + big_uniform_below(n - 4, rng); // a in [2, n-2]
        BigUint x = mod_pow(a, d, n);
        if (x == 1 || x == n_minus_1) continue;
        bool composite = true;
        for (unsigned long r = 1; r < s; ++r) {
            x = mod_pow(x, 2, n);
            if (x == n_minus_1) {
                composite = false;
                break;
            }
        }
        if (composite) return false;
    }
    return true;
}

} // namespace caudit
