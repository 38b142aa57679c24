#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>

namespace caudit {

// Unbounded non-negative integers. Derivation arithmetic never reduces
// modulo anything, so values grow with identity length; GMP carries them.
using BigUint = mpz_class;

std::string big_to_dec(const BigUint& v);

/// Strict canonical parse: digits only, no leading zeros except "0" itself.
BigUint big_from_dec(std::string_view s);

BigUint big_from_bytes_be(std::span<const std::uint8_t> bytes);

std::size_t bit_length(const BigUint& v);

BigUint mod_pow(const BigUint& base, const BigUint& exp, const BigUint& mod);

/// Uniform in [0, bound) by rejection on raw engine output; bound > 0.
std::uint64_t uniform_below(std::uint64_t bound, std::mt19937_64& rng);

/// Uniform BigUint in [0, bound) from the engine's byte stream.
BigUint big_uniform_below(const BigUint& bound, std::mt19937_64& rng);

/// Random odd integer of exactly `bits` bits with the top two bits set,
/// so products of two such integers keep their full width.
BigUint random_prime_candidate(unsigned bits, std::mt19937_64& rng);

/// Miller–Rabin over the supplied deterministic stream.
bool is_probable_prime(const BigUint& n, int rounds, std::mt19937_64& rng);

} // namespace caudit
