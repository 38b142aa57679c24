#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace caudit {

// The artifact-wide 256-bit hash is SHA-256. Every digest in the system
// (ledger block hashes, file block checksums, security-answer digests,
// session tokens, keystream blocks) is produced through the helpers below,
// so the primitive is a build-time constant of this one header.
using Digest = std::array<std::uint8_t, 32>;

Digest sha256(std::span<const std::uint8_t> data);
Digest sha256(std::string_view data);

std::string to_hex(const Digest& d);
std::string to_hex(std::span<const std::uint8_t> bytes);

/// Strict inverse of to_hex for 32-byte digests; throws malformed_record.
Digest digest_from_hex(std::string_view hex);

inline constexpr Digest kZeroDigest{};

} // namespace caudit
