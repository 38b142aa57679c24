#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

#include "caudit/digest.hpp"

namespace caudit::wire {

// Canonical record format shared by the ledger, the registration store,
// cloud-store metadata, scenario scripts and traces.
//
// A record is one line of fields separated by single spaces:
//   int     canonical decimal, no leading zeros ("0" for zero)
//   str     <len>:<bytes>; len is the canonical decimal byte count and the
//           bytes are raw (LF is forbidden inside a field)
//   token   [a-z0-9_]+ from a caller-known set
//   hex     fixed-length lowercase hex (digests are hex of 32 bytes)
//
// Parsing is strict: any parsed record re-serializes to the identical
// bytes, so a stored record and its canonical form can never diverge.

class Writer {
public:
    Writer& u64(std::uint64_t v);
    Writer& big(const std::string& canonical_decimal);
    Writer& str(std::string_view s); // throws if s contains LF
    Writer& token(std::string_view t);
    Writer& digest(const Digest& d);
    Writer& hex(std::span<const std::uint8_t> bytes);

    const std::string& record() const { return buf_; }
    std::string take() { return std::move(buf_); }

private:
    void sep();
    std::string buf_;
    bool first_ = true;
};

class Reader {
public:
    explicit Reader(std::string_view record) : rec_(record) {}

    std::uint64_t u64();
    std::string big(); // canonical decimal, returned verbatim
    std::string str();
    std::string token();
    Digest digest();
    std::string hex(std::size_t byte_count);

    bool at_end() const { return pos_ == rec_.size(); }
    /// Throws malformed_record unless the whole record was consumed.
    void expect_end() const;

private:
    std::string_view field();
    std::string_view rec_;
    std::size_t pos_ = 0;
    bool first_ = true;
};

} // namespace caudit::wire
