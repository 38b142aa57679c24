#include "caudit/wire.hpp"

#include <charconv>

#include "caudit/errors.hpp"

namespace caudit::wire {

static bool is_token_char(char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
}

static bool is_hex_char(char c) {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f');
}

void Writer::sep() {
    if (!first_) buf_.push_back(' ');
    first_ = false;
}

Writer& Writer::u64(std::uint64_t v) {
    sep();
    buf_ += std::to_string(v);
    return *this;
}

Writer& Writer::big(const std::string& canonical_decimal) {
    sep();
    buf_ += canonical_decimal;
    return *this;
}

Writer& Writer::str(std::string_view s) {
    if (s.find('\n') != std::string_view::npos) {
        raise(Errc::malformed_record, "string field may not contain LF");
    }
    sep();
    buf_ += std::to_string(s.size());
    buf_.push_back(':');
    buf_.append(s);
    return *this;
}

Writer& Writer::token(std::string_view t) {
    if (t.empty()) raise(Errc::malformed_record, "empty token field");
    for (char c : t) {
        if (!is_token_char(c)) {
            raise(Errc::malformed_record, "invalid token character");
        }
    }
    sep();
    buf_.append(t);
    return *this;
}

Writer& Writer::hex(std::span<const std::uint8_t> bytes) {
    sep();
    buf_ += to_hex(bytes);
    return *this;
}

Writer& Writer::digest(const Digest& d) {
    return hex(std::span<const std::uint8_t>(d.data(), d.size()));
}

// ---- Reader ---------------------------------------------------------------

static std::uint64_t parse_u64_strict(std::string_view digits) {
    if (digits.empty()) raise(Errc::malformed_record, "expected integer");
    if (digits.size() > 1 && digits.front() == '0') {
        raise(Errc::malformed_record, "leading zero in integer");
    }
    std::uint64_t value = 0;
    auto [ptr, ec] =
        std::from_chars(digits.data(), digits.data() + digits.size(), value);
    if (ec != std::errc{} || ptr != digits.data() + digits.size()) {
        raise(Errc::malformed_record, "integer out of range");
    }
    return value;
}

std::string_view Reader::field() {
    if (first_) {
        first_ = false;
    } else {
        if (pos_ >= rec_.size() || rec_[pos_] != ' ') {
            raise(Errc::malformed_record, "missing field separator");
        }
        ++pos_;
    }
    return rec_.substr(pos_);
}

std::uint64_t Reader::u64() {
    std::string_view rest = field();
    std::size_t n = 0;
    while (n < rest.size() && rest[n] >= '0' && rest[n] <= '9') ++n;
    std::uint64_t v = parse_u64_strict(rest.substr(0, n));
    pos_ += n;
    return v;
}

std::string Reader::big() {
    std::string_view rest = field();
    std::size_t n = 0;
    while (n < rest.size() && rest[n] >= '0' && rest[n] <= '9') ++n;
    if (n == 0) raise(Errc::malformed_record, "expected integer");
    if (n > 1 && rest[0] == '0') {
        raise(Errc::malformed_record, "leading zero in integer");
    }
    pos_ += n;
    return std::string(rest.substr(0, n));
}

std::string Reader::str() {
    std::string_view rest = field();
    std::size_t n = 0;
    while (n < rest.size() && rest[n] >= '0' && rest[n] <= '9') ++n;
    std::uint64_t len = parse_u64_strict(rest.substr(0, n));
    if (n >= rest.size() || rest[n] != ':') {
        raise(Errc::malformed_record, "expected ':' after string length");
    }
    if (rest.size() - n - 1 < len) {
        raise(Errc::malformed_record, "string field truncated");
    }
    std::string_view body = rest.substr(n + 1, len);
    if (body.find('\n') != std::string_view::npos) {
        raise(Errc::malformed_record, "LF inside string field");
    }
    pos_ += n + 1 + len;
    return std::string(body);
}

std::string Reader::token() {
    std::string_view rest = field();
    std::size_t n = 0;
    while (n < rest.size() && is_token_char(rest[n])) ++n;
    if (n == 0) raise(Errc::malformed_record, "expected token");
    pos_ += n;
    return std::string(rest.substr(0, n));
}

std::string Reader::hex(std::size_t byte_count) {
    std::string_view rest = field();
    const std::size_t want = byte_count * 2;
    if (rest.size() < want) raise(Errc::malformed_record, "hex field truncated");
    for (std::size_t i = 0; i < want; ++i) {
        if (!is_hex_char(rest[i])) {
            raise(Errc::malformed_record, "invalid hex character");
        }
    }
    pos_ += want;
    return std::string(rest.substr(0, want));
}

Digest Reader::digest() {
    return digest_from_hex(hex(32));
}

void Reader::expect_end() const {
    if (!at_end()) raise(Errc::malformed_record, "trailing bytes in record");
}

} // namespace caudit::wire
