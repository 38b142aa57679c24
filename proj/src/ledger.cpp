#include "caudit/ledger.hpp"

#include <fstream>
#include <sstream>

#include "caudit/errors.hpp"
#include "caudit/wire.hpp"

namespace caudit::ledger {

std::string block_preimage(std::uint64_t index, const Digest& prev_hash,
                           const std::vector<std::string>& entries,
                           std::uint64_t created_at) {
    wire::Writer w;
    w.u64(index).digest(prev_hash).u64(entries.size());
    for (const std::string& e : entries) w.str(e);
    w.u64(created_at);
    return w.take();
}

Digest block_hash_of(std::uint64_t index, const Digest& prev_hash,
                     const std::vector<std::string>& entries,
                     std::uint64_t created_at) {
    return sha256(block_preimage(index, prev_hash, entries, created_at));
}

std::string serialize_block(const LedgerBlock& b) {
    std::string line =
        block_preimage(b.index, b.prev_hash, b.entries, b.created_at);
    line.push_back(' ');
    line += to_hex(b.block_hash);
    return line;
}

LedgerBlock parse_block(std::string_view line) {
    wire::Reader r(line);
    LedgerBlock b;
    b.index = r.u64();
    b.prev_hash = r.digest();
    const std::uint64_t count = r.u64();
    b.entries.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) b.entries.push_back(r.str());
    b.created_at = r.u64();
    b.block_hash = r.digest();
    r.expect_end();
    return b;
}

Ledger::Ledger(std::size_t batch_size) : batch_size_(batch_size) {
    if (batch_size_ == 0) raise(Errc::parameter, "batch size must be positive");
}

LedgerBlock Ledger::seal(std::uint64_t now_minute) {
    LedgerBlock b;
    b.index = blocks_.size();
    b.prev_hash = blocks_.empty() ? kZeroDigest : blocks_.back().block_hash;
    b.entries = std::move(pending_);
    pending_.clear();
    b.created_at = now_minute;
    b.block_hash = block_hash_of(b.index, b.prev_hash, b.entries,
                                 b.created_at);
    blocks_.push_back(b);
    return b;
}

std::optional<LedgerBlock> Ledger::append(std::string entry,
                                          std::uint64_t now_minute) {
    if (auto bad = first_invalid_block()) {
        raise(Errc::chain_invalid,
              "chain invalid at block " + std::to_string(*bad) +
                  "; append refused");
    }
    pending_.push_back(std::move(entry));
    if (pending_.size() >= batch_size_) return seal(now_minute);
    return std::nullopt;
}

std::optional<LedgerBlock> Ledger::flush(std::uint64_t now_minute) {
    if (pending_.empty()) return std::nullopt;
    if (auto bad = first_invalid_block()) {
        raise(Errc::chain_invalid,
              "chain invalid at block " + std::to_string(*bad) +
                  "; flush refused");
    }
    return seal(now_minute);
}

std::optional<std::uint64_t> Ledger::first_invalid_block() const {
    Digest prev = kZeroDigest;
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
        const LedgerBlock& b = blocks_[i];
        if (b.index != i || b.prev_hash != prev ||
            b.block_hash !=
                block_hash_of(b.index, b.prev_hash, b.entries, b.created_at)) {
            return i;
        }
        prev = b.block_hash;
    }
    return std::nullopt;
}

std::vector<std::string> Ledger::query(std::string_view subject,
                                       std::uint64_t from_minute,
                                       std::uint64_t to_minute) const {
    if (auto bad = first_invalid_block()) {
        raise(Errc::chain_invalid,
              "chain invalid at block " + std::to_string(*bad));
    }
    std::vector<std::string> out;
    auto consider = [&](const std::string& entry) {
        EntryInfo info = entry_info(entry);
        if (!subject.empty() && info.subject != subject) return;
        if (info.minute < from_minute || info.minute > to_minute) return;
        out.push_back(entry);
    };
    for (const LedgerBlock& b : blocks_) {
        for (const std::string& e : b.entries) consider(e);
    }
    for (const std::string& e : pending_) consider(e);
    return out;
}

std::size_t Ledger::entry_count() const {
    std::size_t n = pending_.size();
    for (const LedgerBlock& b : blocks_) n += b.entries.size();
    return n;
}

std::string Ledger::serialize_chain() const {
    std::string out;
    for (const LedgerBlock& b : blocks_) {
        out += serialize_block(b);
        out.push_back('\n');
    }
    return out;
}

void Ledger::save(const std::filesystem::path& chain_file) const {
    {
        std::ofstream f(chain_file, std::ios::binary | std::ios::trunc);
        if (!f) raise(Errc::io_failure, "cannot write " + chain_file.string());
        f << serialize_chain();
    }
    std::filesystem::path pending_file = chain_file;
    pending_file += ".pending";
    std::ofstream f(pending_file, std::ios::binary | std::ios::trunc);
    if (!f) raise(Errc::io_failure, "cannot write " + pending_file.string());
    for (const std::string& e : pending_) f << e << '\n';
}

static std::vector<std::string> read_lines_strict(
    const std::filesystem::path& path, bool must_exist) {
    std::vector<std::string> lines;
    std::ifstream f(path, std::ios::binary);
    if (!f) {
        if (must_exist) raise(Errc::io_failure, "cannot read " + path.string());
        return lines;
    }
    std::ostringstream buf;
    buf << f.rdbuf();
    std::string all = buf.str();
    std::size_t start = 0;
    while (start < all.size()) {
        std::size_t nl = all.find('\n', start);
        if (nl == std::string::npos) {
            // missing trailing newline: keep the fragment as a (bad) line
            lines.push_back(all.substr(start));
            break;
        }
        lines.push_back(all.substr(start, nl - start));
        start = nl + 1;
    }
    return lines;
}

Ledger Ledger::load(const std::filesystem::path& chain_file,
                    std::size_t batch_size) {
    Ledger led(batch_size);
    for (const std::string& line : read_lines_strict(chain_file, false)) {
        led.blocks_.push_back(parse_block(line));
    }
    std::filesystem::path pending_file = chain_file;
    pending_file += ".pending";
    for (std::string& line : read_lines_strict(pending_file, false)) {
        led.pending_.push_back(std::move(line));
    }
    return led;
}

std::optional<std::uint64_t> verify_chain_file(
    const std::filesystem::path& chain_file) {
    std::vector<std::string> lines = read_lines_strict(chain_file, false);
    Digest prev = kZeroDigest;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        LedgerBlock b;
        try {
            b = parse_block(lines[i]);
        } catch (const Error&) {
            return i;
        }
        if (serialize_block(b) != lines[i]) return i;
        if (b.index != i || b.prev_hash != prev ||
            b.block_hash !=
                block_hash_of(b.index, b.prev_hash, b.entries, b.created_at)) {
            return i;
        }
        prev = b.block_hash;
    }
    return std::nullopt;
}

// ---- entry vocabulary ------------------------------------------------------

std::string make_attempt_entry(const AttemptEntry& e) {
    wire::Writer w;
    w.token("attempt")
        .str(e.client_id)
        .token(e.status)
        .u64(e.minute)
        .token(e.actor)
        .str(e.detail);
    return w.take();
}

std::string make_upload_entry(const UploadEntry& e) {
    wire::Writer w;
    w.token("upload")
        .str(e.file_id)
        .str(e.name)
        .u64(e.size)
        .str(e.owner)
        .u64(e.uploaded_at);
    return w.take();
}

std::string make_audit_entry(const AuditEntry& e) {
    wire::Writer w;
    w.token("audit")
        .str(e.file_id)
        .str(e.auditor)
        .u64(e.block_count)
        .u64(e.duration_ms)
        .token(e.verdict)
        .u64(e.at)
        .u64(e.reaudit ? 1 : 0);
    return w.take();
}

std::string make_blacklist_entry(std::string_view auditor, std::uint64_t at,
                                 std::string_view detail) {
    wire::Writer w;
    w.token("blacklist").str(auditor).u64(at).str(detail);
    return w.take();
}

std::string make_admin_entry(std::string_view client_id,
                             std::string_view action, std::uint64_t minute) {
    wire::Writer w;
    w.token("admin").str(client_id).str(action).u64(minute);
    return w.take();
}

std::optional<AttemptEntry> parse_attempt(std::string_view entry) {
    wire::Reader r(entry);
    if (r.token() != "attempt") return std::nullopt;
    AttemptEntry e;
    e.client_id = r.str();
    e.status = r.token();
    e.minute = r.u64();
    e.actor = r.token();
    e.detail = r.str();
    r.expect_end();
    return e;
}

std::optional<UploadEntry> parse_upload(std::string_view entry) {
    wire::Reader r(entry);
    if (r.token() != "upload") return std::nullopt;
    UploadEntry e;
    e.file_id = r.str();
    e.name = r.str();
    e.size = r.u64();
    e.owner = r.str();
    e.uploaded_at = r.u64();
    r.expect_end();
    return e;
}

std::optional<AuditEntry> parse_audit(std::string_view entry) {
    wire::Reader r(entry);
    if (r.token() != "audit") return std::nullopt;
    AuditEntry e;
    e.file_id = r.str();
    e.auditor = r.str();
    e.block_count = r.u64();
    e.duration_ms = r.u64();
    e.verdict = r.token();
    e.at = r.u64();
    e.reaudit = r.u64() != 0;
    r.expect_end();
    return e;
}

EntryInfo entry_info(std::string_view entry) {
    wire::Reader r(entry);
    EntryInfo info;
    info.kind = r.token();
    if (info.kind == "attempt") {
        info.subject = r.str();
        r.token();
        info.minute = r.u64();
    } else if (info.kind == "upload") {
        r.str(); // file_id
        r.str(); // name
        r.u64(); // size
        info.subject = r.str();
        info.minute = r.u64();
    } else if (info.kind == "audit") {
        r.str(); // file_id
        info.subject = r.str();
        r.u64();
        r.u64();
        r.token();
        info.minute = r.u64();
    } else if (info.kind == "blacklist") {
        info.subject = r.str();
        info.minute = r.u64();
    } else if (info.kind == "admin") {
        info.subject = r.str();
        r.str();
        info.minute = r.u64();
    } else {
        raise(Errc::malformed_record, "unknown ledger entry kind: " + info.kind);
    }
    return info;
}

} // namespace caudit::ledger
