#include "caudit/integrity.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <random>
#include <sstream>

#include "caudit/bigint.hpp"
#include "caudit/errors.hpp"
#include "caudit/wire.hpp"

namespace caudit::integrity {

const char* audit_status_token(AuditStatus s) {
    switch (s) {
        case AuditStatus::pass: return "pass";
        case AuditStatus::checksum_mismatch: return "checksum_mismatch";
        case AuditStatus::descriptor_mismatch: return "descriptor_mismatch";
        case AuditStatus::timestamp_mismatch: return "timestamp_mismatch";
    }
    return "pass";
}

std::pair<std::vector<Digest>, Digest> chunk_and_checksum(
    std::span<const std::uint8_t> payload, std::uint64_t block_size) {
    if (payload.empty()) raise(Errc::empty_file, "payload is empty");
    if (block_size == 0) raise(Errc::parameter, "block size must be positive");
    std::vector<Digest> blocks;
    blocks.reserve((payload.size() + block_size - 1) / block_size);
    for (std::size_t off = 0; off < payload.size(); off += block_size) {
        const std::size_t n =
            std::min<std::size_t>(block_size, payload.size() - off);
        blocks.push_back(sha256(payload.subspan(off, n)));
    }
    return {blocks, file_checksum_of(blocks)};
}

Digest file_checksum_of(const std::vector<Digest>& block_checksums) {
    std::string all;
    all.reserve(block_checksums.size() * 32);
    for (const Digest& d : block_checksums) {
        all.append(reinterpret_cast<const char*>(d.data()), d.size());
    }
    return sha256(all);
}

std::string serialize_record(const FileRecord& rec) {
    wire::Writer w;
    w.str(rec.file_id)
        .str(rec.descriptor.name)
        .u64(rec.descriptor.size)
        .str(rec.descriptor.owner)
        .u64(rec.block_size)
        .u64(rec.block_checksums.size());
    for (const Digest& d : rec.block_checksums) w.digest(d);
    w.digest(rec.file_checksum).u64(rec.uploaded_at);
    return w.take();
}

FileRecord parse_record(std::string_view line) {
    wire::Reader r(line);
    FileRecord rec;
    rec.file_id = r.str();
    rec.descriptor.name = r.str();
    rec.descriptor.size = r.u64();
    rec.descriptor.owner = r.str();
    rec.block_size = r.u64();
    const std::uint64_t count = r.u64();
    rec.block_checksums.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        rec.block_checksums.push_back(r.digest());
    }
    rec.file_checksum = r.digest();
    rec.uploaded_at = r.u64();
    r.expect_end();
    return rec;
}

namespace {

bool valid_file_id(std::string_view id) {
    if (id.empty() || id.size() > 128) return false;
    for (char c : id) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                        (c >= '0' && c <= '9') || c == '.' || c == '_' ||
                        c == '-';
        if (!ok) return false;
    }
    return id != "." && id != "..";
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    if (!f) raise(Errc::io_failure, "cannot read " + p.string());
    std::ostringstream buf;
    buf << f.rdbuf();
    std::string s = buf.str();
    return {s.begin(), s.end()};
}

void write_file_bytes(const std::filesystem::path& p,
                      std::span<const std::uint8_t> bytes) {
    std::ofstream f(p, std::ios::binary | std::ios::trunc);
    if (!f) raise(Errc::io_failure, "cannot write " + p.string());
    f.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

} // namespace

CloudStore::CloudStore(std::filesystem::path root) : root_(std::move(root)) {
    std::filesystem::create_directories(root_);
}

std::filesystem::path CloudStore::payload_path(std::string_view file_id) const {
    return root_ / (std::string(file_id) + ".bin");
}

std::filesystem::path CloudStore::record_path(std::string_view file_id) const {
    return root_ / (std::string(file_id) + ".meta");
}

bool CloudStore::exists(std::string_view file_id) const {
    return valid_file_id(file_id) &&
           std::filesystem::exists(record_path(file_id));
}

FileRecord CloudStore::record_upload(std::string_view file_id,
                                     std::span<const std::uint8_t> payload,
                                     std::string_view name,
                                     std::string_view owner,
                                     std::uint64_t block_size,
                                     std::uint64_t now, ledger::Ledger& led) {
    if (!valid_file_id(file_id)) {
        raise(Errc::parameter, "file id must be [A-Za-z0-9._-]{1,128}");
    }
    if (exists(file_id)) {
        raise(Errc::conflict, "file id already stored: " + std::string(file_id));
    }
    FileRecord rec;
    rec.file_id = std::string(file_id);
    rec.descriptor = {std::string(name), payload.size(), std::string(owner)};
    rec.block_size = block_size;
    std::tie(rec.block_checksums, rec.file_checksum) =
        chunk_and_checksum(payload, block_size);
    rec.uploaded_at = now;

    write_file_bytes(payload_path(file_id), payload);
    std::string meta = serialize_record(rec);
    meta.push_back('\n');
    write_file_bytes(record_path(file_id),
                     std::span<const std::uint8_t>(
                         reinterpret_cast<const std::uint8_t*>(meta.data()),
                         meta.size()));

    led.append(ledger::make_upload_entry({rec.file_id, rec.descriptor.name,
                                          rec.descriptor.size,
                                          rec.descriptor.owner, now}),
               now);
    return rec;
}

FileRecord CloudStore::load_record(std::string_view file_id) const {
    if (!exists(file_id)) {
        raise(Errc::unknown_file, "no such file: " + std::string(file_id));
    }
    std::vector<std::uint8_t> bytes = read_file_bytes(record_path(file_id));
    std::string text(bytes.begin(), bytes.end());
    if (!text.empty() && text.back() == '\n') text.pop_back();
    return parse_record(text);
}

std::vector<std::uint8_t> CloudStore::read_payload(
    std::string_view file_id) const {
    if (!exists(file_id)) {
        raise(Errc::unknown_file, "no such file: " + std::string(file_id));
    }
    return read_file_bytes(payload_path(file_id));
}

Challenge CloudStore::issue_challenge(std::string_view file_id,
                                      std::uint64_t count, std::uint64_t seed,
                                      std::uint64_t now,
                                      std::string_view challenger) const {
    FileRecord rec = load_record(file_id);
    const std::uint64_t n = rec.block_checksums.size();
    if (count < 1 || count > n) {
        raise(Errc::out_of_range, "challenge count must be in [1, block_count]");
    }
    std::vector<std::uint64_t> pool(n);
    for (std::uint64_t i = 0; i < n; ++i) pool[i] = i;
    std::mt19937_64 rng(seed);
    for (std::uint64_t i = 0; i < count; ++i) {
        std::uint64_t j = i + uniform_below(n - i, rng);
        std::swap(pool[i], pool[j]);
    }
    Challenge ch;
    ch.file_id = std::string(file_id);
    ch.block_indices.assign(pool.begin(), pool.begin() + count);
    std::sort(ch.block_indices.begin(), ch.block_indices.end());
    ch.issued_at = now;
    ch.challenger = std::string(challenger);
    return ch;
}

AuditVerdict CloudStore::compute_verdict(const Challenge& ch,
                                         const FileRecord& rec,
                                         const ledger::Ledger& led) const {
    const std::uint64_t n = rec.block_checksums.size();
    if (ch.block_indices.empty()) {
        raise(Errc::parameter, "challenge has no indices");
    }
    for (std::size_t i = 0; i < ch.block_indices.size(); ++i) {
        if (ch.block_indices[i] >= n ||
            (i > 0 && ch.block_indices[i] <= ch.block_indices[i - 1])) {
            raise(Errc::parameter, "challenge indices invalid");
        }
    }

    AuditVerdict verdict;

    // The upload event is the reference for descriptor and timestamp; scan
    // raw blocks so a tampered chain still yields an audit verdict (the
    // chain damage itself is verify_chain's finding, not ours).
    std::optional<ledger::UploadEntry> upload;
    auto scan = [&](const std::string& entry) {
        if (auto u = ledger::parse_upload(entry); u && u->file_id == ch.file_id) {
            upload = std::move(u);
        }
    };
    for (const auto& b : led.blocks()) {
        for (const auto& e : b.entries) scan(e);
    }
    for (const auto& e : led.pending()) scan(e);

    if (!upload || upload->name != rec.descriptor.name ||
        upload->size != rec.descriptor.size ||
        upload->owner != rec.descriptor.owner) {
        verdict.status = AuditStatus::descriptor_mismatch;
    } else if (upload->uploaded_at != rec.uploaded_at) {
        verdict.status = AuditStatus::timestamp_mismatch;
    } else {
        std::vector<std::uint8_t> payload = read_file_bytes(
            payload_path(ch.file_id));
        for (std::uint64_t idx : ch.block_indices) {
            const std::uint64_t off = idx * rec.block_size;
            Digest actual = kZeroDigest;
            if (off < payload.size()) {
                const std::size_t len = std::min<std::size_t>(
                    rec.block_size, payload.size() - off);
                actual = sha256(std::span<const std::uint8_t>(
                    payload.data() + off, len));
            }
            if (actual != rec.block_checksums[idx]) {
                verdict.failing_indices.push_back(idx);
            }
        }
        if (!verdict.failing_indices.empty()) {
            verdict.status = AuditStatus::checksum_mismatch;
        }
    }
    return verdict;
}

AuditVerdict CloudStore::audit_verify(const Challenge& ch, std::uint64_t now,
                                      ledger::Ledger& led,
                                      std::uint64_t duration_ms,
                                      bool reaudit_marker) const {
    FileRecord rec = load_record(ch.file_id);
    AuditVerdict verdict = compute_verdict(ch, rec, led);
    led.append(ledger::make_audit_entry({ch.file_id, ch.challenger,
                                         rec.block_checksums.size(),
                                         duration_ms,
                                         audit_status_token(verdict.status),
                                         now, reaudit_marker}),
               now);
    return verdict;
}

AuditVerdict CloudStore::audit_verify_timed(const Challenge& ch,
                                            std::uint64_t now,
                                            ledger::Ledger& led,
                                            bool reaudit_marker,
                                            std::uint64_t* measured_ms) const {
    FileRecord rec = load_record(ch.file_id);
    const auto start = std::chrono::steady_clock::now();
    AuditVerdict verdict = compute_verdict(ch, rec, led);
    const auto stop = std::chrono::steady_clock::now();
    const std::uint64_t duration_ms = std::max<std::uint64_t>(
        1, static_cast<std::uint64_t>(
               std::chrono::duration_cast<std::chrono::milliseconds>(
                   stop - start)
                   .count()));
    if (measured_ms) *measured_ms = duration_ms;
    led.append(ledger::make_audit_entry({ch.file_id, ch.challenger,
                                         rec.block_checksums.size(),
                                         duration_ms,
                                         audit_status_token(verdict.status),
                                         now, reaudit_marker}),
               now);
    return verdict;
}

Challenge CloudStore::full_challenge(std::string_view file_id,
                                     std::string_view challenger,
                                     std::uint64_t now) const {
    FileRecord rec = load_record(file_id);
    Challenge ch;
    ch.file_id = std::string(file_id);
    ch.block_indices.resize(rec.block_checksums.size());
    for (std::size_t i = 0; i < ch.block_indices.size(); ++i) {
        ch.block_indices[i] = i;
    }
    ch.issued_at = now;
    ch.challenger = std::string(challenger);
    return ch;
}

AuditVerdict CloudStore::reaudit(std::string_view file_id,
                                 std::string_view challenger,
                                 std::uint64_t now, ledger::Ledger& led,
                                 std::uint64_t duration_ms) const {
    return audit_verify(full_challenge(file_id, challenger, now), now, led,
                        duration_ms, /*reaudit_marker=*/true);
}

AuditVerdict CloudStore::reaudit_timed(std::string_view file_id,
                                       std::string_view challenger,
                                       std::uint64_t now, ledger::Ledger& led,
                                       std::uint64_t* measured_ms) const {
    return audit_verify_timed(full_challenge(file_id, challenger, now), now,
                              led, /*reaudit_marker=*/true, measured_ms);
}

} // namespace caudit::integrity
