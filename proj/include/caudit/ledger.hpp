#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "caudit/digest.hpp"

namespace caudit::ledger {

struct LedgerBlock {
    std::uint64_t index = 0;
    Digest prev_hash = kZeroDigest; // genesis links to 32 zero bytes
    std::vector<std::string> entries;
    std::uint64_t created_at = 0; // epoch minute
    Digest block_hash = kZeroDigest;
};

/// Hash preimage of a block: index, prev_hash, entry count, each entry as a
/// length-prefixed string, created_at — all in the canonical wire format.
std::string block_preimage(std::uint64_t index, const Digest& prev_hash,
                           const std::vector<std::string>& entries,
                           std::uint64_t created_at);

Digest block_hash_of(std::uint64_t index, const Digest& prev_hash,
                     const std::vector<std::string>& entries,
                     std::uint64_t created_at);

std::string serialize_block(const LedgerBlock& b);
LedgerBlock parse_block(std::string_view line); // throws malformed_record

// Append-only hash chain with a pending buffer; a block seals every
// batch_size entries or on flush. Single writer.
class Ledger {
public:
    explicit Ledger(std::size_t batch_size = 8);

    /// Buffers the entry; returns the sealed block when the buffer fills.
    /// Throws chain_invalid if the sealed chain no longer verifies.
    std::optional<LedgerBlock> append(std::string entry,
                                      std::uint64_t now_minute);

    /// Seals whatever is pending (no-op on an empty buffer).
    std::optional<LedgerBlock> flush(std::uint64_t now_minute);

    /// nullopt when every hash and linkage checks out; otherwise the lowest
    /// failing block index.
    std::optional<std::uint64_t> first_invalid_block() const;

    /// Matching entries (sealed first, then pending) in append order.
    /// Empty subject matches everything. Throws chain_invalid on a bad chain.
    std::vector<std::string> query(std::string_view subject,
                                   std::uint64_t from_minute,
                                   std::uint64_t to_minute) const;

    const std::vector<LedgerBlock>& blocks() const { return blocks_; }
    const std::vector<std::string>& pending() const { return pending_; }
    std::size_t batch_size() const { return batch_size_; }
    std::size_t entry_count() const;

    /// Sealed chain, one block per line, trailing newline per line.
    std::string serialize_chain() const;

    /// Chain to `chain_file`, pending buffer to `chain_file + ".pending"`.
    void save(const std::filesystem::path& chain_file) const;
    static Ledger load(const std::filesystem::path& chain_file,
                       std::size_t batch_size = 8);

private:
    LedgerBlock seal(std::uint64_t now_minute);

    std::size_t batch_size_;
    std::vector<LedgerBlock> blocks_;
    std::vector<std::string> pending_;
};

/// Strict verification straight from a persisted chain file. A line that
/// fails to parse counts as a bad block at its own index; hash or linkage
/// failures report the lowest failing index. nullopt = valid.
std::optional<std::uint64_t> verify_chain_file(
    const std::filesystem::path& chain_file);

// ---- entry vocabulary ------------------------------------------------------
// Every ledger entry is itself a canonical record whose first field names
// its kind. The make_*/parse_* pairs below are the only producers and
// consumers of those records.

struct AttemptEntry {
    std::string client_id;
    std::string status; // protocol status token
    std::uint64_t minute = 0;
    std::string actor; // client | controller | csp
    std::string detail;
};

struct UploadEntry {
    std::string file_id;
    std::string name;
    std::uint64_t size = 0;
    std::string owner;
    std::uint64_t uploaded_at = 0;
};

struct AuditEntry {
    std::string file_id;
    std::string auditor;
    std::uint64_t block_count = 0;
    std::uint64_t duration_ms = 0;
    std::string verdict; // audit status token
    std::uint64_t at = 0;
    bool reaudit = false;
};

std::string make_attempt_entry(const AttemptEntry& e);
std::string make_upload_entry(const UploadEntry& e);
std::string make_audit_entry(const AuditEntry& e);
std::string make_blacklist_entry(std::string_view auditor, std::uint64_t at,
                                 std::string_view detail);
std::string make_admin_entry(std::string_view client_id,
                             std::string_view action, std::uint64_t minute);

// nullopt when the entry is of a different kind.
std::optional<AttemptEntry> parse_attempt(std::string_view entry);
std::optional<UploadEntry> parse_upload(std::string_view entry);
std::optional<AuditEntry> parse_audit(std::string_view entry);

struct EntryInfo {
    std::string kind;
    std::string subject; // client for attempts, owner for uploads, auditor for audits
    std::uint64_t minute = 0;
};

EntryInfo entry_info(std::string_view entry);

} // namespace caudit::ledger
