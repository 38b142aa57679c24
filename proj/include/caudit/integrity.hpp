#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "caudit/digest.hpp"
#include "caudit/ledger.hpp"

namespace caudit::integrity {

inline constexpr std::uint64_t kDefaultBlockSize = 4096;

struct Descriptor {
    std::string name;
    std::uint64_t size = 0;
    std::string owner;

    bool operator==(const Descriptor&) const = default;
};

struct FileRecord {
    std::string file_id;
    Descriptor descriptor;
    std::uint64_t block_size = kDefaultBlockSize;
    std::vector<Digest> block_checksums;
    Digest file_checksum = kZeroDigest; // H(concatenated block checksums)
    std::uint64_t uploaded_at = 0;
};

struct Challenge {
    std::string file_id;
    std::vector<std::uint64_t> block_indices; // sorted, distinct, non-empty
    std::uint64_t issued_at = 0;
    std::string challenger;
};

enum class AuditStatus {
    pass,
    checksum_mismatch,
    descriptor_mismatch,
    timestamp_mismatch,
};

const char* audit_status_token(AuditStatus s);

struct AuditVerdict {
    AuditStatus status = AuditStatus::pass;
    std::vector<std::uint64_t> failing_indices; // non-empty iff checksum_mismatch
};

/// Per-block digests plus the whole-file digest. The final partial block is
/// hashed as-is, unpadded. Throws empty_file / parameter.
std::pair<std::vector<Digest>, Digest> chunk_and_checksum(
    std::span<const std::uint8_t> payload, std::uint64_t block_size);

Digest file_checksum_of(const std::vector<Digest>& block_checksums);

std::string serialize_record(const FileRecord& rec);
FileRecord parse_record(std::string_view line);

// Directory-backed store: <root>/<file_id>.bin holds the payload,
// <root>/<file_id>.meta the FileRecord. One writer per file id.
class CloudStore {
public:
    explicit CloudStore(std::filesystem::path root);

    /// Stores payload + record and appends the upload event to the ledger.
    /// Duplicate file_id -> conflict.
    FileRecord record_upload(std::string_view file_id,
                             std::span<const std::uint8_t> payload,
                             std::string_view name, std::string_view owner,
                             std::uint64_t block_size, std::uint64_t now,
                             ledger::Ledger& led);

    /// c distinct block indices drawn uniformly without replacement from a
    /// generator seeded with `seed`.
    Challenge issue_challenge(std::string_view file_id, std::uint64_t count,
                              std::uint64_t seed, std::uint64_t now,
                              std::string_view challenger) const;

    /// Recomputes the challenged blocks from the stored payload and checks
    /// descriptor and upload timestamp against the ledger's upload event.
    /// Mismatch precedence: descriptor, then timestamp, then checksums.
    /// The result lands in the ledger with its duration.
    AuditVerdict audit_verify(const Challenge& ch, std::uint64_t now,
                              ledger::Ledger& led, std::uint64_t duration_ms,
                              bool reaudit_marker = false) const;

    /// Live-mode variant: the logged duration is the measured wall clock of
    /// the verification itself (floored at 1 ms).
    AuditVerdict audit_verify_timed(const Challenge& ch, std::uint64_t now,
                                    ledger::Ledger& led,
                                    bool reaudit_marker = false,
                                    std::uint64_t* measured_ms = nullptr) const;

    /// Exhaustive challenge over every block, logged with the reaudit flag.
    AuditVerdict reaudit(std::string_view file_id, std::string_view challenger,
                         std::uint64_t now, ledger::Ledger& led,
                         std::uint64_t duration_ms) const;

    AuditVerdict reaudit_timed(std::string_view file_id,
                               std::string_view challenger, std::uint64_t now,
                               ledger::Ledger& led,
                               std::uint64_t* measured_ms = nullptr) const;

    bool exists(std::string_view file_id) const;
    FileRecord load_record(std::string_view file_id) const;
    std::vector<std::uint8_t> read_payload(std::string_view file_id) const;

    const std::filesystem::path& root() const { return root_; }
    std::filesystem::path payload_path(std::string_view file_id) const;
    std::filesystem::path record_path(std::string_view file_id) const;

private:
    AuditVerdict compute_verdict(const Challenge& ch, const FileRecord& rec,
                                 const ledger::Ledger& led) const;
    Challenge full_challenge(std::string_view file_id,
                             std::string_view challenger,
                             std::uint64_t now) const;

    std::filesystem::path root_;
};

} // namespace caudit::integrity
