#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "caudit/cryptbox.hpp"
#include "caudit/digest.hpp"
#include "caudit/keyforge.hpp"
#include "caudit/ledger.hpp"

namespace caudit::protocol {

enum class Access { granted, denied };

enum class Status {
    granted,
    mismatch,
    expired,
    access_denied,
    unknown_client,
    replay,
};

const char* status_token(Status s);

struct QuestionAnswer {
    std::string question;
    std::string answer;
};

struct SecurityAnswer {
    std::array<std::uint8_t, 16> salt{};
    Digest digest = kZeroDigest; // H(salt || answer)
};

struct RegistrationRecord {
    std::string client_id;
    keyforge::NumericIdentity numeric_identity;
    std::array<SecurityAnswer, 3> security_answers;
    Access access_rights = Access::granted;
    std::uint64_t registered_at = 0;
    bool recovery_pending = false;
};

struct LoginRequest {
    std::string client_id;
    cryptbox::Ciphertext ciphertext; // encrypted time-case digest
    std::uint64_t sent_at = 0;       // client-stamped epoch minute
};

struct VerificationOutcome {
    Status status = Status::mismatch;
    std::optional<Digest> session_token; // present iff granted
    std::uint64_t decided_at = 0;
};

/// Builds the login request: time case at `now`, mapped to the digest
/// domain of the controller key, encrypted under it. Throws stale_key when
/// the controller key has expired at now's day.
LoginRequest client_login(std::string_view client_id,
                          const keyforge::DeviceIdentity& identity,
                          const keyforge::MinuteStamp& now,
                          const cryptbox::PublicKey& controller_key,
                          const keyforge::PrimeConfig& cfg);

// Registration store plus candidate regeneration. The numeric identity is
// held in the clear; recomputing the time case requires it, which makes the
// CSP a trusted party for identity material.
class CspNode {
public:
    CspNode() = default;
    CspNode(CspNode&& other) noexcept;
    CspNode& operator=(CspNode&& other) noexcept;

    /// Stores encodings and salted answer digests. Throws already_registered,
    /// invalid_identity (zero case or bad attributes), parameter (questions).
    RegistrationRecord register_client(std::string_view client_id,
                                       const keyforge::DeviceIdentity& identity,
                                       std::span<const QuestionAnswer> questions,
                                       std::uint64_t now_minute,
                                       std::mt19937_64& salt_rng);

    enum class CandidateStatus { ok, unknown_client, access_denied };
    struct CandidateSet {
        CandidateStatus status = CandidateStatus::unknown_client;
        std::vector<BigUint> digests; // {now, now-1}, current first
    };

    CandidateSet generate_candidates(std::string_view client_id,
                                     const keyforge::MinuteStamp& now,
                                     unsigned modulus_bits,
                                     const keyforge::PrimeConfig& cfg) const;

    enum class RecoveryResult { accepted, rejected };

    /// All three salted digests must match. Accepting arms recovery_pending
    /// so update_identity may run once. Throws unknown_client.
    RecoveryResult check_recovery(std::string_view client_id,
                                  std::span<const std::string> answers);

    /// Re-registration of identity material after an accepted recovery.
    /// Throws unauthorized unless recovery_pending is armed.
    RegistrationRecord update_identity(std::string_view client_id,
                                       const keyforge::DeviceIdentity& identity);

    RegistrationRecord set_access(std::string_view client_id, Access access);

    bool has_client(std::string_view client_id) const;
    RegistrationRecord record_of(std::string_view client_id) const;
    std::vector<std::string> client_ids() const;

    // One record per line, canonical field order, UTF-8.
    void save(const std::filesystem::path& path) const;
    static CspNode load(const std::filesystem::path& path);

private:
    mutable std::mutex mutex_;
    std::map<std::string, RegistrationRecord> records_;
};

// The trusted intermediary: holds the private key, compares digests against
// the CSP candidate set, owns the replay cache, and writes a log entry for
// every attempt it decides.
class Controller {
public:
    Controller(cryptbox::KeyPair key, keyforge::PrimeConfig cfg,
               std::string admin_token, std::uint64_t nonce_seed);

    /// Synchronous three-party check: asks the CSP for candidates at `now`
    /// and decides. Every path appends exactly one attempt entry.
    VerificationOutcome verify(const LoginRequest& req,
                               const keyforge::MinuteStamp& now, CspNode& csp,
                               ledger::Ledger& led);

    /// Decision step against an already-delivered candidate set (the
    /// message-passing simulator fetches candidates on the CSP's own clock).
    VerificationOutcome verify_with_candidates(
        const LoginRequest& req, const CspNode::CandidateSet& candidates,
        const keyforge::MinuteStamp& now, ledger::Ledger& led);

    /// Accepted iff all three answers match; logs the attempt either way.
    /// Throws unknown_client (after logging).
    CspNode::RecoveryResult recover_password(std::string_view client_id,
                                             std::span<const std::string> answers,
                                             CspNode& csp, ledger::Ledger& led,
                                             std::uint64_t now_minute);

    /// Administrator revocation; idempotent. Throws unauthorized on a bad
    /// token, unknown_client when there is no record.
    RegistrationRecord revoke_access(std::string_view admin_token,
                                     std::string_view client_id, CspNode& csp,
                                     ledger::Ledger& led,
                                     std::uint64_t now_minute);

    cryptbox::PublicKey public_key() const { return key_.public_part(); }
    const cryptbox::KeyPair& key() const { return key_; }
    const keyforge::PrimeConfig& prime_config() const { return cfg_; }

    // Replay cache snapshot/restore so a workspace survives process exits.
    std::vector<std::pair<std::string, std::uint64_t>> replay_snapshot() const;
    void replay_restore(
        std::span<const std::pair<std::string, std::uint64_t>> entries);

    static constexpr std::uint64_t kWindowMinutes = 2;

private:
    VerificationOutcome decide(const LoginRequest& req,
                               const CspNode::CandidateSet& candidates,
                               const keyforge::MinuteStamp& now,
                               ledger::Ledger& led);

    cryptbox::KeyPair key_;
    keyforge::PrimeConfig cfg_;
    std::string admin_token_;
    std::mt19937_64 nonce_rng_;
    std::map<std::string, std::uint64_t> replay_; // digest decimal -> minute
    mutable std::mutex mutex_;
};

} // namespace caudit::protocol
