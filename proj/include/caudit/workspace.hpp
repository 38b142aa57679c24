#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "caudit/cryptbox.hpp"
#include "caudit/keyforge.hpp"
#include "caudit/ledger.hpp"
#include "caudit/protocol.hpp"

namespace caudit::cli {

struct Config {
    unsigned prime_p = 7;
    std::uint64_t block_size = 4096;
    std::size_t batch_size = 8;
    double threshold_k = 3.0;
    std::size_t min_records = 10;
    std::uint64_t sim_seed = 1;
    unsigned rsa_bits = 128;
    std::uint64_t key_validity_days = 90;
    std::string admin_token = "change-me";

    static Config load(const std::filesystem::path& file);
    void save(const std::filesystem::path& file) const;
};

// On-disk layout under the workspace root:
//   config.json     tunables (missing keys take the defaults above)
//   controller.key  serialized controller key pair
//   registry.rec    registration store, one record per line
//   ledger.chain    sealed blocks (+ ledger.chain.pending buffer)
//   tokens.rec      issued session tokens
//   replay.rec      controller replay cache
//   store/          cloud store payloads + metadata
//   reports/        audit CSV appended by audit commands
class Workspace {
public:
    /// Opens an initialized workspace; throws parameter if it is missing.
    static Workspace open(const std::filesystem::path& root,
                          const std::optional<std::filesystem::path>&
                              config_override = std::nullopt);

    /// Creates layout, default config and the controller key.
    static Workspace init(const std::filesystem::path& root,
                          std::uint64_t today_day);

    const std::filesystem::path& root() const { return root_; }
    const Config& config() const { return config_; }

    std::filesystem::path config_file() const { return root_ / "config.json"; }
    std::filesystem::path key_file() const { return root_ / "controller.key"; }
    std::filesystem::path registry_file() const {
        return root_ / "registry.rec";
    }
    std::filesystem::path chain_file() const { return root_ / "ledger.chain"; }
    std::filesystem::path tokens_file() const { return root_ / "tokens.rec"; }
    std::filesystem::path replay_file() const { return root_ / "replay.rec"; }
    std::filesystem::path store_dir() const { return root_ / "store"; }
    std::filesystem::path report_file() const {
        return root_ / "reports" / "audits.csv";
    }

    keyforge::PrimeConfig prime_config() const;

    cryptbox::KeyPair load_key() const;
    void save_key(const cryptbox::KeyPair& key) const;

    ledger::Ledger load_ledger() const;
    void save_ledger(const ledger::Ledger& led) const;

    protocol::CspNode load_registry() const;
    void save_registry(const protocol::CspNode& csp) const;

    /// Constructs the controller from the stored key, config admin token and
    /// the persisted replay cache.
    protocol::Controller load_controller() const;
    void save_replay(const protocol::Controller& controller) const;

    void remember_token(const Digest& token, std::string_view client,
                        std::uint64_t minute) const;
    std::optional<std::string> token_client(std::string_view token_hex) const;

    void append_audit_report_row(std::string_view file_id,
                                 std::string_view auditor,
                                 std::string_view verdict,
                                 std::uint64_t duration_ms,
                                 std::uint64_t blocks_challenged,
                                 std::uint64_t at) const;

private:
    Workspace(std::filesystem::path root, Config config)
        : root_(std::move(root)), config_(std::move(config)) {}

    std::filesystem::path root_;
    Config config_;
};

// Exclusive advisory lock on <root>/.lock held for the guard's lifetime.
class WorkspaceLock {
public:
    explicit WorkspaceLock(const std::filesystem::path& root);
    ~WorkspaceLock();
    WorkspaceLock(const WorkspaceLock&) = delete;
    WorkspaceLock& operator=(const WorkspaceLock&) = delete;

private:
    int fd_ = -1;
};

std::uint64_t current_epoch_minute();

} // namespace caudit::cli
