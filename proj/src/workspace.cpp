#include "caudit/workspace.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <chrono>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "caudit/errors.hpp"
#include "caudit/wire.hpp"

namespace caudit::cli {

using nlohmann::json;

std::uint64_t current_epoch_minute() {
    const auto now = std::chrono::system_clock::now().time_since_epoch();
    return static_cast<std::uint64_t>(
        std::chrono::duration_cast<std::chrono::minutes>(now).count());
}

Config Config::load(const std::filesystem::path& file) {
    std::ifstream f(file);
    if (!f) raise(Errc::io_failure, "cannot read " + file.string());
    json j;
    try {
        f >> j;
    } catch (const json::exception& e) {
        raise(Errc::parameter, "bad config file: " + std::string(e.what()));
    }
    Config cfg;
    cfg.prime_p = j.value("prime_p", cfg.prime_p);
    cfg.block_size = j.value("block_size", cfg.block_size);
    cfg.batch_size = j.value("batch_size", cfg.batch_size);
    cfg.threshold_k = j.value("threshold_k", cfg.threshold_k);
    cfg.min_records = j.value("min_records", cfg.min_records);
    cfg.sim_seed = j.value("sim_seed", cfg.sim_seed);
    cfg.rsa_bits = j.value("rsa_bits", cfg.rsa_bits);
    cfg.key_validity_days = j.value("key_validity_days", cfg.key_validity_days);
    cfg.admin_token = j.value("admin_token", cfg.admin_token);

    keyforge::PrimeConfig::for_prime(cfg.prime_p); // validates
    if (cfg.block_size == 0 || cfg.batch_size == 0 || cfg.rsa_bits < 32 ||
        cfg.rsa_bits % 2 != 0 || cfg.threshold_k <= 0.0 ||
        cfg.key_validity_days == 0) {
        raise(Errc::parameter, "config value out of range");
    }
    return cfg;
}

void Config::save(const std::filesystem::path& file) const {
    json j{
        {"prime_p", prime_p},
        {"block_size", block_size},
        {"batch_size", batch_size},
        {"threshold_k", threshold_k},
        {"min_records", min_records},
        {"sim_seed", sim_seed},
        {"rsa_bits", rsa_bits},
        {"key_validity_days", key_validity_days},
        {"admin_token", admin_token},
    };
    std::ofstream f(file, std::ios::trunc);
    if (!f) raise(Errc::io_failure, "cannot write " + file.string());
    f << j.dump(2) << '\n';
}

Workspace Workspace::open(
    const std::filesystem::path& root,
    const std::optional<std::filesystem::path>& config_override) {
    const std::filesystem::path cfg_file =
        config_override ? *config_override : root / "config.json";
    if (!std::filesystem::exists(cfg_file)) {
        raise(Errc::parameter,
              "workspace not initialized (missing " + cfg_file.string() +
                  "); run init first");
    }
    return Workspace(root, Config::load(cfg_file));
}

Workspace Workspace::init(const std::filesystem::path& root,
                          std::uint64_t today_day) {
    std::filesystem::create_directories(root);
    std::filesystem::create_directories(root / "store");
    std::filesystem::create_directories(root / "reports");
    Workspace ws(root, Config{});
    if (std::filesystem::exists(ws.config_file())) {
        ws.config_ = Config::load(ws.config_file());
    } else {
        ws.config_.save(ws.config_file());
    }
    if (!std::filesystem::exists(ws.key_file())) {
        ws.save_key(cryptbox::keygen(ws.config_.rsa_bits, ws.config_.sim_seed,
                                     today_day,
                                     ws.config_.key_validity_days));
    }
    return ws;
}

keyforge::PrimeConfig Workspace::prime_config() const {
    return keyforge::PrimeConfig::for_prime(config_.prime_p);
}

cryptbox::KeyPair Workspace::load_key() const {
    std::ifstream f(key_file());
    if (!f) raise(Errc::io_failure, "cannot read " + key_file().string());
    std::string line;
    std::getline(f, line);
    return cryptbox::parse_keypair(line);
}

void Workspace::save_key(const cryptbox::KeyPair& key) const {
    std::ofstream f(key_file(), std::ios::trunc);
    if (!f) raise(Errc::io_failure, "cannot write " + key_file().string());
    f << cryptbox::serialize(key) << '\n';
}

ledger::Ledger Workspace::load_ledger() const {
    return ledger::Ledger::load(chain_file(), config_.batch_size);
}

void Workspace::save_ledger(const ledger::Ledger& led) const {
    led.save(chain_file());
}

protocol::CspNode Workspace::load_registry() const {
    return protocol::CspNode::load(registry_file());
}

void Workspace::save_registry(const protocol::CspNode& csp) const {
    csp.save(registry_file());
}

protocol::Controller Workspace::load_controller() const {
    protocol::Controller controller(load_key(), prime_config(),
                                    config_.admin_token, config_.sim_seed);
    std::ifstream f(replay_file());
    if (f) {
        std::vector<std::pair<std::string, std::uint64_t>> entries;
        std::string line;
        while (std::getline(f, line)) {
            wire::Reader r(line);
            std::string digest = r.big();
            std::uint64_t minute = r.u64();
            r.expect_end();
            entries.emplace_back(std::move(digest), minute);
        }
        controller.replay_restore(entries);
    }
    return controller;
}

void Workspace::save_replay(const protocol::Controller& controller) const {
    std::ofstream f(replay_file(), std::ios::trunc);
    if (!f) raise(Errc::io_failure, "cannot write " + replay_file().string());
    for (const auto& [digest, minute] : controller.replay_snapshot()) {
        wire::Writer w;
        w.big(digest).u64(minute);
        f << w.record() << '\n';
    }
}

void Workspace::remember_token(const Digest& token, std::string_view client,
                               std::uint64_t minute) const {
    std::ofstream f(tokens_file(), std::ios::app);
    if (!f) raise(Errc::io_failure, "cannot write " + tokens_file().string());
    wire::Writer w;
    w.digest(token).str(client).u64(minute);
    f << w.record() << '\n';
}

std::optional<std::string> Workspace::token_client(
    std::string_view token_hex) const {
    std::ifstream f(tokens_file());
    if (!f) return std::nullopt;
    std::string line;
    while (std::getline(f, line)) {
        wire::Reader r(line);
        std::string hex = r.hex(32);
        std::string client = r.str();
        r.u64();
        r.expect_end();
        if (hex == token_hex) return client;
    }
    return std::nullopt;
}

void Workspace::append_audit_report_row(
    std::string_view file_id, std::string_view auditor,
    std::string_view verdict, std::uint64_t duration_ms,
    std::uint64_t blocks_challenged, std::uint64_t at) const {
    const std::filesystem::path path = report_file();
    std::filesystem::create_directories(path.parent_path());
    const bool fresh = !std::filesystem::exists(path);
    std::ofstream f(path, std::ios::app);
    if (!f) raise(Errc::io_failure, "cannot write " + path.string());
    if (fresh) {
        f << "file_id,auditor,verdict,duration_ms,blocks_challenged,at\n";
    }
    f << file_id << ',' << auditor << ',' << verdict << ',' << duration_ms
      << ',' << blocks_challenged << ',' << at << '\n';
}

WorkspaceLock::WorkspaceLock(const std::filesystem::path& root) {
    const std::filesystem::path lock_path = root / ".lock";
    fd_ = ::open(lock_path.c_str(), O_CREAT | O_RDWR, 0644);
    if (fd_ < 0) {
        raise(Errc::io_failure, "cannot open lock file " + lock_path.string());
    }
    if (::flock(fd_, LOCK_EX) != 0) {
        ::close(fd_);
        fd_ = -1;
        raise(Errc::io_failure, "cannot lock workspace");
    }
}

WorkspaceLock::~WorkspaceLock() {
    if (fd_ >= 0) {
        ::flock(fd_, LOCK_UN);
        ::close(fd_);
    }
}

} // namespace caudit::cli
