#include "caudit/protocol.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "caudit/errors.hpp"
#include "caudit/wire.hpp"

namespace caudit::protocol {

const char* status_token(Status s) {
    switch (s) {
        case Status::granted: return "granted";
        case Status::mismatch: return "mismatch";
        case Status::expired: return "expired";
        case Status::access_denied: return "access_denied";
        case Status::unknown_client: return "unknown_client";
        case Status::replay: return "replay";
    }
    return "mismatch";
}

namespace {

Digest answer_digest(const std::array<std::uint8_t, 16>& salt,
                     std::string_view answer) {
    std::string input(reinterpret_cast<const char*>(salt.data()), salt.size());
    input.append(answer);
    return sha256(input);
}

std::array<std::uint8_t, 16> fresh_salt(std::mt19937_64& rng) {
    std::array<std::uint8_t, 16> salt{};
    for (int i = 0; i < 2; ++i) {
        std::uint64_t w = rng();
        for (int j = 0; j < 8; ++j) {
            salt[8 * i + j] = static_cast<std::uint8_t>(w >> (8 * j));
        }
    }
    return salt;
}

} // namespace

LoginRequest client_login(std::string_view client_id,
                          const keyforge::DeviceIdentity& identity,
                          const keyforge::MinuteStamp& now,
                          const cryptbox::PublicKey& controller_key,
                          const keyforge::PrimeConfig& cfg) {
    const std::uint64_t today = now.epoch_minute / (24 * 60);
    if (cryptbox::is_expired(controller_key, today)) {
        raise(Errc::stale_key, "controller key has expired");
    }
    keyforge::CaseValue case_value =
        keyforge::compute_case(keyforge::encode_identity(identity));
    keyforge::TimeCaseValue tc = keyforge::time_case(case_value, now, cfg);
    BigUint digest = cryptbox::time_case_digest(
        tc.value, static_cast<unsigned>(bit_length(controller_key.modulus)));
    LoginRequest req;
    req.client_id = std::string(client_id);
    req.ciphertext = cryptbox::encrypt(digest, controller_key);
    req.sent_at = now.epoch_minute;
    return req;
}

// ---- CspNode ---------------------------------------------------------------

CspNode::CspNode(CspNode&& other) noexcept {
    std::lock_guard lock(other.mutex_);
    records_ = std::move(other.records_);
}

CspNode& CspNode::operator=(CspNode&& other) noexcept {
    if (this != &other) {
        std::scoped_lock lock(mutex_, other.mutex_);
        records_ = std::move(other.records_);
    }
    return *this;
}

RegistrationRecord CspNode::register_client(
    std::string_view client_id, const keyforge::DeviceIdentity& identity,
    std::span<const QuestionAnswer> questions, std::uint64_t now_minute,
    std::mt19937_64& salt_rng) {
    if (client_id.empty() ||
        !keyforge::is_printable_ascii(client_id)) {
        raise(Errc::invalid_identity, "client id must be printable ASCII");
    }
    if (questions.size() != 3) {
        raise(Errc::parameter, "exactly 3 security questions required");
    }
    for (std::size_t i = 0; i < 3; ++i) {
        if (questions[i].question.empty() || questions[i].answer.empty()) {
            raise(Errc::parameter, "questions and answers must be non-empty");
        }
        for (std::size_t j = 0; j < i; ++j) {
            if (questions[j].question == questions[i].question) {
                raise(Errc::parameter, "security questions must be distinct");
            }
        }
    }

    RegistrationRecord rec;
    rec.client_id = std::string(client_id);
    rec.numeric_identity = keyforge::encode_identity(identity);
    if (keyforge::compute_case(rec.numeric_identity).value == 0) {
        raise(Errc::invalid_identity, "identity derives a zero case");
    }
    for (std::size_t i = 0; i < 3; ++i) {
        rec.security_answers[i].salt = fresh_salt(salt_rng);
        rec.security_answers[i].digest =
            answer_digest(rec.security_answers[i].salt, questions[i].answer);
    }
    rec.access_rights = Access::granted;
    rec.registered_at = now_minute;

    std::lock_guard lock(mutex_);
    auto [it, inserted] = records_.emplace(rec.client_id, rec);
    if (!inserted) {
        raise(Errc::already_registered,
              "client already registered: " + rec.client_id);
    }
    return it->second;
}

CspNode::CandidateSet CspNode::generate_candidates(
    std::string_view client_id, const keyforge::MinuteStamp& now,
    unsigned modulus_bits, const keyforge::PrimeConfig& cfg) const {
    CandidateSet out;
    keyforge::NumericIdentity numeric;
    {
        std::lock_guard lock(mutex_);
        auto it = records_.find(std::string(client_id));
        if (it == records_.end()) {
            out.status = CandidateStatus::unknown_client;
            return out;
        }
        if (it->second.access_rights != Access::granted) {
            out.status = CandidateStatus::access_denied;
            return out;
        }
        numeric = it->second.numeric_identity;
    }
    keyforge::CaseValue case_value = keyforge::compute_case(numeric);
    out.status = CandidateStatus::ok;
    for (const keyforge::TimeCaseValue& tc :
         keyforge::candidate_time_cases(case_value, now, cfg)) {
        out.digests.push_back(cryptbox::time_case_digest(tc.value,
                                                         modulus_bits));
    }
    return out;
}

CspNode::RecoveryResult CspNode::check_recovery(
    std::string_view client_id, std::span<const std::string> answers) {
    if (answers.size() != 3) {
        raise(Errc::parameter, "exactly 3 answers required");
    }
    std::lock_guard lock(mutex_);
    auto it = records_.find(std::string(client_id));
    if (it == records_.end()) {
        raise(Errc::unknown_client, "no record for " + std::string(client_id));
    }
    for (std::size_t i = 0; i < 3; ++i) {
        if (answer_digest(it->second.security_answers[i].salt, answers[i]) !=
            it->second.security_answers[i].digest) {
            return RecoveryResult::rejected;
        }
    }
    it->second.recovery_pending = true;
    return RecoveryResult::accepted;
}

RegistrationRecord CspNode::update_identity(
    std::string_view client_id, const keyforge::DeviceIdentity& identity) {
    keyforge::NumericIdentity numeric = keyforge::encode_identity(identity);
    if (keyforge::compute_case(numeric).value == 0) {
        raise(Errc::invalid_identity, "identity derives a zero case");
    }
    std::lock_guard lock(mutex_);
    auto it = records_.find(std::string(client_id));
    if (it == records_.end()) {
        raise(Errc::unknown_client, "no record for " + std::string(client_id));
    }
    if (!it->second.recovery_pending) {
        raise(Errc::unauthorized, "no accepted recovery pending");
    }
    it->second.numeric_identity = numeric;
    it->second.recovery_pending = false;
    return it->second;
}

RegistrationRecord CspNode::set_access(std::string_view client_id,
                                       Access access) {
    std::lock_guard lock(mutex_);
    auto it = records_.find(std::string(client_id));
    if (it == records_.end()) {
        raise(Errc::unknown_client, "no record for " + std::string(client_id));
    }
    it->second.access_rights = access;
    return it->second;
}

bool CspNode::has_client(std::string_view client_id) const {
    std::lock_guard lock(mutex_);
    return records_.count(std::string(client_id)) != 0;
}

RegistrationRecord CspNode::record_of(std::string_view client_id) const {
    std::lock_guard lock(mutex_);
    auto it = records_.find(std::string(client_id));
    if (it == records_.end()) {
        raise(Errc::unknown_client, "no record for " + std::string(client_id));
    }
    return it->second;
}

std::vector<std::string> CspNode::client_ids() const {
    std::lock_guard lock(mutex_);
    std::vector<std::string> out;
    out.reserve(records_.size());
    for (const auto& [id, rec] : records_) out.push_back(id);
    return out;
}

void CspNode::save(const std::filesystem::path& path) const {
    std::lock_guard lock(mutex_);
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) raise(Errc::io_failure, "cannot write " + path.string());
    for (const auto& [id, rec] : records_) {
        wire::Writer w;
        w.str(rec.client_id)
            .big(big_to_dec(rec.numeric_identity.moboard_num))
            .big(big_to_dec(rec.numeric_identity.disk_no))
            .big(big_to_dec(rec.numeric_identity.pwd_num));
        for (const SecurityAnswer& a : rec.security_answers) {
            w.hex(std::span<const std::uint8_t>(a.salt.data(), a.salt.size()));
            w.digest(a.digest);
        }
        w.token(rec.access_rights == Access::granted ? "granted" : "denied")
            .u64(rec.registered_at)
            .u64(rec.recovery_pending ? 1 : 0);
        f << w.record() << '\n';
    }
}

CspNode CspNode::load(const std::filesystem::path& path) {
    CspNode node;
    std::ifstream f(path, std::ios::binary);
    if (!f) return node; // absent store = empty store
    std::string line;
    while (std::getline(f, line)) {
        wire::Reader r(line);
        RegistrationRecord rec;
        rec.client_id = r.str();
        rec.numeric_identity.moboard_num = big_from_dec(r.big());
        rec.numeric_identity.disk_no = big_from_dec(r.big());
        rec.numeric_identity.pwd_num = big_from_dec(r.big());
        for (SecurityAnswer& a : rec.security_answers) {
            std::string salt_hex = r.hex(16);
            for (std::size_t i = 0; i < 16; ++i) {
                a.salt[i] = static_cast<std::uint8_t>(
                    std::stoi(salt_hex.substr(2 * i, 2), nullptr, 16));
            }
            a.digest = r.digest();
        }
        std::string access = r.token();
        if (access != "granted" && access != "denied") {
            raise(Errc::malformed_record, "bad access token");
        }
        rec.access_rights =
            access == "granted" ? Access::granted : Access::denied;
        rec.registered_at = r.u64();
        rec.recovery_pending = r.u64() != 0;
        r.expect_end();
        node.records_.emplace(rec.client_id, std::move(rec));
    }
    return node;
}

// ---- Controller ------------------------------------------------------------

Controller::Controller(cryptbox::KeyPair key, keyforge::PrimeConfig cfg,
                       std::string admin_token, std::uint64_t nonce_seed)
    : key_(std::move(key)),
      cfg_(cfg),
      admin_token_(std::move(admin_token)),
      nonce_rng_(nonce_seed) {}

VerificationOutcome Controller::verify(const LoginRequest& req,
                                       const keyforge::MinuteStamp& now,
                                       CspNode& csp, ledger::Ledger& led) {
    CspNode::CandidateSet candidates = csp.generate_candidates(
        req.client_id, now, static_cast<unsigned>(bit_length(key_.modulus)),
        cfg_);
    return verify_with_candidates(req, candidates, now, led);
}

VerificationOutcome Controller::verify_with_candidates(
    const LoginRequest& req, const CspNode::CandidateSet& candidates,
    const keyforge::MinuteStamp& now, ledger::Ledger& led) {
    return decide(req, candidates, now, led);
}

VerificationOutcome Controller::decide(const LoginRequest& req,
                                       const CspNode::CandidateSet& candidates,
                                       const keyforge::MinuteStamp& now,
                                       ledger::Ledger& led) {
    VerificationOutcome out;
    out.decided_at = now.epoch_minute;
    std::string detail = "login";

    std::lock_guard lock(mutex_);

    // Replay entries age out after the verification window.
    for (auto it = replay_.begin(); it != replay_.end();) {
        if (now.epoch_minute >= it->second + kWindowMinutes) {
            it = replay_.erase(it);
        } else {
            ++it;
        }
    }

    if (candidates.status == CspNode::CandidateStatus::unknown_client) {
        out.status = Status::unknown_client;
    } else if (candidates.status == CspNode::CandidateStatus::access_denied) {
        out.status = Status::access_denied;
    } else if (now.epoch_minute >= req.sent_at + kWindowMinutes) {
        out.status = Status::expired;
    } else {
        std::optional<BigUint> digest;
        try {
            digest = cryptbox::decrypt(req.ciphertext, key_);
        } catch (const Error& e) {
            detail = e.code() == Errc::stale_key ? "stale key version"
                                                 : "undecryptable";
        }
        if (!digest) {
            out.status = Status::mismatch;
        } else if (std::find(candidates.digests.begin(),
                             candidates.digests.end(),
                             *digest) == candidates.digests.end()) {
            out.status = Status::mismatch;
        } else {
            const std::string key = big_to_dec(*digest);
            if (replay_.count(key)) {
                out.status = Status::replay;
            } else {
                out.status = Status::granted;
                replay_[key] = now.epoch_minute;
                const std::uint64_t nonce = nonce_rng_();
                out.session_token =
                    sha256(key + ":" + std::to_string(nonce));
            }
        }
    }

    led.append(ledger::make_attempt_entry({req.client_id,
                                           status_token(out.status),
                                           now.epoch_minute, "controller",
                                           detail}),
               now.epoch_minute);
    return out;
}

CspNode::RecoveryResult Controller::recover_password(
    std::string_view client_id, std::span<const std::string> answers,
    CspNode& csp, ledger::Ledger& led, std::uint64_t now_minute) {
    try {
        CspNode::RecoveryResult result = csp.check_recovery(client_id, answers);
        const bool ok = result == CspNode::RecoveryResult::accepted;
        led.append(ledger::make_attempt_entry(
                       {std::string(client_id),
                        ok ? "granted" : "mismatch", now_minute,
                        "controller", "password recovery"}),
                   now_minute);
        return result;
    } catch (const Error& e) {
        if (e.code() == Errc::unknown_client) {
            led.append(ledger::make_attempt_entry(
                           {std::string(client_id), "unknown_client",
                            now_minute, "controller", "password recovery"}),
                       now_minute);
        }
        throw;
    }
}

RegistrationRecord Controller::revoke_access(std::string_view admin_token,
                                             std::string_view client_id,
                                             CspNode& csp, ledger::Ledger& led,
                                             std::uint64_t now_minute) {
    if (admin_token != admin_token_) {
        raise(Errc::unauthorized, "bad admin token");
    }
    RegistrationRecord rec = csp.set_access(client_id, Access::denied);
    led.append(ledger::make_admin_entry(client_id, "revoke_access",
                                        now_minute),
               now_minute);
    return rec;
}

std::vector<std::pair<std::string, std::uint64_t>>
Controller::replay_snapshot() const {
    std::lock_guard lock(mutex_);
    return {replay_.begin(), replay_.end()};
}

void Controller::replay_restore(
    std::span<const std::pair<std::string, std::uint64_t>> entries) {
    std::lock_guard lock(mutex_);
    for (const auto& [digest, minute] : entries) replay_[digest] = minute;
}

} // namespace caudit::protocol
