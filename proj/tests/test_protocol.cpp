#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "caudit/errors.hpp"
#include "caudit/protocol.hpp"

using namespace caudit;
using namespace caudit::protocol;

namespace {

constexpr std::uint64_t kBaseMinute = 29'000'000;

keyforge::MinuteStamp at(std::uint64_t offset) {
    return keyforge::MinuteStamp::from_epoch_minute(kBaseMinute + offset);
}

std::vector<QuestionAnswer> three_questions() {
    return {{"pet", "rex"}, {"city", "oslo"}, {"dish", "stew"}};
}

struct Rig {
    keyforge::PrimeConfig cfg = keyforge::PrimeConfig::for_prime(7);
    CspNode csp;
    Controller controller;
    ledger::Ledger led{8};
    std::mt19937_64 salt_rng{99};

    Rig()
        : controller(cryptbox::keygen(128, 1, kBaseMinute / 1440),
                     keyforge::PrimeConfig::for_prime(7), "admin-secret", 42) {}

    keyforge::DeviceIdentity identity(const std::string& tag) {
        return {"MB-" + tag, "DSK-" + tag, "pw-" + tag};
    }

    void enroll(const std::string& client) {
        auto qa = three_questions();
        csp.register_client(client, identity(client), qa, kBaseMinute,
                            salt_rng);
    }

    VerificationOutcome login(const std::string& client,
                              const keyforge::DeviceIdentity& id,
                              std::uint64_t send_offset,
                              std::uint64_t verify_offset) {
        LoginRequest req = client_login(client, id, at(send_offset),
                                        controller.public_key(), cfg);
        return controller.verify(req, at(verify_offset), csp, led);
    }
};

} // namespace

TEST_CASE("registration stores three salted digests and rejects misuse") {
    Rig rig;
    auto qa = three_questions();
    RegistrationRecord rec = rig.csp.register_client(
        "alice", rig.identity("alice"), qa, kBaseMinute, rig.salt_rng);
    CHECK(rec.access_rights == Access::granted);
    CHECK(rec.registered_at == kBaseMinute);
    for (const SecurityAnswer& a : rec.security_answers) {
        CHECK(a.digest != kZeroDigest);
    }
    CHECK(rec.security_answers[0].salt != rec.security_answers[1].salt);

    CHECK_THROWS_AS(rig.csp.register_client("alice", rig.identity("alice"),
                                            qa, kBaseMinute, rig.salt_rng),
                    Error); // duplicate

    std::vector<QuestionAnswer> two = {{"a", "1"}, {"b", "2"}};
    CHECK_THROWS_AS(rig.csp.register_client("bob", rig.identity("bob"), two,
                                            kBaseMinute, rig.salt_rng),
                    Error);
    std::vector<QuestionAnswer> dup = {{"a", "1"}, {"a", "2"}, {"c", "3"}};
    CHECK_THROWS_AS(rig.csp.register_client("bob", rig.identity("bob"), dup,
                                            kBaseMinute, rig.salt_rng),
                    Error);
}

TEST_CASE("honest login is granted with a session token") {
    Rig rig;
    rig.enroll("alice");
    VerificationOutcome out =
        rig.login("alice", rig.identity("alice"), 5, 5);
    CHECK(out.status == Status::granted);
    REQUIRE(out.session_token.has_value());
    CHECK(out.decided_at == kBaseMinute + 5);
}

TEST_CASE("different minutes produce different ciphertexts") {
    Rig rig;
    rig.enroll("alice");
    LoginRequest a = client_login("alice", rig.identity("alice"), at(1),
                                  rig.controller.public_key(), rig.cfg);
    LoginRequest b = client_login("alice", rig.identity("alice"), at(2),
                                  rig.controller.public_key(), rig.cfg);
    CHECK(a.ciphertext.value != b.ciphertext.value);
}

TEST_CASE("a tampered credential yields mismatch") {
    Rig rig;
    rig.enroll("alice");
    keyforge::DeviceIdentity id = rig.identity("alice");
    id.password[0] ^= 1;
    CHECK(rig.login("alice", id, 5, 5).status == Status::mismatch);
}

TEST_CASE("completeness over the skew/delay grid; the 2-minute corner expires") {
    Rig rig;
    rig.enroll("alice");
    // (skew, delay) in minutes; send at M+skew, verify at M+delay
    const std::uint64_t m = 100;
    struct Case {
        std::int64_t skew;
        std::uint64_t delay;
        Status want;
    };
    for (const Case& c :
         {Case{0, 0, Status::granted}, Case{-1, 0, Status::granted},
          Case{0, 1, Status::granted},
          // both displacements together exhaust the 120 s window
          Case{-1, 1, Status::expired}}) {
        Rig fresh;
        fresh.enroll("alice");
        auto out = fresh.login(
            "alice", fresh.identity("alice"),
            static_cast<std::uint64_t>(static_cast<std::int64_t>(m) + c.skew),
            m + c.delay);
        CHECK(out.status == c.want);
    }
}

TEST_CASE("offsets of two or more minutes always expire") {
    Rig rig;
    rig.enroll("alice");
    for (std::uint64_t offset = 2; offset <= 10; ++offset) {
        auto out = rig.login("alice", rig.identity("alice"), 100 - offset,
                             100);
        CHECK(out.status == Status::expired);
    }
}

TEST_CASE("soundness: single-character mutations are rejected") {
    Rig rig;
    rig.enroll("alice");
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 60; ++trial) {
        keyforge::DeviceIdentity id = rig.identity("alice");
        std::string* field = nullptr;
        switch (rng() % 3) {
            case 0: field = &id.motherboard_serial; break;
            case 1: field = &id.disk_serial; break;
            default: field = &id.password; break;
        }
        const std::size_t pos = rng() % field->size();
        char replacement;
        do {
            replacement = static_cast<char>(32 + rng() % 95);
        } while (replacement == (*field)[pos]);
        (*field)[pos] = replacement;
        CHECK(rig.login("alice", id, 50, 50).status == Status::mismatch);
    }
}

TEST_CASE("an identical granted request replays within the window") {
    Rig rig;
    rig.enroll("alice");
    LoginRequest req = client_login("alice", rig.identity("alice"), at(9),
                                    rig.controller.public_key(), rig.cfg);
    CHECK(rig.controller.verify(req, at(9), rig.csp, rig.led).status ==
          Status::granted);
    CHECK(rig.controller.verify(req, at(9), rig.csp, rig.led).status ==
          Status::replay);
    CHECK(rig.controller.verify(req, at(10), rig.csp, rig.led).status ==
          Status::replay);
}

TEST_CASE("replay cache entries age out after the window") {
    Rig rig;
    rig.enroll("alice");
    rig.enroll("bob");
    rig.login("alice", rig.identity("alice"), 9, 9);
    CHECK(rig.controller.replay_snapshot().size() == 1);
    rig.login("bob", rig.identity("bob"), 20, 20); // triggers the purge
    CHECK(rig.controller.replay_snapshot().size() == 1);
    CHECK(rig.controller.replay_snapshot()[0].second == kBaseMinute + 20);
}

TEST_CASE("unknown clients and revoked rights are reported as such") {
    Rig rig;
    CHECK(rig.login("ghost", rig.identity("ghost"), 5, 5).status ==
          Status::unknown_client);

    rig.enroll("alice");
    rig.controller.revoke_access("admin-secret", "alice", rig.csp, rig.led,
                                 kBaseMinute + 6);
    CHECK(rig.login("alice", rig.identity("alice"), 7, 7).status ==
          Status::access_denied);
    // idempotent
    auto rec = rig.controller.revoke_access("admin-secret", "alice", rig.csp,
                                            rig.led, kBaseMinute + 8);
    CHECK(rec.access_rights == Access::denied);
    CHECK_THROWS_AS(rig.controller.revoke_access("wrong", "alice", rig.csp,
                                                 rig.led, kBaseMinute + 9),
                    Error);
    CHECK_THROWS_AS(rig.controller.revoke_access("admin-secret", "ghost",
                                                 rig.csp, rig.led,
                                                 kBaseMinute + 9),
                    Error);
}

TEST_CASE("candidate sets hold two digests that match direct recomputation") {
    Rig rig;
    rig.enroll("alice");
    auto cands = rig.csp.generate_candidates("alice", at(30), 128, rig.cfg);
    REQUIRE(cands.status == CspNode::CandidateStatus::ok);
    REQUIRE(cands.digests.size() == 2);

    auto numeric = keyforge::encode_identity(rig.identity("alice"));
    auto case_value = keyforge::compute_case(numeric);
    auto tcs = keyforge::candidate_time_cases(case_value, at(30), rig.cfg);
    CHECK(cands.digests[0] == cryptbox::time_case_digest(tcs[0].value, 128));
    CHECK(cands.digests[1] == cryptbox::time_case_digest(tcs[1].value, 128));

    CHECK(rig.csp.generate_candidates("ghost", at(30), 128, rig.cfg).status ==
          CspNode::CandidateStatus::unknown_client);
    rig.csp.set_access("alice", Access::denied);
    CHECK(rig.csp.generate_candidates("alice", at(30), 128, rig.cfg).status ==
          CspNode::CandidateStatus::access_denied);
}

TEST_CASE("password recovery gates identity updates") {
    Rig rig;
    rig.enroll("alice");

    std::vector<std::string> wrong = {"rex", "oslo", "soup"};
    CHECK(rig.controller.recover_password("alice", wrong, rig.csp, rig.led,
                                          kBaseMinute + 1) ==
          CspNode::RecoveryResult::rejected);
    keyforge::DeviceIdentity fresh = rig.identity("alice");
    fresh.password = "pw-new";
    CHECK_THROWS_AS(rig.csp.update_identity("alice", fresh), Error);

    std::vector<std::string> right = {"rex", "oslo", "stew"};
    CHECK(rig.controller.recover_password("alice", right, rig.csp, rig.led,
                                          kBaseMinute + 2) ==
          CspNode::RecoveryResult::accepted);
    rig.csp.update_identity("alice", fresh);
    CHECK(rig.login("alice", fresh, 3, 3).status == Status::granted);
    CHECK(rig.login("alice", rig.identity("alice"), 4, 4).status ==
          Status::mismatch);

    std::vector<std::string> missing = {"a", "b", "c"};
    CHECK_THROWS_AS(rig.controller.recover_password("ghost", missing, rig.csp,
                                                    rig.led, kBaseMinute + 5),
                    Error);
}

TEST_CASE("every attempt and recovery lands in the ledger exactly once") {
    Rig rig;
    rig.enroll("alice");
    std::size_t attempts = 0;

    rig.login("alice", rig.identity("alice"), 1, 1); // granted
    ++attempts;
    keyforge::DeviceIdentity bad = rig.identity("alice");
    bad.password[2] ^= 2;
    rig.login("alice", bad, 2, 2); // mismatch
    ++attempts;
    rig.login("alice", rig.identity("alice"), 3, 6); // expired
    ++attempts;
    rig.login("ghost", rig.identity("ghost"), 7, 7); // unknown
    ++attempts;
    LoginRequest req = client_login("alice", rig.identity("alice"), at(8),
                                    rig.controller.public_key(), rig.cfg);
    rig.controller.verify(req, at(8), rig.csp, rig.led);
    rig.controller.verify(req, at(8), rig.csp, rig.led); // replay
    attempts += 2;

    std::vector<std::string> right = {"rex", "oslo", "stew"};
    rig.controller.recover_password("alice", right, rig.csp, rig.led,
                                    kBaseMinute + 9);

    std::size_t attempt_entries = 0, recovery_entries = 0;
    for (const auto& e : rig.led.query("", 0, UINT64_MAX)) {
        if (auto a = ledger::parse_attempt(e)) {
            if (a->detail == "password recovery") {
                ++recovery_entries;
            } else {
                ++attempt_entries;
            }
        }
    }
    CHECK(attempt_entries == attempts);
    CHECK(recovery_entries == 1);
}

TEST_CASE("an expired controller key refuses login requests") {
    Rig rig;
    rig.enroll("alice");
    cryptbox::KeyPair old = cryptbox::keygen(128, 3, 0, 1); // expired long ago
    CHECK_THROWS_AS(client_login("alice", rig.identity("alice"), at(1),
                                 old.public_part(), rig.cfg),
                    Error);
}

TEST_CASE("registry persistence round-trips") {
    Rig rig;
    rig.enroll("alice");
    rig.enroll("bob");
    rig.csp.set_access("bob", Access::denied);

    const auto path = std::filesystem::temp_directory_path() /
                      "caudit_registry_test.rec";
    rig.csp.save(path);
    CspNode loaded = CspNode::load(path);
    std::filesystem::remove(path);

    CHECK(loaded.has_client("alice"));
    CHECK(loaded.record_of("bob").access_rights == Access::denied);
    // the loaded store still verifies logins end to end
    LoginRequest req = client_login("alice", rig.identity("alice"), at(40),
                                    rig.controller.public_key(), rig.cfg);
    CHECK(rig.controller.verify(req, at(40), loaded, rig.led).status ==
          Status::granted);
}
