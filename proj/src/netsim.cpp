#include "caudit/netsim.hpp"

#include <algorithm>
#include <chrono>
#include <queue>
#include <random>

#include "caudit/cryptbox.hpp"
#include "caudit/errors.hpp"
#include "caudit/wire.hpp"

namespace caudit::netsim {

std::vector<ScriptEvent> parse_script(std::string_view text) {
    std::vector<ScriptEvent> script;
    std::size_t start = 0;
    while (start < text.size()) {
        std::size_t nl = text.find('\n', start);
        std::string_view line = nl == std::string_view::npos
                                    ? text.substr(start)
                                    : text.substr(start, nl - start);
        start = nl == std::string_view::npos ? text.size() : nl + 1;
        if (line.empty()) continue;
        try {
            wire::Reader r(line);
            ScriptEvent ev;
            ev.at_ms = r.u64();
            ev.actor = r.token();
            ev.event = r.token();
            std::size_t argc = 0;
            if (ev.actor == "client" &&
                (ev.event == "register" || ev.event == "login")) {
                argc = 4; // client id, motherboard, disk, password
            } else if (ev.actor == "admin" && ev.event == "revoke") {
                argc = 1;
            } else {
                raise(Errc::malformed_script,
                      "unknown script event: " + ev.actor + " " + ev.event);
            }
            for (std::size_t i = 0; i < argc; ++i) ev.args.push_back(r.str());
            r.expect_end();
            script.push_back(std::move(ev));
        } catch (const Error& e) {
            if (e.code() == Errc::malformed_script) throw;
            raise(Errc::malformed_script,
                  std::string("bad script line: ") + e.what());
        }
    }
    std::stable_sort(script.begin(), script.end(),
                     [](const ScriptEvent& a, const ScriptEvent& b) {
                         return a.at_ms < b.at_ms;
                     });
    return script;
}

std::string serialize_script(const std::vector<ScriptEvent>& script) {
    std::string out;
    for (const ScriptEvent& ev : script) {
        wire::Writer w;
        w.u64(ev.at_ms).token(ev.actor).token(ev.event);
        for (const std::string& a : ev.args) w.str(a);
        out += w.record();
        out.push_back('\n');
    }
    return out;
}

std::string Trace::serialize() const {
    std::string out;
    for (const std::string& line : lines) {
        out += line;
        out.push_back('\n');
    }
    {
        wire::Writer w;
        w.token("final").token("sent").u64(sent);
        out += w.take();
        out.push_back('\n');
    }
    {
        wire::Writer w;
        w.token("final").token("delivered").u64(delivered);
        out += w.take();
        out.push_back('\n');
    }
    {
        wire::Writer w;
        w.token("final").token("dropped").u64(dropped);
        out += w.take();
        out.push_back('\n');
    }
    out += "ledger\n";
    out += led.serialize_chain();
    return out;
}

namespace {

enum class MsgKind { login_req, cand_req, cand_reply, outcome };

const char* msg_kind_token(MsgKind k) {
    switch (k) {
        case MsgKind::login_req: return "login_req";
        case MsgKind::cand_req: return "cand_req";
        case MsgKind::cand_reply: return "cand_reply";
        case MsgKind::outcome: return "outcome";
    }
    return "login_req";
}

struct Message {
    std::uint64_t id = 0;
    MsgKind kind = MsgKind::login_req;
    std::string from;
    std::string to;
    bool dropped = false;
    protocol::LoginRequest req;
    protocol::CspNode::CandidateSet candidates;
    protocol::Status status = protocol::Status::mismatch;
};

struct SimEvent {
    std::uint64_t at = 0;
    std::uint64_t seq = 0;
    bool is_script = false;
    ScriptEvent script;
    Message msg;
};

struct EventLater {
    bool operator()(const SimEvent& a, const SimEvent& b) const {
        return a.at != b.at ? a.at > b.at : a.seq > b.seq;
    }
};

std::uint64_t skewed_minute(std::uint64_t at_ms, std::int64_t skew_minutes) {
    const std::int64_t m = static_cast<std::int64_t>(
                               kBaseEpochMinute + at_ms / 60000) +
                           skew_minutes;
    return m < 0 ? 0 : static_cast<std::uint64_t>(m);
}

class Simulation {
public:
    Simulation(const SimConfig& cfg)
        : cfg_(cfg),
          rng_(cfg.seed),
          prime_cfg_(keyforge::PrimeConfig::for_prime(cfg.prime_p)),
          controller_(cryptbox::keygen(cfg.rsa_bits, cfg.seed,
                                       skewed_minute(0, 0) / (24 * 60)),
                      prime_cfg_, "sim-admin", cfg.seed ^ 0xA5A5A5A5ULL) {
        if (cfg.drop_probability < 0.0 || cfg.drop_probability >= 1.0) {
            raise(Errc::parameter, "drop probability must be in [0, 1)");
        }
        if (cfg.bandwidth_bytes_per_ms == 0) {
            raise(Errc::parameter, "bandwidth must be positive");
        }
    }

    Trace run(const std::vector<ScriptEvent>& script) {
        for (const ScriptEvent& ev : script) {
            SimEvent e;
            e.at = ev.at_ms;
            e.seq = next_seq_++;
            e.is_script = true;
            e.script = ev;
            queue_.push(std::move(e));
        }
        while (!queue_.empty()) {
            SimEvent e = queue_.top();
            queue_.pop();
            now_ = e.at;
            if (e.is_script) {
                handle_script(e.script);
            } else {
                handle_message(e.msg);
            }
        }
        trace_.led.flush(skewed_minute(now_, cfg_.controller_skew_minutes));
        for (const std::string& id : csp_.client_ids()) {
            wire::Writer w;
            w.u64(now_).token("final_client").str(id).token(
                csp_.record_of(id).access_rights == protocol::Access::granted
                    ? "granted"
                    : "denied");
            trace_.lines.push_back(w.take());
        }
        return std::move(trace_);
    }

private:
    void emit(std::string line) { trace_.lines.push_back(std::move(line)); }

    void send(Message msg) {
        msg.id = next_msg_id_++;
        {
            wire::Writer w;
            w.u64(now_).token("send").u64(msg.id).token(msg.from).token(
                msg.to).token(msg_kind_token(msg.kind));
            emit(w.take());
        }
        ++trace_.sent;
        const std::uint64_t jitter =
            cfg_.latency.jitter_ms == 0
                ? 0
                : uniform_below(cfg_.latency.jitter_ms + 1, rng_);
        const std::uint64_t arrive = now_ + cfg_.latency.base_ms + jitter;
        const double roll =
            static_cast<double>(rng_() >> 11) * 0x1.0p-53; // [0, 1)
        msg.dropped = roll < cfg_.drop_probability;
        SimEvent e;
        e.at = arrive;
        e.seq = next_seq_++;
        e.msg = std::move(msg);
        queue_.push(std::move(e));
    }

    void handle_script(const ScriptEvent& ev) {
        if (ev.event == "register") {
            keyforge::DeviceIdentity id{ev.args[1], ev.args[2], ev.args[3]};
            csp_.register_client(
                ev.args[0], id, default_questions(),
                skewed_minute(now_, cfg_.csp_skew_minutes), rng_);
            wire::Writer w;
            w.u64(now_).token("setup").token("register").str(ev.args[0]);
            emit(w.take());
        } else if (ev.event == "login") {
            keyforge::DeviceIdentity id{ev.args[1], ev.args[2], ev.args[3]};
            protocol::LoginRequest req = protocol::client_login(
                ev.args[0], id,
                keyforge::MinuteStamp::from_epoch_minute(
                    skewed_minute(now_, cfg_.client_skew_minutes)),
                controller_.public_key(), prime_cfg_);
            Message msg;
            msg.kind = MsgKind::login_req;
            msg.from = "client";
            msg.to = "controller";
            msg.req = std::move(req);
            send(std::move(msg));
        } else if (ev.event == "revoke") {
            controller_.revoke_access(
                "sim-admin", ev.args[0], csp_, trace_.led,
                skewed_minute(now_, cfg_.controller_skew_minutes));
            wire::Writer w;
            w.u64(now_).token("setup").token("revoke").str(ev.args[0]);
            emit(w.take());
        }
    }

    void handle_message(Message msg) {
        {
            wire::Writer w;
            w.u64(now_).token(msg.dropped ? "drop" : "deliver")
                .u64(msg.id)
                .token(msg.from)
                .token(msg.to)
                .token(msg_kind_token(msg.kind));
            emit(w.take());
        }
        if (msg.dropped) {
            ++trace_.dropped;
            return;
        }
        ++trace_.delivered;

        switch (msg.kind) {
            case MsgKind::login_req: {
                Message fwd;
                fwd.kind = MsgKind::cand_req;
                fwd.from = "controller";
                fwd.to = "csp";
                fwd.req = std::move(msg.req);
                send(std::move(fwd));
                break;
            }
            case MsgKind::cand_req: {
                // the CSP computes the candidate window on its own clock
                Message reply;
                reply.kind = MsgKind::cand_reply;
                reply.from = "csp";
                reply.to = "controller";
                reply.candidates = csp_.generate_candidates(
                    msg.req.client_id,
                    keyforge::MinuteStamp::from_epoch_minute(
                        skewed_minute(now_, cfg_.csp_skew_minutes)),
                    cfg_.rsa_bits, prime_cfg_);
                reply.req = std::move(msg.req);
                send(std::move(reply));
                break;
            }
            case MsgKind::cand_reply: {
                protocol::VerificationOutcome out =
                    controller_.verify_with_candidates(
                        msg.req, msg.candidates,
                        keyforge::MinuteStamp::from_epoch_minute(skewed_minute(
                            now_, cfg_.controller_skew_minutes)),
                        trace_.led);
                {
                    wire::Writer w;
                    w.u64(now_).token("outcome").str(msg.req.client_id).token(
                        protocol::status_token(out.status));
                    emit(w.take());
                }
                trace_.outcomes.emplace_back(msg.req.client_id, out.status);
                Message back;
                back.kind = MsgKind::outcome;
                back.from = "controller";
                back.to = "client";
                back.req = std::move(msg.req);
                back.status = out.status;
                send(std::move(back));
                break;
            }
            case MsgKind::outcome:
                break; // terminal leg
        }
    }

    static std::vector<protocol::QuestionAnswer> default_questions() {
        return {{"q1", "a1"}, {"q2", "a2"}, {"q3", "a3"}};
    }

    SimConfig cfg_;
    std::mt19937_64 rng_;
    keyforge::PrimeConfig prime_cfg_;
    protocol::CspNode csp_;
    protocol::Controller controller_;
    Trace trace_;
    std::priority_queue<SimEvent, std::vector<SimEvent>, EventLater> queue_;
    std::uint64_t now_ = 0;
    std::uint64_t next_seq_ = 0;
    std::uint64_t next_msg_id_ = 0;
};

} // namespace

Trace run_scenario(const std::vector<ScriptEvent>& script,
                   const SimConfig& cfg) {
    Simulation sim(cfg);
    return sim.run(script);
}

TransferMeasurement measure_transfer(std::uint64_t block_count,
                                     Direction direction,
                                     const SimConfig& cfg) {
    if (block_count < 1) raise(Errc::parameter, "block count must be >= 1");
    if (cfg.bandwidth_bytes_per_ms == 0) {
        raise(Errc::parameter, "bandwidth must be positive");
    }
    std::mt19937_64 rng(cfg.seed);
    const std::uint64_t transfer_ms =
        (cfg.block_size + cfg.bandwidth_bytes_per_ms - 1) /
        cfg.bandwidth_bytes_per_ms;
    const std::uint64_t crypto_ms =
        direction == Direction::upload ? kEncryptCostMs
                                       : kDecryptCostMs + kAuditVerifyCostMs;
    std::uint64_t elapsed = 0;
    for (std::uint64_t i = 0; i < block_count; ++i) {
        // request + response legs share the jitter stream across directions,
        // so equal configs compare block by block
        std::uint64_t legs = 0;
        for (int leg = 0; leg < 2; ++leg) {
            const std::uint64_t jitter =
                cfg.latency.jitter_ms == 0
                    ? 0
                    : uniform_below(cfg.latency.jitter_ms + 1, rng);
            legs += cfg.latency.base_ms + jitter;
        }
        elapsed += legs + transfer_ms + crypto_ms;
    }
    return {block_count, direction, elapsed};
}

std::vector<BenchRow> bench_encrypt(const std::vector<std::uint64_t>& sizes) {
    std::vector<BenchRow> rows;
    rows.reserve(sizes.size());
    cryptbox::SessionKey key;
    for (std::size_t i = 0; i < key.bytes.size(); ++i) {
        key.bytes[i] = static_cast<std::uint8_t>(i * 17 + 3);
    }
    for (std::uint64_t size : sizes) {
        if (size == 0) raise(Errc::parameter, "bench size must be positive");
        std::vector<std::uint8_t> payload(size);
        for (std::size_t i = 0; i < payload.size(); ++i) {
            payload[i] = static_cast<std::uint8_t>(i);
        }
        const auto start = std::chrono::steady_clock::now();
        std::vector<std::uint8_t> encrypted = cryptbox::keystream_xor(payload,
                                                                      key);
        const auto stop = std::chrono::steady_clock::now();
        // keep the result alive so the work cannot be elided
        if (encrypted.size() != payload.size()) {
            raise(Errc::io_failure, "keystream length changed");
        }
        rows.push_back(
            {size, std::chrono::duration<double>(stop - start).count()});
    }
    return rows;
}

} // namespace caudit::netsim
