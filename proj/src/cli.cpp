#include "caudit/cli.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>

#include <CLI11.hpp>

#include "caudit/errors.hpp"
#include "caudit/integrity.hpp"
#include "caudit/netsim.hpp"
#include "caudit/sentinel.hpp"
#include "caudit/workspace.hpp"

namespace caudit::cli {

namespace {

int errc_exit_code(Errc c) {
    switch (c) {
        case Errc::invalid_identity: return 10;
        case Errc::parameter:
        case Errc::malformed_record:
        case Errc::malformed_script:
        case Errc::out_of_range: return 11;
        case Errc::already_registered: return 12;
        case Errc::stale_key: return 13;
        case Errc::conflict: return 14;
        case Errc::unknown_file: return 15;
        case Errc::bad_token: return 16;
        case Errc::unauthorized: return 17;
        case Errc::insufficient_data:
        case Errc::degenerate_model: return 18;
        case Errc::empty_file: return 19;
        case Errc::unknown_client: return 23;
        case Errc::message_too_large:
        case Errc::zero_case: return 10;
        case Errc::chain_invalid: return 40;
        case Errc::io_failure: return 70;
    }
    return 70;
}

int status_exit_code(protocol::Status s) {
    switch (s) {
        case protocol::Status::granted: return 0;
        case protocol::Status::mismatch: return 20;
        case protocol::Status::expired: return 21;
        case protocol::Status::access_denied: return 22;
        case protocol::Status::unknown_client: return 23;
        case protocol::Status::replay: return 24;
    }
    return 20;
}

int verdict_exit_code(integrity::AuditStatus s) {
    switch (s) {
        case integrity::AuditStatus::pass: return 0;
        case integrity::AuditStatus::checksum_mismatch: return 30;
        case integrity::AuditStatus::descriptor_mismatch: return 31;
        case integrity::AuditStatus::timestamp_mismatch: return 32;
    }
    return 30;
}

struct CommonArgs {
    std::string workspace;
    std::string config;
    std::uint64_t now_minute = 0; // 0 = wall clock
};

std::uint64_t effective_now(const CommonArgs& common) {
    return common.now_minute != 0 ? common.now_minute : current_epoch_minute();
}

Workspace open_workspace(const CommonArgs& common) {
    std::optional<std::filesystem::path> override;
    if (!common.config.empty()) override = common.config;
    return Workspace::open(common.workspace, override);
}

void add_common(CLI::App* cmd, CommonArgs& common) {
    cmd->add_option("--workspace", common.workspace, "workspace directory")
        ->envname("CAUDIT_WORKSPACE")
        ->required();
    cmd->add_option("--config", common.config,
                    "config file (default <workspace>/config.json)")
        ->envname("CAUDIT_CONFIG");
    cmd->add_option("--now", common.now_minute,
                    "override the clock (UTC epoch minute); testing aid")
        ->envname("CAUDIT_NOW");
}

std::string owner_for_token(const Workspace& ws, const std::string& token_hex) {
    auto owner = ws.token_client(token_hex);
    if (!owner) raise(Errc::bad_token, "unknown or missing session token");
    return *owner;
}

std::vector<std::uint8_t> read_payload_file(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    if (!f) raise(Errc::io_failure, "cannot read " + p.string());
    std::ostringstream buf;
    buf << f.rdbuf();
    std::string s = buf.str();
    return {s.begin(), s.end()};
}

std::uint64_t parse_size(const std::string& text) {
    std::size_t pos = 0;
    while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') ++pos;
    if (pos == 0) raise(Errc::parameter, "bad size: " + text);
    std::uint64_t value = std::stoull(text.substr(0, pos));
    std::string suffix = text.substr(pos);
    std::transform(suffix.begin(), suffix.end(), suffix.begin(), ::toupper);
    if (suffix.empty() || suffix == "B") return value;
    if (suffix == "KB") return value * 1024;
    if (suffix == "MB") return value * 1024 * 1024;
    raise(Errc::parameter, "bad size suffix: " + text);
}

std::vector<std::uint64_t> parse_size_list(const std::string& list) {
    std::vector<std::uint64_t> out;
    std::stringstream ss(list);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(parse_size(item));
    }
    return out;
}

std::vector<std::uint64_t> parse_u64_list(const std::string& list) {
    std::vector<std::uint64_t> out;
    std::stringstream ss(list);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(std::stoull(item));
    }
    return out;
}

std::string sanitize_file_id(std::string name) {
    for (char& c : name) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                        (c >= '0' && c <= '9') || c == '.' || c == '_' ||
                        c == '-';
        if (!ok) c = '_';
    }
    if (name.empty()) name = "file";
    return name;
}

// ---- commands ---------------------------------------------------------------

int cmd_init(const CommonArgs& common, std::ostream& out) {
    Workspace ws =
        Workspace::init(common.workspace, effective_now(common) / 1440);
    out << "initialized " << ws.root().string() << "\n";
    return 0;
}

struct IdentityArgs {
    std::string client;
    std::string motherboard;
    std::string disk;
    std::string password;
};

int cmd_register(const CommonArgs& common, const IdentityArgs& id,
                 const std::vector<std::string>& questions,
                 const std::vector<std::string>& answers, std::ostream& out) {
    if (questions.size() != 3 || answers.size() != 3) {
        raise(Errc::parameter, "exactly 3 --question and 3 --answer required");
    }
    WorkspaceLock lock(common.workspace);
    Workspace ws = open_workspace(common);
    protocol::CspNode csp = ws.load_registry();
    std::vector<protocol::QuestionAnswer> qa;
    for (std::size_t i = 0; i < 3; ++i) qa.push_back({questions[i], answers[i]});
    std::mt19937_64 salt_rng(std::random_device{}());
    csp.register_client(id.client,
                        {id.motherboard, id.disk, id.password}, qa,
                        effective_now(common), salt_rng);
    ws.save_registry(csp);
    out << "registered " << id.client << "\n";
    return 0;
}

int cmd_login(const CommonArgs& common, const IdentityArgs& id,
              std::ostream& out) {
    WorkspaceLock lock(common.workspace);
    Workspace ws = open_workspace(common);
    protocol::CspNode csp = ws.load_registry();
    ledger::Ledger led = ws.load_ledger();
    protocol::Controller controller = ws.load_controller();

    const auto now =
        keyforge::MinuteStamp::from_epoch_minute(effective_now(common));
    protocol::LoginRequest req = protocol::client_login(
        id.client, {id.motherboard, id.disk, id.password}, now,
        controller.public_key(), ws.prime_config());
    protocol::VerificationOutcome outcome =
        controller.verify(req, now, csp, led);

    ws.save_ledger(led);
    ws.save_replay(controller);
    if (outcome.status == protocol::Status::granted) {
        ws.remember_token(*outcome.session_token, id.client, now.epoch_minute);
        out << "granted " << to_hex(*outcome.session_token) << "\n";
    } else {
        out << protocol::status_token(outcome.status) << "\n";
    }
    return status_exit_code(outcome.status);
}

int cmd_recover(const CommonArgs& common, const std::string& client,
                const std::vector<std::string>& answers,
                const IdentityArgs& new_identity, std::ostream& out) {
    if (answers.size() != 3) raise(Errc::parameter, "exactly 3 --answer required");
    WorkspaceLock lock(common.workspace);
    Workspace ws = open_workspace(common);
    protocol::CspNode csp = ws.load_registry();
    ledger::Ledger led = ws.load_ledger();
    protocol::Controller controller = ws.load_controller();

    int code = 0;
    try {
        auto result = controller.recover_password(client, answers, csp, led,
                                                  effective_now(common));
        if (result == protocol::CspNode::RecoveryResult::accepted) {
            if (!new_identity.password.empty()) {
                csp.update_identity(client,
                                    {new_identity.motherboard,
                                     new_identity.disk,
                                     new_identity.password});
                out << "accepted; identity updated\n";
            } else {
                out << "accepted\n";
            }
        } else {
            out << "rejected\n";
            code = 20;
        }
    } catch (...) {
        ws.save_ledger(led); // the attempt entry must survive the failure
        throw;
    }
    ws.save_registry(csp);
    ws.save_ledger(led);
    return code;
}

int cmd_revoke(const CommonArgs& common, const std::string& client,
               const std::string& admin_token, std::ostream& out) {
    WorkspaceLock lock(common.workspace);
    Workspace ws = open_workspace(common);
    protocol::CspNode csp = ws.load_registry();
    ledger::Ledger led = ws.load_ledger();
    protocol::Controller controller = ws.load_controller();
    controller.revoke_access(admin_token, client, csp, led,
                             effective_now(common));
    ws.save_registry(csp);
    ws.save_ledger(led);
    out << "revoked " << client << "\n";
    return 0;
}

int cmd_upload(const CommonArgs& common, const std::string& token,
               const std::string& file_path, std::string name,
               std::ostream& out) {
    WorkspaceLock lock(common.workspace);
    Workspace ws = open_workspace(common);
    const std::string owner = owner_for_token(ws, token);
    std::vector<std::uint8_t> payload = read_payload_file(file_path);
    if (name.empty()) {
        name = std::filesystem::path(file_path).filename().string();
    }
    const std::string file_id = sanitize_file_id(name);
    ledger::Ledger led = ws.load_ledger();
    integrity::CloudStore store(ws.store_dir());
    integrity::FileRecord rec = store.record_upload(
        file_id, payload, name, owner, ws.config().block_size,
        effective_now(common), led);
    ws.save_ledger(led);
    out << "uploaded " << rec.file_id << " blocks="
        << rec.block_checksums.size() << " checksum="
        << to_hex(rec.file_checksum) << "\n";
    return 0;
}

int cmd_audit(const CommonArgs& common, const std::string& token,
              const std::string& file_id, const std::string& auditor,
              std::uint64_t count, std::uint64_t seed, bool exhaustive,
              std::ostream& out) {
    WorkspaceLock lock(common.workspace);
    Workspace ws = open_workspace(common);
    owner_for_token(ws, token);
    ledger::Ledger led = ws.load_ledger();
    integrity::CloudStore store(ws.store_dir());
    const std::uint64_t now = effective_now(common);

    integrity::AuditVerdict verdict;
    std::uint64_t challenged = 0;
    std::uint64_t duration_ms = 1;
    if (exhaustive) {
        verdict = store.reaudit_timed(file_id, auditor, now, led,
                                      &duration_ms);
        challenged = store.load_record(file_id).block_checksums.size();
    } else {
        integrity::Challenge ch =
            store.issue_challenge(file_id, count, seed, now, auditor);
        challenged = ch.block_indices.size();
        verdict = store.audit_verify_timed(ch, now, led, false, &duration_ms);
    }
    ws.save_ledger(led);
    ws.append_audit_report_row(file_id, auditor,
                               integrity::audit_status_token(verdict.status),
                               duration_ms, challenged, now);

    out << integrity::audit_status_token(verdict.status);
    if (!verdict.failing_indices.empty()) {
        out << " blocks";
        for (std::uint64_t idx : verdict.failing_indices) out << " " << idx;
    }
    out << "\n";
    return verdict_exit_code(verdict.status);
}

int cmd_verify_ledger(const CommonArgs& common, std::ostream& out) {
    Workspace ws = open_workspace(common);
    auto bad = ledger::verify_chain_file(ws.chain_file());
    if (!bad) {
        out << "valid\n";
        return 0;
    }
    out << "invalid at block " << *bad << "\n";
    return 40;
}

int cmd_sentinel_report(const CommonArgs& common, double k,
                        std::size_t min_n, std::ostream& out) {
    WorkspaceLock lock(common.workspace);
    Workspace ws = open_workspace(common);
    ledger::Ledger led = ws.load_ledger();
    std::vector<sentinel::AuditRecord> pool =
        sentinel::records_from_ledger(led);
    if (pool.empty()) {
        out << "auditor_id,status,color,aggregate_deviation,record_count\n";
        return 0;
    }
    sentinel::DurationModel model =
        sentinel::fit_duration_model(pool, min_n);
    std::vector<sentinel::AuditorProfile> profiles =
        sentinel::profiles_from_records(pool);

    integrity::CloudStore store(ws.store_dir());
    const std::uint64_t now = effective_now(common);
    for (sentinel::AuditorProfile& p : profiles) {
        p = sentinel::update_status(
            std::move(p), model, k, min_n, &led, now,
            [&](const std::string& file_id) {
                if (store.exists(file_id)) {
                    store.reaudit_timed(file_id, "system", now, led);
                }
            });
        p.color = sentinel::assign_quadrant(p, model, pool, k);
    }
    ws.save_ledger(led);
    out << sentinel::report_csv(profiles, model);
    return 0;
}

int cmd_bench(const CommonArgs& common, const std::string& sizes,
              const std::string& blocks, std::uint64_t seed,
              std::ostream& out) {
    Workspace ws = open_workspace(common);
    if (sizes.empty() && blocks.empty()) {
        raise(Errc::parameter, "pass --sizes and/or --blocks");
    }
    if (!sizes.empty()) {
        out << "size_bytes,seconds\n";
        for (const netsim::BenchRow& row :
             netsim::bench_encrypt(parse_size_list(sizes))) {
            char buf[64];
            std::snprintf(buf, sizeof(buf), "%.6f", row.seconds);
            out << row.size_bytes << ',' << buf << '\n';
        }
    }
    if (!blocks.empty()) {
        netsim::SimConfig cfg;
        cfg.seed = seed != 0 ? seed : ws.config().sim_seed;
        cfg.block_size = ws.config().block_size;
        out << "block_count,direction,elapsed_ms,reference_download_overhead_s\n";
        for (std::uint64_t n : parse_u64_list(blocks)) {
            auto up = netsim::measure_transfer(n, netsim::Direction::upload,
                                               cfg);
            auto down = netsim::measure_transfer(
                n, netsim::Direction::download, cfg);
            out << n << ",upload," << up.elapsed_ms << ",\n";
            out << n << ",download," << down.elapsed_ms << ','
                << netsim::kReferenceDownloadOverheadSeconds << '\n';
        }
    }
    return 0;
}

int cmd_scenario(const CommonArgs& common, const std::string& script_path,
                 netsim::SimConfig cfg, bool seed_given,
                 const std::string& out_path, std::ostream& out) {
    Workspace ws = open_workspace(common);
    if (!seed_given) cfg.seed = ws.config().sim_seed;
    cfg.block_size = ws.config().block_size;
    cfg.rsa_bits = ws.config().rsa_bits;
    cfg.prime_p = ws.config().prime_p;
    std::ifstream f(script_path, std::ios::binary);
    if (!f) raise(Errc::io_failure, "cannot read " + script_path);
    std::ostringstream buf;
    buf << f.rdbuf();
    std::vector<netsim::ScriptEvent> script = netsim::parse_script(buf.str());
    netsim::Trace trace = netsim::run_scenario(script, cfg);
    const std::string serialized = trace.serialize();
    if (out_path.empty()) {
        out << serialized;
    } else {
        std::ofstream o(out_path, std::ios::binary | std::ios::trunc);
        if (!o) raise(Errc::io_failure, "cannot write " + out_path);
        o << serialized;
    }
    return 0;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
    CLI::App app{"desk-scale secure cloud-storage auditing"};
    app.require_subcommand(1);

    CommonArgs common;
    IdentityArgs identity;
    std::vector<std::string> questions, answers;
    std::string token, file_arg, name, client, admin_token;
    std::string sizes, blocks, script_path, out_path;
    std::uint64_t count = 1, seed = 0;
    double k = sentinel::kDefaultThreshold;
    std::size_t min_n = sentinel::kDefaultMinRecords;
    netsim::SimConfig sim_cfg;

    CLI::App* init = app.add_subcommand("init", "create a workspace");
    add_common(init, common);

    CLI::App* reg = app.add_subcommand("register", "register a client");
    add_common(reg, common);
    reg->add_option("--client", identity.client)->envname("CAUDIT_CLIENT")
        ->required();
    reg->add_option("--motherboard", identity.motherboard)->required();
    reg->add_option("--disk", identity.disk)->required();
    reg->add_option("--password", identity.password)->required();
    reg->add_option("--question", questions, "security question (3x)");
    reg->add_option("--answer", answers, "security answer (3x)");

    CLI::App* login = app.add_subcommand("login", "authenticate a client");
    add_common(login, common);
    login->add_option("--client", identity.client)->envname("CAUDIT_CLIENT")
        ->required();
    login->add_option("--motherboard", identity.motherboard)->required();
    login->add_option("--disk", identity.disk)->required();
    login->add_option("--password", identity.password)->required();

    CLI::App* recover = app.add_subcommand("recover", "password recovery");
    add_common(recover, common);
    recover->add_option("--client", client)->envname("CAUDIT_CLIENT")
        ->required();
    recover->add_option("--answer", answers, "security answer (3x)");
    recover->add_option("--motherboard", identity.motherboard);
    recover->add_option("--disk", identity.disk);
    recover->add_option("--new-password", identity.password);

    CLI::App* revoke = app.add_subcommand("revoke", "revoke access rights");
    add_common(revoke, common);
    revoke->add_option("--client", client)->envname("CAUDIT_CLIENT")
        ->required();
    revoke->add_option("--admin-token", admin_token)
        ->envname("CAUDIT_ADMIN_TOKEN")
        ->required();

    CLI::App* upload = app.add_subcommand("upload", "store a payload");
    add_common(upload, common);
    upload->add_option("--token", token)->envname("CAUDIT_TOKEN")->required();
    upload->add_option("--file", file_arg, "payload path")
        ->envname("CAUDIT_FILE")
        ->required();
    upload->add_option("--name", name, "file id (default: sanitized basename)");

    CLI::App* audit = app.add_subcommand("audit", "challenge stored blocks");
    add_common(audit, common);
    audit->add_option("--token", token)->envname("CAUDIT_TOKEN")->required();
    audit->add_option("--file", file_arg, "file id")->envname("CAUDIT_FILE")
        ->required();
    audit->add_option("--auditor", client, "auditor id")->required();
    audit->add_option("--count", count, "blocks to challenge (default 1)");
    audit->add_option("--seed", seed, "challenge seed")->envname("CAUDIT_SEED");

    CLI::App* reaudit = app.add_subcommand("reaudit", "exhaustive re-audit");
    add_common(reaudit, common);
    reaudit->add_option("--token", token)->envname("CAUDIT_TOKEN")->required();
    reaudit->add_option("--file", file_arg, "file id")->envname("CAUDIT_FILE")
        ->required();
    reaudit->add_option("--auditor", client, "auditor id")->required();

    CLI::App* verify = app.add_subcommand("verify-ledger",
                                          "re-verify the hash chain");
    add_common(verify, common);

    CLI::App* report = app.add_subcommand("sentinel-report",
                                          "auditor behavior report (CSV)");
    add_common(report, common);
    report->add_option("--k", k, "blacklist threshold");
    report->add_option("--min-n", min_n, "minimum records per auditor");

    CLI::App* bench = app.add_subcommand("bench", "benchmark CSV emission");
    add_common(bench, common);
    bench->add_option("--sizes", sizes, "payload sizes, e.g. 100KB,500KB")
        ->envname("CAUDIT_SIZES");
    bench->add_option("--blocks", blocks, "block counts, e.g. 1,2,4,8")
        ->envname("CAUDIT_BLOCKS");
    bench->add_option("--seed", seed)->envname("CAUDIT_SEED");

    CLI::App* scenario = app.add_subcommand("scenario",
                                            "run a scripted simulation");
    add_common(scenario, common);
    scenario->add_option("--script", script_path)->required();
    scenario->add_option("--seed", sim_cfg.seed)->envname("CAUDIT_SEED");
    scenario->add_option("--latency-base", sim_cfg.latency.base_ms);
    scenario->add_option("--latency-jitter", sim_cfg.latency.jitter_ms);
    scenario->add_option("--drop", sim_cfg.drop_probability);
    scenario->add_option("--client-skew", sim_cfg.client_skew_minutes);
    scenario->add_option("--controller-skew", sim_cfg.controller_skew_minutes);
    scenario->add_option("--csp-skew", sim_cfg.csp_skew_minutes);
    scenario->add_option("--out", out_path, "trace file (default stdout)");

    std::vector<std::string> argv_storage = args;
    std::vector<const char*> argv;
    argv.push_back("caudit");
    for (const std::string& a : argv_storage) argv.push_back(a.c_str());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return 64;
    }

    try {
        if (init->parsed()) return cmd_init(common, out);
        if (reg->parsed()) {
            return cmd_register(common, identity, questions, answers, out);
        }
        if (login->parsed()) return cmd_login(common, identity, out);
        if (recover->parsed()) {
            return cmd_recover(common, client, answers, identity, out);
        }
        if (revoke->parsed()) return cmd_revoke(common, client, admin_token, out);
        if (upload->parsed()) {
            return cmd_upload(common, token, file_arg, name, out);
        }
        if (audit->parsed()) {
            return cmd_audit(common, token, file_arg, client, count, seed,
                             false, out);
        }
        if (reaudit->parsed()) {
            return cmd_audit(common, token, file_arg, client, 0, 0, true, out);
        }
        if (verify->parsed()) return cmd_verify_ledger(common, out);
        if (report->parsed()) {
            return cmd_sentinel_report(common, k, min_n, out);
        }
        if (bench->parsed()) return cmd_bench(common, sizes, blocks, seed, out);
        if (scenario->parsed()) {
            return cmd_scenario(common, script_path, sim_cfg,
                                scenario->count("--seed") > 0, out_path, out);
        }
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return errc_exit_code(e.code());
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 70;
    }
    return 64;
}

} // namespace caudit::cli
