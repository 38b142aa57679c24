#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "caudit/ledger.hpp"
#include "caudit/protocol.hpp"

namespace caudit::netsim {

// Virtual time starts here so simulated minute stamps are realistic and
// negative skews never underflow.
inline constexpr std::uint64_t kBaseEpochMinute = 29'000'000;

// Per-block crypto costs of the transfer model. Download carries the
// decrypt + audit-verify legs, which is what keeps it at or above upload
// for equal configurations.
inline constexpr std::uint64_t kEncryptCostMs = 2;
inline constexpr std::uint64_t kDecryptCostMs = 2;
inline constexpr std::uint64_t kAuditVerifyCostMs = 1;

// Testbed download overhead figure reported alongside simulated numbers
// for comparison; never asserted.
inline constexpr double kReferenceDownloadOverheadSeconds = 0.61;

struct LinkParams {
    std::uint64_t base_ms = 5;
    std::uint64_t jitter_ms = 0;
};

struct SimConfig {
    std::uint64_t seed = 1;
    LinkParams latency;
    double drop_probability = 0.0; // must be < 1
    std::int64_t client_skew_minutes = 0;
    std::int64_t controller_skew_minutes = 0;
    std::int64_t csp_skew_minutes = 0;
    std::uint64_t bandwidth_bytes_per_ms = 1024; // must be > 0
    std::uint64_t block_size = 4096;
    unsigned rsa_bits = 128;
    unsigned prime_p = 7;
};

// Scenario scripts: one event per line as
//   <at_ms> <actor> <event> <args...>
// with actors client|admin and events register|login (client id plus the
// three identity strings) and revoke (client id).
struct ScriptEvent {
    std::uint64_t at_ms = 0;
    std::string actor;
    std::string event;
    std::vector<std::string> args;
};

std::vector<ScriptEvent> parse_script(std::string_view text);
std::string serialize_script(const std::vector<ScriptEvent>& script);

struct Trace {
    std::vector<std::string> lines; // canonical records, in virtual-time order
    std::uint64_t sent = 0;
    std::uint64_t delivered = 0;
    std::uint64_t dropped = 0;
    std::vector<std::pair<std::string, protocol::Status>> outcomes;
    ledger::Ledger led;

    /// Event lines, final actor states, then the sealed ledger chain.
    std::string serialize() const;
};

/// Event-driven execution over a global virtual clock; identical
/// (script, cfg) pairs produce identical trace bytes.
Trace run_scenario(const std::vector<ScriptEvent>& script,
                   const SimConfig& cfg);

enum class Direction { upload, download };

struct TransferMeasurement {
    std::uint64_t block_count = 0;
    Direction direction = Direction::upload;
    std::uint64_t elapsed_ms = 0;
};

TransferMeasurement measure_transfer(std::uint64_t block_count,
                                     Direction direction,
                                     const SimConfig& cfg);

struct BenchRow {
    std::uint64_t size_bytes = 0;
    double seconds = 0.0;
};

/// Real wall-clock timing of the keystream cipher per payload size.
std::vector<BenchRow> bench_encrypt(const std::vector<std::uint64_t>& sizes);

} // namespace caudit::netsim
