#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "caudit/integrity.hpp"
#include "caudit/ledger.hpp"

namespace caudit::sentinel {

struct AuditRecord {
    std::string auditor_id;
    std::string file_id;
    unsigned complexity = 1;  // >= 1
    double duration_ms = 1.0; // > 0
    std::string verdict = "pass";
    std::uint64_t at = 0;
};

enum class AuditorStatus { active, watch, blacklisted };
enum class Quadrant { green, red, white, blue };

const char* status_token(AuditorStatus s);
const char* quadrant_token(Quadrant q);

struct DeviationStats {
    double median_residual = 0.0;
    double mad = 0.0; // pool residual MAD the aggregate was scaled by
};

struct AuditorProfile {
    std::string auditor_id;
    std::vector<AuditRecord> history;
    AuditorStatus status = AuditorStatus::active;
    Quadrant color = Quadrant::green;
    DeviationStats deviation_stats;
};

// Pooled duration-vs-complexity line, Theil-Sen fitted so a cheating
// auditor's own records cannot drag the fit far.
struct DurationModel {
    double slope_ms_per_class = 0.0;
    double intercept_ms = 0.0;
    std::size_t fitted_over = 0;
    double residual_mad = 0.0; // pool MAD of residuals around the line
};

inline constexpr unsigned kMaxComplexityClass = 8;
inline constexpr double kDefaultThreshold = 3.0;
inline constexpr std::size_t kDefaultMinRecords = 10;

/// 1 + floor(log2(block_count)), capped at 8.
unsigned complexity_class(std::uint64_t block_count);
unsigned complexity_class(const integrity::FileRecord& rec);

double median(std::vector<double> values); // empty -> 0

/// Theil-Sen over all distinct-complexity pairs. Needs >= min_records
/// records spanning >= 2 complexity classes; throws insufficient_data.
DurationModel fit_duration_model(std::span<const AuditRecord> pool,
                                 std::size_t min_records = kDefaultMinRecords);

std::vector<double> residuals(std::span<const AuditRecord> records,
                              const DurationModel& model);

/// |median residual| / max(pool residual MAD, 1 ms). Empty history -> 0.
double deviation_score(const AuditorProfile& profile,
                       const DurationModel& model);

/// Status transition. Blacklisting is permanent; the transition into it
/// appends one ledger event and feeds every distinct audited file id to
/// reaudit_sink (callers wire that to integrity reaudits). With fewer than
/// min_n records the profile is returned unchanged.
AuditorProfile update_status(
    AuditorProfile profile, const DurationModel& model,
    double k = kDefaultThreshold, std::size_t min_n = kDefaultMinRecords,
    ledger::Ledger* led = nullptr, std::uint64_t now = 0,
    const std::function<void(const std::string&)>& reaudit_sink = {});

/// Axes: median audited complexity vs the pool median, and aggregate
/// deviation vs k/2. (low,low) green, (high,low) blue, (low,high) white,
/// (high,high) red.
Quadrant assign_quadrant(const AuditorProfile& profile,
                         const DurationModel& model,
                         std::span<const AuditRecord> pool,
                         double k = kDefaultThreshold);

/// Auditor behavior pool from ledger audit events. Reaudit-marked entries
/// are system verification passes, not auditor behavior, and are skipped
/// unless asked for.
std::vector<AuditRecord> records_from_ledger(const ledger::Ledger& led,
                                             bool include_reaudits = false);
std::vector<AuditorProfile> profiles_from_records(
    std::span<const AuditRecord> records);

/// auditor_id,status,color,aggregate_deviation,record_count — one row per
/// auditor, sorted by id.
std::string report_csv(std::span<const AuditorProfile> profiles,
                       const DurationModel& model);

// ---- random forest over login-attempt features ------------------------------
// Feature schema (kLoginFeatureCount columns): hour-of-day, outcome code,
// inter-attempt gap in minutes, fingerprint-mismatch flag, window-expired
// flag. Labels: 0 normal, 1 abnormal; ties resolve to abnormal.

inline constexpr std::size_t kLoginFeatureCount = 5;

std::vector<double> make_login_row(unsigned hour, unsigned outcome_code,
                                   double gap_minutes,
                                   bool fingerprint_mismatch,
                                   bool window_expired);

struct ForestParams {
    std::size_t tree_count = 25;
    std::size_t max_depth = 4;
    std::uint64_t seed = 1;
};

struct TreeNode {
    bool leaf = true;
    int label = 0;
    std::size_t feature = 0;
    double threshold = 0.0;
    std::size_t left = 0;
    std::size_t right = 0;
};

struct DecisionTree {
    std::vector<TreeNode> nodes; // node 0 is the root
};

struct ForestModel {
    std::vector<DecisionTree> trees;
    std::size_t feature_count = 0;
    ForestParams params;
};

struct Dataset {
    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
};

struct Classification {
    int label = 0;
    double vote_fraction = 0.0;
};

/// Bootstrap per tree, Gini threshold splits on ceil(sqrt(F)) sampled
/// features, depth-limited. Deterministic for a fixed seed. Throws
/// degenerate_model when only one class is present.
ForestModel forest_train(const Dataset& data, ForestParams params);

int tree_predict(const DecisionTree& tree, std::span<const double> row);

Classification forest_classify(const ForestModel& model,
                               std::span<const double> row);

/// Majority with ties resolved toward the higher (abnormal) label.
Classification resolve_votes(std::span<const int> votes);

} // namespace caudit::sentinel
