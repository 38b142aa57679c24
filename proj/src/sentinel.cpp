#include "caudit/sentinel.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <map>
#include <random>
#include <set>

#include "caudit/bigint.hpp"
#include "caudit/errors.hpp"

namespace caudit::sentinel {

const char* status_token(AuditorStatus s) {
    switch (s) {
        case AuditorStatus::active: return "active";
        case AuditorStatus::watch: return "watch";
        case AuditorStatus::blacklisted: return "blacklisted";
    }
    return "active";
}

const char* quadrant_token(Quadrant q) {
    switch (q) {
        case Quadrant::green: return "green";
        case Quadrant::red: return "red";
        case Quadrant::white: return "white";
        case Quadrant::blue: return "blue";
    }
    return "green";
}

unsigned complexity_class(std::uint64_t block_count) {
    if (block_count == 0) raise(Errc::parameter, "block count must be >= 1");
    const unsigned cls =
        static_cast<unsigned>(std::bit_width(block_count)); // 1 + floor(log2)
    return std::min(cls, kMaxComplexityClass);
}

unsigned complexity_class(const integrity::FileRecord& rec) {
    return complexity_class(rec.block_checksums.size());
}

double median(std::vector<double> values) {
    if (values.empty()) return 0.0;
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    if (n % 2 == 1) return values[n / 2];
    return (values[n / 2 - 1] + values[n / 2]) / 2.0;
}

DurationModel fit_duration_model(std::span<const AuditRecord> pool,
                                 std::size_t min_records) {
    std::set<unsigned> classes;
    for (const AuditRecord& r : pool) classes.insert(r.complexity);
    if (pool.size() < min_records || classes.size() < 2) {
        raise(Errc::insufficient_data,
              "duration model needs >= " + std::to_string(min_records) +
                  " records over >= 2 complexity classes");
    }
    std::vector<double> slopes;
    slopes.reserve(pool.size() * (pool.size() - 1) / 2);
    for (std::size_t i = 0; i < pool.size(); ++i) {
        for (std::size_t j = i + 1; j < pool.size(); ++j) {
            if (pool[i].complexity == pool[j].complexity) continue;
            const double dc = static_cast<double>(pool[j].complexity) -
                              static_cast<double>(pool[i].complexity);
            slopes.push_back((pool[j].duration_ms - pool[i].duration_ms) / dc);
        }
    }
    DurationModel model;
    model.slope_ms_per_class = median(std::move(slopes));
    std::vector<double> offsets;
    offsets.reserve(pool.size());
    for (const AuditRecord& r : pool) {
        offsets.push_back(r.duration_ms -
                          model.slope_ms_per_class * r.complexity);
    }
    model.intercept_ms = median(offsets);
    model.fitted_over = pool.size();

    std::vector<double> res;
    res.reserve(pool.size());
    for (const AuditRecord& r : pool) {
        res.push_back(r.duration_ms - (model.slope_ms_per_class * r.complexity +
                                       model.intercept_ms));
    }
    const double med = median(res);
    for (double& v : res) v = std::fabs(v - med);
    model.residual_mad = median(std::move(res));
    return model;
}

std::vector<double> residuals(std::span<const AuditRecord> records,
                              const DurationModel& model) {
    std::vector<double> out;
    out.reserve(records.size());
    for (const AuditRecord& r : records) {
        out.push_back(r.duration_ms - (model.slope_ms_per_class * r.complexity +
                                       model.intercept_ms));
    }
    return out;
}

double deviation_score(const AuditorProfile& profile,
                       const DurationModel& model) {
    if (profile.history.empty()) return 0.0;
    const double med = median(residuals(profile.history, model));
    const double scale = std::max(model.residual_mad, 1.0);
    return std::fabs(med) / scale;
}

AuditorProfile update_status(
    AuditorProfile profile, const DurationModel& model, double k,
    std::size_t min_n, ledger::Ledger* led, std::uint64_t now,
    const std::function<void(const std::string&)>& reaudit_sink) {
    if (profile.history.size() < min_n) return profile;

    const double aggregate = deviation_score(profile, model);
    profile.deviation_stats.median_residual =
        median(residuals(profile.history, model));
    profile.deviation_stats.mad = std::max(model.residual_mad, 1.0);

    if (profile.status == AuditorStatus::blacklisted) return profile;

    if (aggregate > k) {
        profile.status = AuditorStatus::blacklisted;
        if (led) {
            char detail[64];
            std::snprintf(detail, sizeof(detail), "aggregate=%.6f", aggregate);
            led->append(ledger::make_blacklist_entry(profile.auditor_id, now,
                                                     detail),
                        now);
        }
        if (reaudit_sink) {
            std::set<std::string> seen;
            for (const AuditRecord& r : profile.history) {
                if (seen.insert(r.file_id).second) reaudit_sink(r.file_id);
            }
        }
    } else if (aggregate > k / 2.0) {
        profile.status = AuditorStatus::watch;
    } else {
        profile.status = AuditorStatus::active;
    }
    return profile;
}

Quadrant assign_quadrant(const AuditorProfile& profile,
                         const DurationModel& model,
                         std::span<const AuditRecord> pool, double k) {
    std::vector<double> own, all;
    own.reserve(profile.history.size());
    all.reserve(pool.size());
    for (const AuditRecord& r : profile.history) {
        own.push_back(static_cast<double>(r.complexity));
    }
    for (const AuditRecord& r : pool) {
        all.push_back(static_cast<double>(r.complexity));
    }
    const bool high_complexity = median(std::move(own)) > median(std::move(all));
    const bool high_deviation = deviation_score(profile, model) > k / 2.0;
    if (high_complexity && high_deviation) return Quadrant::red;
    if (high_complexity) return Quadrant::blue;
    if (high_deviation) return Quadrant::white;
    return Quadrant::green;
}

std::vector<AuditRecord> records_from_ledger(const ledger::Ledger& led,
                                             bool include_reaudits) {
    std::vector<AuditRecord> out;
    auto consider = [&](const std::string& entry) {
        if (auto a = ledger::parse_audit(entry)) {
            if (a->reaudit && !include_reaudits) return;
            AuditRecord r;
            r.auditor_id = a->auditor;
            r.file_id = a->file_id;
            r.complexity = complexity_class(std::max<std::uint64_t>(
                a->block_count, 1));
            r.duration_ms = std::max<double>(
                static_cast<double>(a->duration_ms), 1.0);
            r.verdict = a->verdict;
            r.at = a->at;
            out.push_back(std::move(r));
        }
    };
    for (const auto& b : led.blocks()) {
        for (const auto& e : b.entries) consider(e);
    }
    for (const auto& e : led.pending()) consider(e);
    return out;
}

std::vector<AuditorProfile> profiles_from_records(
    std::span<const AuditRecord> records) {
    std::map<std::string, AuditorProfile> by_id;
    for (const AuditRecord& r : records) {
        AuditorProfile& p = by_id[r.auditor_id];
        p.auditor_id = r.auditor_id;
        p.history.push_back(r);
    }
    std::vector<AuditorProfile> out;
    out.reserve(by_id.size());
    for (auto& [id, p] : by_id) out.push_back(std::move(p));
    return out;
}

std::string report_csv(std::span<const AuditorProfile> profiles,
                       const DurationModel& model) {
    std::vector<const AuditorProfile*> sorted;
    sorted.reserve(profiles.size());
    for (const AuditorProfile& p : profiles) sorted.push_back(&p);
    std::sort(sorted.begin(), sorted.end(),
              [](const AuditorProfile* a, const AuditorProfile* b) {
                  return a->auditor_id < b->auditor_id;
              });
    std::string out = "auditor_id,status,color,aggregate_deviation,record_count\n";
    for (const AuditorProfile* p : sorted) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.6f", deviation_score(*p, model));
        out += p->auditor_id;
        out.push_back(',');
        out += status_token(p->status);
        out.push_back(',');
        out += quadrant_token(p->color);
        out.push_back(',');
        out += buf;
        out.push_back(',');
        out += std::to_string(p->history.size());
        out.push_back('\n');
    }
    return out;
}

// ---- random forest ----------------------------------------------------------

std::vector<double> make_login_row(unsigned hour, unsigned outcome_code,
                                   double gap_minutes,
                                   bool fingerprint_mismatch,
                                   bool window_expired) {
    return {static_cast<double>(hour), static_cast<double>(outcome_code),
            gap_minutes, fingerprint_mismatch ? 1.0 : 0.0,
            window_expired ? 1.0 : 0.0};
}

namespace {

struct Builder {
    const Dataset& data;
    std::size_t feature_count;
    std::size_t max_depth;
    std::size_t features_per_split;
    std::mt19937_64& rng;
    DecisionTree tree;

    int majority(const std::vector<std::size_t>& idx) const {
        std::map<int, std::size_t> counts;
        for (std::size_t i : idx) ++counts[data.labels[i]];
        int best = counts.begin()->first;
        std::size_t best_n = counts.begin()->second;
        for (const auto& [label, n] : counts) {
            // >= so ties land on the higher (abnormal) label
            if (n > best_n || (n == best_n && label > best)) {
                best = label;
                best_n = n;
            }
        }
        return best;
    }

    static double gini(const std::map<int, std::size_t>& counts,
                       std::size_t total) {
        double impurity = 1.0;
        for (const auto& [label, n] : counts) {
            const double p = static_cast<double>(n) / total;
            impurity -= p * p;
        }
        return impurity;
    }

    std::size_t build(std::vector<std::size_t> idx, std::size_t depth) {
        const std::size_t node_id = tree.nodes.size();
        tree.nodes.emplace_back();

        std::map<int, std::size_t> counts;
        for (std::size_t i : idx) ++counts[data.labels[i]];
        const bool pure = counts.size() == 1;

        if (pure || depth >= max_depth || idx.size() < 2) {
            tree.nodes[node_id].label = majority(idx);
            return node_id;
        }

        // sample features_per_split distinct features
        std::vector<std::size_t> feats(feature_count);
        for (std::size_t i = 0; i < feature_count; ++i) feats[i] = i;
        for (std::size_t i = 0; i < features_per_split; ++i) {
            std::size_t j = i + uniform_below(feature_count - i, rng);
            std::swap(feats[i], feats[j]);
        }
        feats.resize(features_per_split);

        const double parent = gini(counts, idx.size());
        double best_score = parent;
        std::size_t best_feature = 0;
        double best_threshold = 0.0;
        bool found = false;

        for (std::size_t f : feats) {
            std::vector<double> values;
            values.reserve(idx.size());
            for (std::size_t i : idx) values.push_back(data.rows[i][f]);
            std::sort(values.begin(), values.end());
            values.erase(std::unique(values.begin(), values.end()),
                         values.end());
            for (std::size_t v = 1; v < values.size(); ++v) {
                const double thr = (values[v - 1] + values[v]) / 2.0;
                std::map<int, std::size_t> left, right;
                std::size_t nl = 0;
                for (std::size_t i : idx) {
                    if (data.rows[i][f] < thr) {
                        ++left[data.labels[i]];
                        ++nl;
                    } else {
                        ++right[data.labels[i]];
                    }
                }
                if (nl == 0 || nl == idx.size()) continue;
                const std::size_t nr = idx.size() - nl;
                const double score =
                    (nl * gini(left, nl) + nr * gini(right, nr)) / idx.size();
                if (score + 1e-12 < best_score) {
                    best_score = score;
                    best_feature = f;
                    best_threshold = thr;
                    found = true;
                }
            }
        }

        if (!found) {
            tree.nodes[node_id].label = majority(idx);
            return node_id;
        }

        std::vector<std::size_t> left_idx, right_idx;
        for (std::size_t i : idx) {
            if (data.rows[i][best_feature] < best_threshold) {
                left_idx.push_back(i);
            } else {
                right_idx.push_back(i);
            }
        }
        idx.clear();
        idx.shrink_to_fit();

        const std::size_t left = build(std::move(left_idx), depth + 1);
        const std::size_t right = build(std::move(right_idx), depth + 1);
        TreeNode& node = tree.nodes[node_id];
        node.leaf = false;
        node.feature = best_feature;
        node.threshold = best_threshold;
        node.left = left;
        node.right = right;
        return node_id;
    }
};

} // namespace

ForestModel forest_train(const Dataset& data, ForestParams params) {
    if (data.rows.empty() || data.rows.size() != data.labels.size()) {
        raise(Errc::parameter, "rows and labels must be non-empty and aligned");
    }
    const std::size_t feature_count = data.rows.front().size();
    if (feature_count == 0) raise(Errc::parameter, "rows must have features");
    for (const auto& row : data.rows) {
        if (row.size() != feature_count) {
            raise(Errc::parameter, "ragged feature rows");
        }
    }
    std::set<int> classes(data.labels.begin(), data.labels.end());
    if (classes.size() < 2) {
        raise(Errc::degenerate_model, "training data has a single class");
    }
    if (params.tree_count == 0 || params.max_depth == 0) {
        raise(Errc::parameter, "tree count and depth must be positive");
    }

    ForestModel model;
    model.feature_count = feature_count;
    model.params = params;
    const std::size_t per_split = static_cast<std::size_t>(
        std::ceil(std::sqrt(static_cast<double>(feature_count))));

    for (std::size_t t = 0; t < params.tree_count; ++t) {
        std::mt19937_64 rng(params.seed ^
                            (0x9E3779B97F4A7C15ULL * (t + 1)));
        std::vector<std::size_t> sample(data.rows.size());
        for (std::size_t& i : sample) {
            i = uniform_below(data.rows.size(), rng);
        }
        Builder builder{data, feature_count, params.max_depth, per_split, rng,
                        {}};
        builder.build(std::move(sample), 0);
        model.trees.push_back(std::move(builder.tree));
    }
    return model;
}

int tree_predict(const DecisionTree& tree, std::span<const double> row) {
    std::size_t at = 0;
    for (;;) {
        const TreeNode& node = tree.nodes[at];
        if (node.leaf) return node.label;
        at = row[node.feature] < node.threshold ? node.left : node.right;
    }
}

Classification resolve_votes(std::span<const int> votes) {
    std::map<int, std::size_t> counts;
    for (int v : votes) ++counts[v];
    int best = counts.begin()->first;
    std::size_t best_n = counts.begin()->second;
    for (const auto& [label, n] : counts) {
        if (n > best_n || (n == best_n && label > best)) {
            best = label;
            best_n = n;
        }
    }
    return {best, static_cast<double>(best_n) /
                      static_cast<double>(votes.size())};
}

Classification forest_classify(const ForestModel& model,
                               std::span<const double> row) {
    if (row.size() != model.feature_count) {
        raise(Errc::parameter, "feature arity mismatch");
    }
    std::vector<int> votes;
    votes.reserve(model.trees.size());
    for (const DecisionTree& tree : model.trees) {
        votes.push_back(tree_predict(tree, row));
    }
    return resolve_votes(votes);
}

} // namespace caudit::sentinel
