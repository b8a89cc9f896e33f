#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "causalfuzz/baselines.hpp"
#include "causalfuzz/estimator.hpp"

namespace causalfuzz {

enum class Verdict { leak, pass, inconclusive, structural_zero, inconclusive_budget };

std::string to_string(Verdict v);
Verdict verdict_from_string(const std::string& s);

struct ReportEntry {
    std::string path;  // path label, TOTAL, or DIRECT
    EffectEstimate estimate;
    Verdict verdict = Verdict::inconclusive;
    std::optional<std::string> subgroup;
};

struct ReportHeader {
    std::string target;
    std::string model_id;
    ScoreKind score_kind = ScoreKind::probability;
    double tau = 0.05;
    std::uint64_t budget = 0;
    std::uint64_t budget_used = 0;
    std::uint64_t seed = 0;
    std::string propagation;  // counterfactual semantics, flagged in every report
    std::string status;       // "ok" | "no-path"
};

struct MediatorFlag {
    std::string node;
    double max_effect = 0.0;  // largest effect of any leaking path through it
};

// Ranked pathway-level verdicts; the toolkit's user-facing output.
// Entries are sorted by descending effect (ties lexicographic) and the
// overall verdict is leak iff any entry leaks.
struct LeakageReport {
    ReportHeader header;
    std::vector<ReportEntry> entries;
    BaselineResults baselines;
    Verdict overall = Verdict::pass;

    // Interior nodes of leak-verdict paths, deduplicated, ranked by the max
    // effect of any containing path. Derived from entries.
    std::vector<MediatorFlag> flagged_mediators() const;
};

// Applies the verdict rule (leak if ci_low > tau, pass if ci_high < tau,
// else inconclusive; structural zeros and budget-exhausted estimates keep
// their own verdicts), sorts entries, and sets the overall verdict.
LeakageReport assemble(const std::vector<EffectEstimate>& estimates,
                       const BaselineResults& baselines, const ReportHeader& header);

// JSON schema (report_version 1, field names fixed):
//   {"report_version","header":{...},
//    "entries":[{"path","effect","ci":[l,h],"signed_mean","n_pairs",
//                "queries","verdict","subgroup"}...],
//    "baselines":{...},"overall"}
// Byte-deterministic; unknown fields are rejected on parse.
std::string render_json(const LeakageReport& report);
std::string render_text(const LeakageReport& report);
LeakageReport parse_report(const std::string& json_text);
LeakageReport load_report(const std::string& path);

struct DiffEntry {
    std::string path;
    std::optional<std::string> subgroup;
    double old_effect = 0.0;
    double new_effect = 0.0;
};

// Regression summary between two runs over the same target and tau.
struct ReportDiff {
    std::string target;
    std::vector<DiffEntry> deltas;       // entries present in both reports
    std::vector<DiffEntry> new_leaks;    // leak in new, absent or non-leak in old
    std::vector<DiffEntry> resolved;     // leak in old, absent or non-leak in new
    std::vector<DiffEntry> regressions;  // effect increase > 2 * pooled stderr

    bool empty() const;
};

ReportDiff diff_reports(const LeakageReport& old_report, const LeakageReport& new_report);
std::string render_diff(const ReportDiff& diff);

}  // namespace causalfuzz
