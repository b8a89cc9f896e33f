#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "causalfuzz/dataset.hpp"
#include "causalfuzz/graph.hpp"
#include "causalfuzz/predictor.hpp"
#include "causalfuzz/sem.hpp"

namespace causalfuzz {

enum class ContrastMode { flip, marginal_resample, fixed_delta };

std::string to_string(ContrastMode mode);
ContrastMode contrast_mode_from_string(const std::string& s);

// How contrast values z' are drawn for the target. flip is binary-only;
// fixed_delta requires delta != 0 and exists for closed-form oracles.
struct ContrastPolicy {
    ContrastMode mode = ContrastMode::marginal_resample;
    double delta = 0.0;
    std::size_t n_contrasts_per_row = 1;
};

enum class EstimateStatus { ok, structural_zero, budget_exhausted };

// Monte-Carlo estimate of residual influence along one route set.
// mean_abs_change averages |f(x') - f(x)| over counterfactual pairs;
// signed_mean averages (f(x') - f(x)) oriented by sign(z' - z), which is what
// exposes opposite-signed cancelling pathways.
struct EffectEstimate {
    std::string path_label;            // "Z→M→Y", "TOTAL", or "DIRECT"
    double mean_abs_change = 0.0;
    double signed_mean = 0.0;
    double std_error = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    std::size_t n_pairs = 0;
    std::uint64_t queries_used = 0;    // queries actually charged (cache hits are free)
    std::optional<std::string> subgroup_label;
    EstimateStatus status = EstimateStatus::ok;
};

// `<column><op><number>` row filter, op in { < <= > >= == }.
struct SubgroupPredicate {
    std::string column;
    std::string op;
    double value = 0.0;

    bool matches(double x) const;
    std::string label() const;
};

SubgroupPredicate parse_subgroup_predicate(const std::string& text);

struct BudgetSplit {
    double total_share = 0.25;
    double direct_share = 0.25;
    // Remainder goes to top-k paths proportional to priority score (and, when
    // subgroups are configured, to subgroup estimates on an equal-weight
    // footing), with a floor of kMinPairs pairs per estimate.
};

struct FuzzConfig {
    const CausalGraph* graph = nullptr;
    const Sem* sem = nullptr;
    std::shared_ptr<Predictor> predictor;
    const Dataset* reference = nullptr;  // rows sampled with replacement
    std::string target;
    double threshold = 0.05;             // tau, in score units
    std::uint64_t budget = 0;
    std::size_t top_k = 4;
    std::size_t max_path_length = 4;
    ContrastPolicy contrast;             // mode defaulted from target kind when unset
    ScoreKind score_kind = ScoreKind::probability;
    std::vector<SubgroupPredicate> subgroups;
    std::uint64_t seed = 0;
    BudgetSplit split;

    void validate() const;  // throws ConfigError
};

// Minimum pairs per estimate; below this the CI is not worth reporting.
inline constexpr std::size_t kMinPairs = 20;

// Single-route estimators. Each samples reference rows with replacement,
// draws a contrast per the policy, propagates through the SEM with the
// route's edges active, and averages absolute score changes. Estimates stop
// gracefully when the meter runs out and come back flagged budget_exhausted.
// Per-pair seeds derive from (seed, path label, pair index), so results do
// not depend on evaluation order.
class FuzzRun;  // owns the original-score cache shared across estimates

EffectEstimate estimate_path_effect(const FuzzConfig& config, const std::vector<std::string>& path,
                                    std::size_t n_pairs, QueryMeter& meter);
EffectEstimate estimate_total_effect(const FuzzConfig& config, std::size_t n_pairs,
                                     QueryMeter& meter);
// Structural zero with 0 queries when the target is absent from the
// predictor schema; otherwise only the target's own value changes.
EffectEstimate estimate_direct_effect(const FuzzConfig& config, std::size_t n_pairs,
                                      QueryMeter& meter);
// TOTAL plus top-k path estimates restricted to predicate rows. The predicate
// must select at least 30 reference rows.
std::vector<EffectEstimate> estimate_subgroup_effects(const FuzzConfig& config,
                                                      const SubgroupPredicate& predicate,
                                                      std::size_t n_pairs_each, QueryMeter& meter);

struct FuzzOutcome {
    std::vector<EffectEstimate> estimates;
    std::vector<RankedPath> ranked_paths;
    std::uint64_t budget_used = 0;
    bool no_path = false;
};

// Full causal-fuzz run: enumerate -> prioritize top-k -> allocate budget
// (25% TOTAL, 25% DIRECT, remainder across paths and subgroups, floor of
// kMinPairs pairs each) -> estimate. Deterministic given config and seed.
FuzzOutcome run_causal_fuzz(const FuzzConfig& config);

}  // namespace causalfuzz
