#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "causalfuzz/dataset.hpp"
#include "causalfuzz/predictor.hpp"

namespace causalfuzz {

enum class BaselineMetric { accuracy, auc };

struct PermutationImportance {
    std::string feature;
    std::string metric;
    double mean_drop = 0.0;
    double std_dev = 0.0;
    std::size_t n_repeats = 0;
    bool structural_zero = false;  // feature absent from the model schema
};

// Mean metric drop over n_repeats independent column shuffles. A feature the
// model cannot read is reported as a flagged structural zero rather than an
// error; that is exactly the blind spot the causal estimates are compared to.
PermutationImportance permutation_importance(const Predictor& p, const Dataset& data,
                                             const std::string& outcome, const std::string& feature,
                                             BaselineMetric metric, std::size_t n_repeats,
                                             std::uint64_t seed);

// Monte-Carlo permutation Shapley. Coalition value is the model score with
// absent features drawn from the background rows, averaged over the
// background, so efficiency holds exactly under exhaustive orderings:
//   sum(values) = f(x) - mean f(background).
std::vector<double> shapley_mc(const Predictor& p, ScoreKind kind,
                               const std::vector<std::vector<double>>& background,
                               const std::vector<double>& row, std::size_t n_permutations,
                               std::uint64_t seed);

// |P(score >= threshold | g=1) - P(score >= threshold | g=0)|. The group
// column may lie outside the predictor schema. Single-group data is rejected.
double demographic_parity_gap(const Predictor& p, const Dataset& data, const std::string& group,
                              double threshold);

// Rank-statistic AUC with tie adjustment.
double auc_score(const std::vector<double>& scores, const std::vector<double>& labels);

// Bundle embedded in leakage reports under "baselines".
struct BaselineResults {
    std::optional<PermutationImportance> permutation;
    std::optional<double> parity_gap;
    std::optional<std::string> parity_group;
};

}  // namespace causalfuzz
