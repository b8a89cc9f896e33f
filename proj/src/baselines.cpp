#include "causalfuzz/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "causalfuzz/errors.hpp"
#include "causalfuzz/rng.hpp"

namespace causalfuzz {

namespace {

double metric_value(const Predictor& p, const std::vector<std::vector<double>>& rows,
                    const std::vector<double>& labels, BaselineMetric metric) {
    auto meter = QueryMeter::unlimited();
    auto scores = p.predict(rows, ScoreKind::probability, meter);
    if (metric == BaselineMetric::auc) return auc_score(scores, labels);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if ((scores[i] >= 0.5 ? 1.0 : 0.0) == labels[i]) ++correct;
    }
    return scores.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(scores.size());
}

std::size_t factorial(std::size_t n) {
    std::size_t f = 1;
    for (std::size_t i = 2; i <= n; ++i) f *= i;
    return f;
}

}  // namespace

double auc_score(const std::vector<double>& scores, const std::vector<double>& labels) {
    if (scores.size() != labels.size() || scores.empty()) {
        throw ConfigError("auc: scores and labels must be nonempty and equal length");
    }
    std::vector<std::size_t> idx(scores.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // average ranks over ties
    std::vector<double> rank(scores.size());
    std::size_t i = 0;
    while (i < idx.size()) {
        std::size_t j = i;
        while (j + 1 < idx.size() && scores[idx[j + 1]] == scores[idx[i]]) ++j;
        double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t t = i; t <= j; ++t) rank[idx[t]] = avg;
        i = j + 1;
    }

    double pos_rank_sum = 0.0;
    std::size_t n_pos = 0;
    for (std::size_t t = 0; t < labels.size(); ++t) {
        if (labels[t] == 1.0) {
            pos_rank_sum += rank[t];
            ++n_pos;
        }
    }
    std::size_t n_neg = labels.size() - n_pos;
    if (n_pos == 0 || n_neg == 0) throw ConfigError("auc: labels contain a single class");
    return (pos_rank_sum - static_cast<double>(n_pos) * (static_cast<double>(n_pos) + 1.0) / 2.0) /
           (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

PermutationImportance permutation_importance(const Predictor& p, const Dataset& data,
                                             const std::string& outcome,
                                             const std::string& feature, BaselineMetric metric,
                                             std::size_t n_repeats, std::uint64_t seed) {
    PermutationImportance result;
    result.feature = feature;
    result.metric = metric == BaselineMetric::auc ? "auc" : "accuracy";
    result.n_repeats = n_repeats;
    if (!p.has_feature(feature)) {
        // The model cannot read this column at all: nothing to permute. This
        // is the exact signal an unlearned target produces.
        result.structural_zero = true;
        return result;
    }
    if (n_repeats == 0) throw ConfigError("permutation_importance: n_repeats must be positive");

    auto labels = data.column(outcome);
    auto rows = project_rows(data, p.schema());
    const double base = metric_value(p, rows, labels, metric);

    std::size_t feat_col = 0;
    for (std::size_t j = 0; j < p.schema().size(); ++j) {
        if (p.schema()[j] == feature) feat_col = j;
    }

    std::vector<double> drops;
    drops.reserve(n_repeats);
    for (std::size_t r = 0; r < n_repeats; ++r) {
        Rng rng(derive_seed(seed, "permutation-importance", r));
        std::vector<std::size_t> order(rows.size());
        std::iota(order.begin(), order.end(), 0);
        for (std::size_t i = order.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(rng.below(i));
            std::swap(order[i - 1], order[j]);
        }
        auto shuffled = rows;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            shuffled[i][feat_col] = rows[order[i]][feat_col];
        }
        drops.push_back(base - metric_value(p, shuffled, labels, metric));
    }

    double mean = std::accumulate(drops.begin(), drops.end(), 0.0) / static_cast<double>(n_repeats);
    double var = 0.0;
    for (double d : drops) var += (d - mean) * (d - mean);
    result.mean_drop = mean;
    result.std_dev = n_repeats > 1 ? std::sqrt(var / static_cast<double>(n_repeats - 1)) : 0.0;
    return result;
}

std::vector<double> shapley_mc(const Predictor& p, ScoreKind kind,
                               const std::vector<std::vector<double>>& background,
                               const std::vector<double>& row, std::size_t n_permutations,
                               std::uint64_t seed) {
    if (background.empty()) throw ConfigError("shapley_mc: background must be nonempty");
    if (n_permutations == 0) throw ConfigError("shapley_mc: n_permutations must be positive");
    const std::size_t n_features = p.schema().size();
    if (row.size() != n_features) {
        throw SchemaMismatch("shapley_mc: row width does not match the model schema");
    }

    auto meter = QueryMeter::unlimited();

    // Coalition value: model score with present features taken from `row`,
    // absent ones from each background row, averaged over the background.
    std::map<std::uint64_t, double> coalition_cache;
    auto coalition_value = [&](std::uint64_t mask) {
        auto it = coalition_cache.find(mask);
        if (it != coalition_cache.end()) return it->second;
        std::vector<std::vector<double>> batch;
        batch.reserve(background.size());
        for (const auto& bg : background) {
            std::vector<double> mixed(n_features);
            for (std::size_t j = 0; j < n_features; ++j) {
                mixed[j] = (mask >> j) & 1 ? row[j] : bg[j];
            }
            batch.push_back(std::move(mixed));
        }
        auto scores = p.predict(batch, kind, meter);
        double v = std::accumulate(scores.begin(), scores.end(), 0.0) /
                   static_cast<double>(scores.size());
        coalition_cache[mask] = v;
        return v;
    };

    // Exhaustive orderings when the request covers them all; sampled with
    // replacement otherwise.
    const bool exhaustive = n_features <= 7 && n_permutations >= factorial(n_features);
    std::vector<double> values(n_features, 0.0);
    std::size_t n_orderings = 0;

    std::vector<std::size_t> order(n_features);
    std::iota(order.begin(), order.end(), 0);
    auto walk = [&](const std::vector<std::size_t>& ordering) {
        std::uint64_t mask = 0;
        double prev = coalition_value(0);
        for (std::size_t j : ordering) {
            mask |= (std::uint64_t{1} << j);
            double cur = coalition_value(mask);
            values[j] += cur - prev;
            prev = cur;
        }
        ++n_orderings;
    };

    if (exhaustive) {
        std::sort(order.begin(), order.end());
        do {
            walk(order);
        } while (std::next_permutation(order.begin(), order.end()));
    } else {
        for (std::size_t t = 0; t < n_permutations; ++t) {
            Rng rng(derive_seed(seed, "shapley", t));
            std::iota(order.begin(), order.end(), 0);
            for (std::size_t i = order.size(); i > 1; --i) {
                std::size_t j = static_cast<std::size_t>(rng.below(i));
                std::swap(order[i - 1], order[j]);
            }
            walk(order);
        }
    }
    for (double& v : values) v /= static_cast<double>(n_orderings);
    return values;
}

double demographic_parity_gap(const Predictor& p, const Dataset& data, const std::string& group,
                              double threshold) {
    auto groups = data.column(group);
    for (double g : groups) {
        if (g != 0.0 && g != 1.0) throw ConfigError("group column must be binary 0/1: " + group);
    }
    auto rows = project_rows(data, p.schema());
    auto meter = QueryMeter::unlimited();
    auto scores = p.predict(rows, ScoreKind::probability, meter);
    std::size_t n1 = 0, n0 = 0, hit1 = 0, hit0 = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (groups[i] == 1.0) {
            ++n1;
            if (scores[i] >= threshold) ++hit1;
        } else {
            ++n0;
            if (scores[i] >= threshold) ++hit0;
        }
    }
    if (n1 == 0 || n0 == 0) {
        throw ConfigError("demographic_parity_gap: data contains a single group");
    }
    return std::fabs(static_cast<double>(hit1) / static_cast<double>(n1) -
                     static_cast<double>(hit0) / static_cast<double>(n0));
}

}  // namespace causalfuzz
