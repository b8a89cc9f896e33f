#include "causalfuzz/estimator.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>
#include <unordered_map>

#include "causalfuzz/errors.hpp"
#include "causalfuzz/rng.hpp"

namespace causalfuzz {

namespace {

constexpr std::size_t kChunkPairs = 64;  // 128 queries per chunk, under the wire batch cap

std::string format_number(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, ptr);
}

}  // namespace

std::string to_string(ContrastMode mode) {
    switch (mode) {
        case ContrastMode::flip: return "flip";
        case ContrastMode::fixed_delta: return "fixed-delta";
        default: return "marginal-resample";
    }
}

ContrastMode contrast_mode_from_string(const std::string& s) {
    if (s == "flip") return ContrastMode::flip;
    if (s == "marginal-resample") return ContrastMode::marginal_resample;
    if (s == "fixed-delta") return ContrastMode::fixed_delta;
    throw ConfigError("unknown contrast mode: " + s);
}

bool SubgroupPredicate::matches(double x) const {
    if (op == "<") return x < value;
    if (op == "<=") return x <= value;
    if (op == ">") return x > value;
    if (op == ">=") return x >= value;
    if (op == "==") return x == value;
    throw ConfigError("unknown predicate op: " + op);
}

std::string SubgroupPredicate::label() const { return column + op + format_number(value); }

SubgroupPredicate parse_subgroup_predicate(const std::string& text) {
    static const char* ops[] = {"<=", ">=", "==", "<", ">"};
    for (const char* op : ops) {
        auto pos = text.find(op);
        if (pos == std::string::npos || pos == 0) continue;
        SubgroupPredicate pred;
        pred.column = text.substr(0, pos);
        pred.op = op;
        const std::string num = text.substr(pos + std::string(op).size());
        auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), pred.value);
        if (ec != std::errc{} || ptr != num.data() + num.size() || num.empty()) {
            throw ConfigError("bad subgroup predicate number: " + text);
        }
        return pred;
    }
    throw ConfigError("bad subgroup predicate (want <column><op><number>): " + text);
}

void FuzzConfig::validate() const {
    if (!graph || !sem || !predictor || !reference) {
        throw ConfigError("fuzz config: graph, sem, predictor and reference data are required");
    }
    if (!(threshold > 0.0)) throw ConfigError("fuzz config: threshold must be positive");
    if (budget == 0) throw ConfigError("fuzz config: budget must be positive");
    if (top_k == 0) throw ConfigError("fuzz config: k must be positive");
    if (max_path_length == 0) throw ConfigError("fuzz config: max path length must be positive");
    if (target.empty() || !graph->has_node(target)) {
        throw ConfigError("fuzz config: unknown target node '" + target + "'");
    }
    if (target == graph->outcome()) {
        throw ConfigError("fuzz config: target cannot be the outcome node");
    }
    if (!reference->has_column(target)) {
        throw ConfigError("fuzz config: target column '" + target + "' missing from reference data");
    }
    if (contrast.mode == ContrastMode::fixed_delta && contrast.delta == 0.0) {
        throw ConfigError("fuzz config: fixed-delta contrast requires delta != 0");
    }
    if (contrast.mode == ContrastMode::flip &&
        graph->node(target).kind != ColumnKind::binary) {
        throw ConfigError("fuzz config: flip contrast requires a binary target");
    }
    if (contrast.n_contrasts_per_row == 0) {
        throw ConfigError("fuzz config: n_contrasts_per_row must be positive");
    }
    if (!(split.total_share > 0.0) || !(split.direct_share > 0.0) ||
        split.total_share + split.direct_share >= 1.0) {
        throw ConfigError("fuzz config: budget shares must be positive and sum below 1");
    }
    // The SEM must describe the same DAG the audit runs against.
    const auto& sg = sem->graph();
    if (sg.nodes().size() != graph->nodes().size() || sg.edges().size() != graph->edges().size()) {
        throw ConfigError("fuzz config: SEM graph does not match the audit graph");
    }
    for (const auto& n : graph->nodes()) {
        if (!sg.has_node(n.name)) {
            throw ConfigError("fuzz config: SEM graph missing node '" + n.name + "'");
        }
    }
    for (const auto& [src, dst] : graph->edges()) {
        if (!sg.has_edge(src, dst)) {
            throw ConfigError("fuzz config: SEM graph missing edge " + src + " -> " + dst);
        }
    }
    for (const auto& pred : subgroups) {
        if (!reference->has_column(pred.column)) {
            throw ConfigError("fuzz config: subgroup column '" + pred.column +
                              "' missing from reference data");
        }
    }
}

namespace {

// Shared state for one audit: reference rows in both layouts, the contrast
// source column, and the original-score cache reused across estimates.
struct Engine {
    const FuzzConfig& cfg;
    CausalGraph graph;  // target role bound
    CounterfactualEngine propagator;
    std::vector<std::vector<double>> fo_rows;      // feature_order layout
    std::vector<std::vector<double>> schema_rows;  // predictor schema layout
    std::vector<double> target_column;
    std::size_t target_fo = 0;
    std::vector<std::size_t> all_rows;
    std::unordered_map<std::size_t, double> original_cache;

    explicit Engine(const FuzzConfig& config)
        : cfg(config),
          graph(config.graph->with_target(config.target)),
          propagator(*config.sem) {
        const Dataset& ref = *cfg.reference;
        const auto& order = propagator.order();
        std::vector<std::size_t> fo_col(order.size());
        for (std::size_t i = 0; i < order.size(); ++i) {
            fo_col[i] = ref.column_index(order[i]);  // every feature node must be a column
        }
        const auto& schema = cfg.predictor->schema();
        std::vector<std::size_t> schema_col(schema.size());
        for (std::size_t j = 0; j < schema.size(); ++j) {
            schema_col[j] = ref.column_index(schema[j]);
        }
        fo_rows.reserve(ref.n_rows());
        schema_rows.reserve(ref.n_rows());
        for (const auto& row : ref.rows) {
            std::vector<double> fo(order.size());
            for (std::size_t i = 0; i < order.size(); ++i) fo[i] = row[fo_col[i]];
            fo_rows.push_back(std::move(fo));
            std::vector<double> sr(schema.size());
            for (std::size_t j = 0; j < schema.size(); ++j) sr[j] = row[schema_col[j]];
            schema_rows.push_back(std::move(sr));
        }
        target_fo = propagator.node_index(cfg.target);
        target_column = ref.column(cfg.target);
        all_rows.resize(ref.n_rows());
        for (std::size_t i = 0; i < all_rows.size(); ++i) all_rows[i] = i;
        if (all_rows.empty()) throw ConfigError("reference data has no rows");
    }

    std::vector<std::size_t> subgroup_rows(const SubgroupPredicate& pred) const {
        std::size_t col = cfg.reference->column_index(pred.column);
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < cfg.reference->n_rows(); ++i) {
            if (pred.matches(cfg.reference->rows[i][col])) out.push_back(i);
        }
        return out;
    }

    double draw_contrast(double observed, Rng& rng) const {
        switch (cfg.contrast.mode) {
            case ContrastMode::flip:
                return 1.0 - observed;
            case ContrastMode::fixed_delta:
                return observed + cfg.contrast.delta;
            default:
                return target_column[rng.below(target_column.size())];
        }
    }

    // One estimate: n_pairs sampled counterfactual contrasts along the given
    // route. active_edges drive SEM propagation; scored_nodes are the features
    // whose counterfactual values enter the model input.
    EffectEstimate run_unit(const std::string& label, const std::set<Edge>& active_edges,
                            const std::set<std::string>& scored_nodes,
                            const std::vector<std::size_t>& allowed_rows, std::size_t n_pairs,
                            QueryMeter& meter, const std::optional<std::string>& subgroup) {
        EffectEstimate est;
        est.path_label = label;
        est.subgroup_label = subgroup;

        const auto& schema = cfg.predictor->schema();
        std::vector<std::pair<std::size_t, std::size_t>> patch;  // schema col -> feature idx
        for (std::size_t j = 0; j < schema.size(); ++j) {
            if (scored_nodes.count(schema[j])) {
                patch.push_back({j, propagator.node_index(schema[j])});
            }
        }
        if (patch.empty()) {
            // The model cannot read any node on this route.
            est.status = EstimateStatus::structural_zero;
            return est;
        }

        // Pair seeds derive from (seed, path label, pair index) only, so a
        // subgroup restricted to the full row set reproduces the global
        // estimate exactly.
        const std::string& seed_label = label;
        const std::size_t per_row = cfg.contrast.n_contrasts_per_row;

        struct PlannedPair {
            std::size_t row = 0;
            double z_from = 0.0;
            double z_to = 0.0;
            std::vector<double> intervened;
        };

        std::vector<double> abs_changes;
        std::vector<double> signed_changes;
        abs_changes.reserve(n_pairs);
        signed_changes.reserve(n_pairs);
        std::uint64_t queries = 0;
        bool exhausted = false;

        std::size_t next = 0;
        bool single_pair_mode = false;
        while (next < n_pairs && !exhausted) {
            const std::size_t chunk =
                single_pair_mode ? 1 : std::min(kChunkPairs, n_pairs - next);

            std::vector<PlannedPair> pairs(chunk);
            for (std::size_t c = 0; c < chunk; ++c) {
                const std::size_t i = next + c;
                Rng row_rng(derive_seed(cfg.seed, seed_label + "#row", i / per_row));
                Rng rng(derive_seed(cfg.seed, seed_label, i));
                PlannedPair& pp = pairs[c];
                pp.row = allowed_rows[row_rng.below(allowed_rows.size())];
                pp.z_from = fo_rows[pp.row][target_fo];
                pp.z_to = draw_contrast(pp.z_from, rng);
                Intervention iv;
                iv.assignments[cfg.target] = pp.z_to;
                iv.active_edges = active_edges;
                auto cf = propagator.propagate(fo_rows[pp.row], iv);
                pp.intervened = schema_rows[pp.row];
                for (const auto& [col, fi] : patch) pp.intervened[col] = cf[fi];
            }

            // Assemble the query batch: uncached originals first, then all
            // intervened rows, in pair order.
            std::vector<std::vector<double>> batch;
            std::vector<std::size_t> fresh_originals;
            std::set<std::size_t> pending;
            for (const auto& pp : pairs) {
                if (!original_cache.count(pp.row) && !pending.count(pp.row)) {
                    pending.insert(pp.row);
                    fresh_originals.push_back(pp.row);
                    batch.push_back(schema_rows[pp.row]);
                }
            }
            for (const auto& pp : pairs) batch.push_back(pp.intervened);

            std::vector<double> scores;
            try {
                scores = cfg.predictor->predict(batch, cfg.score_kind, meter);
            } catch (const BudgetExhausted&) {
                if (chunk == 1) {
                    exhausted = true;
                    break;
                }
                single_pair_mode = true;  // drain the remaining budget pair by pair
                continue;
            }
            queries += batch.size();
            for (std::size_t f = 0; f < fresh_originals.size(); ++f) {
                original_cache[fresh_originals[f]] = scores[f];
            }
            for (std::size_t c = 0; c < chunk; ++c) {
                double original = original_cache.at(pairs[c].row);
                double intervened = scores[fresh_originals.size() + c];
                double d = intervened - original;
                abs_changes.push_back(std::fabs(d));
                double sign = pairs[c].z_to > pairs[c].z_from   ? 1.0
                              : pairs[c].z_to < pairs[c].z_from ? -1.0
                                                                : 0.0;
                signed_changes.push_back(d * sign);
            }
            next += chunk;
        }

        const std::size_t n = abs_changes.size();
        est.n_pairs = n;
        est.queries_used = queries;
        est.status = exhausted ? EstimateStatus::budget_exhausted : EstimateStatus::ok;
        if (n == 0) return est;

        double mean = 0.0, smean = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            mean += abs_changes[i];
            smean += signed_changes[i];
        }
        mean /= static_cast<double>(n);
        smean /= static_cast<double>(n);
        double var = 0.0;
        for (double a : abs_changes) var += (a - mean) * (a - mean);
        var = n > 1 ? var / static_cast<double>(n - 1) : 0.0;
        est.mean_abs_change = mean;
        est.signed_mean = smean;
        est.std_error = std::sqrt(var / static_cast<double>(n));
        est.ci_low = mean - 1.96 * est.std_error;
        est.ci_high = mean + 1.96 * est.std_error;
        return est;
    }

    // Route definitions.
    std::set<Edge> total_active_edges() const {
        auto reach = graph.descendants(cfg.target);
        reach.insert(cfg.target);
        std::set<Edge> active;
        for (const auto& e : graph.edges()) {
            if (reach.count(e.first)) active.insert(e);
        }
        return active;
    }

    std::set<std::string> total_scored_nodes() const {
        auto scored = graph.descendants(cfg.target);
        scored.erase(graph.outcome());
        scored.insert(cfg.target);
        return scored;
    }

    static std::set<Edge> path_edges(const std::vector<std::string>& path) {
        std::set<Edge> edges;
        for (std::size_t i = 0; i + 1 < path.size(); ++i) {
            edges.insert({path[i], path[i + 1]});
        }
        return edges;
    }

    std::set<std::string> path_scored_nodes(const std::vector<std::string>& path) const {
        // the node whose edge lands on the outcome is what the model sees
        return {path[path.size() - 2]};
    }

    void check_path(const std::vector<std::string>& path) const {
        if (path.size() < 2 || path.front() != cfg.target || path.back() != graph.outcome()) {
            throw ConfigError("path must run from the target to the outcome");
        }
        if (path.size() - 1 > cfg.max_path_length) {
            throw ConfigError("path exceeds the configured maximum length");
        }
        std::set<std::string> seen;
        for (const auto& node : path) {
            if (!seen.insert(node).second) throw ConfigError("path is not simple: " + node);
        }
        for (std::size_t i = 0; i + 1 < path.size(); ++i) {
            if (!graph.has_edge(path[i], path[i + 1])) {
                throw ConfigError("path uses a non-edge: " + path[i] + " -> " + path[i + 1]);
            }
        }
    }
};

}  // namespace

EffectEstimate estimate_path_effect(const FuzzConfig& config, const std::vector<std::string>& path,
                                    std::size_t n_pairs, QueryMeter& meter) {
    config.validate();
    Engine engine(config);
    engine.check_path(path);
    return engine.run_unit(path_label(path), Engine::path_edges(path),
                           engine.path_scored_nodes(path), engine.all_rows, n_pairs, meter,
                           std::nullopt);
}

EffectEstimate estimate_total_effect(const FuzzConfig& config, std::size_t n_pairs,
                                     QueryMeter& meter) {
    config.validate();
    Engine engine(config);
    return engine.run_unit("TOTAL", engine.total_active_edges(), engine.total_scored_nodes(),
                           engine.all_rows, n_pairs, meter, std::nullopt);
}

EffectEstimate estimate_direct_effect(const FuzzConfig& config, std::size_t n_pairs,
                                      QueryMeter& meter) {
    config.validate();
    Engine engine(config);
    return engine.run_unit("DIRECT", {}, {config.target}, engine.all_rows, n_pairs, meter,
                           std::nullopt);
}

std::vector<EffectEstimate> estimate_subgroup_effects(const FuzzConfig& config,
                                                      const SubgroupPredicate& predicate,
                                                      std::size_t n_pairs_each,
                                                      QueryMeter& meter) {
    config.validate();
    Engine engine(config);
    auto rows = engine.subgroup_rows(predicate);
    if (rows.size() < 30) {
        throw ConfigError("subgroup '" + predicate.label() + "' selects only " +
                          std::to_string(rows.size()) + " reference rows (minimum 30)");
    }
    auto paths = enumerate_paths(engine.graph, config.max_path_length);
    auto ranked = prioritize_paths(paths, *config.reference, engine.graph, config.top_k);

    std::vector<EffectEstimate> out;
    out.push_back(engine.run_unit("TOTAL", engine.total_active_edges(),
                                  engine.total_scored_nodes(), rows, n_pairs_each, meter,
                                  predicate.label()));
    for (const auto& rp : ranked) {
        out.push_back(engine.run_unit(path_label(rp.path), Engine::path_edges(rp.path),
                                      engine.path_scored_nodes(rp.path), rows, n_pairs_each,
                                      meter, predicate.label()));
    }
    return out;
}

FuzzOutcome run_causal_fuzz(const FuzzConfig& config) {
    config.validate();
    Engine engine(config);
    FuzzOutcome out;

    auto paths = enumerate_paths(engine.graph, config.max_path_length);
    if (paths.paths.empty()) {
        out.no_path = true;
        return out;
    }
    out.ranked_paths = prioritize_paths(paths, *config.reference, engine.graph, config.top_k);
    const std::size_t k = out.ranked_paths.size();
    const std::size_t n_subgroups = config.subgroups.size();

    std::vector<std::vector<std::size_t>> subgroup_rows;
    for (const auto& pred : config.subgroups) {
        auto rows = engine.subgroup_rows(pred);
        if (rows.size() < 30) {
            throw ConfigError("subgroup '" + pred.label() + "' selects only " +
                              std::to_string(rows.size()) + " reference rows (minimum 30)");
        }
        subgroup_rows.push_back(std::move(rows));
    }

    // Budget plan: fixed shares for TOTAL and DIRECT (skipped when the target
    // is unreadable), remainder across path and subgroup units with a floor
    // of kMinPairs pairs each. Every pair costs at most two queries, so a
    // plan that fits can never overrun the meter.
    const std::uint64_t budget = config.budget;
    const bool direct_measurable = config.predictor->has_feature(config.target);
    const auto total_pairs =
        static_cast<std::size_t>(budget * config.split.total_share / 2.0);
    const std::size_t direct_pairs =
        direct_measurable ? static_cast<std::size_t>(budget * config.split.direct_share / 2.0)
                          : 0;
    const std::uint64_t rest_queries = budget - 2 * (total_pairs + direct_pairs);
    const std::size_t rest_pairs = static_cast<std::size_t>(rest_queries / 2);
    const std::size_t n_units = k + n_subgroups * (1 + k);

    if (total_pairs < kMinPairs || (direct_measurable && direct_pairs < kMinPairs) ||
        rest_pairs < kMinPairs * n_units) {
        throw ConfigError("budget " + std::to_string(budget) + " is below the minimum for " +
                          std::to_string(n_units) + " path/subgroup estimates (need at least " +
                          std::to_string(kMinPairs) + " pairs each)");
    }

    // Unit weights: ranked paths share weight 1 proportional to priority;
    // each subgroup shares weight 1 equally across its 1+k units.
    double strength_sum = 0.0;
    for (const auto& rp : out.ranked_paths) strength_sum += rp.strength;
    std::vector<double> path_weight(k);
    for (std::size_t i = 0; i < k; ++i) {
        path_weight[i] = strength_sum > 0.0 ? out.ranked_paths[i].strength / strength_sum
                                            : 1.0 / static_cast<double>(k);
    }
    const double weight_norm = 1.0 + static_cast<double>(n_subgroups);
    const std::size_t excess = rest_pairs - kMinPairs * n_units;
    auto unit_pairs = [&](double weight) {
        return kMinPairs +
               static_cast<std::size_t>(static_cast<double>(excess) * weight / weight_norm);
    };

    QueryMeter meter(budget);
    out.estimates.push_back(engine.run_unit("TOTAL", engine.total_active_edges(),
                                            engine.total_scored_nodes(), engine.all_rows,
                                            total_pairs, meter, std::nullopt));
    out.estimates.push_back(engine.run_unit("DIRECT", {}, {config.target}, engine.all_rows,
                                            direct_pairs, meter, std::nullopt));
    for (std::size_t i = 0; i < k; ++i) {
        const auto& rp = out.ranked_paths[i];
        out.estimates.push_back(engine.run_unit(path_label(rp.path), Engine::path_edges(rp.path),
                                                engine.path_scored_nodes(rp.path),
                                                engine.all_rows, unit_pairs(path_weight[i]),
                                                meter, std::nullopt));
    }
    const double sub_unit_weight = 1.0 / static_cast<double>(1 + k);
    for (std::size_t s = 0; s < n_subgroups; ++s) {
        const std::string label = config.subgroups[s].label();
        out.estimates.push_back(engine.run_unit("TOTAL", engine.total_active_edges(),
                                                engine.total_scored_nodes(), subgroup_rows[s],
                                                unit_pairs(sub_unit_weight), meter, label));
        for (std::size_t i = 0; i < k; ++i) {
            const auto& rp = out.ranked_paths[i];
            out.estimates.push_back(
                engine.run_unit(path_label(rp.path), Engine::path_edges(rp.path),
                                engine.path_scored_nodes(rp.path), subgroup_rows[s],
                                unit_pairs(sub_unit_weight), meter, label));
        }
    }
    out.budget_used = meter.used();
    return out;
}

}  // namespace causalfuzz
