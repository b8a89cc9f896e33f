#include "causalfuzz/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "causalfuzz/errors.hpp"

namespace causalfuzz {

namespace {

std::string fixed6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%+.6f", v);
    return buf;
}

void require_keys(const nlohmann::json& j, const std::vector<std::string>& allowed,
                  const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end()) {
            throw ConfigError("report: unknown field '" + it.key() + "' in " + where);
        }
    }
}

// Splits a path label on the arrow separator.
std::vector<std::string> split_path_label(const std::string& label) {
    static const std::string arrow = "→";
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
        auto pos = label.find(arrow, start);
        if (pos == std::string::npos) {
            parts.push_back(label.substr(start));
            return parts;
        }
        parts.push_back(label.substr(start, pos - start));
        start = pos + arrow.size();
    }
}

const char* verdict_glyph(Verdict v) {
    switch (v) {
        case Verdict::leak: return "✗";
        case Verdict::pass: return "✓";
        case Verdict::structural_zero: return "∅";
        case Verdict::inconclusive_budget: return "…";
        default: return "?";
    }
}

}  // namespace

std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::leak: return "leak";
        case Verdict::pass: return "pass";
        case Verdict::inconclusive: return "inconclusive";
        case Verdict::structural_zero: return "structural-zero";
        case Verdict::inconclusive_budget: return "inconclusive-budget";
    }
    return "inconclusive";
}

Verdict verdict_from_string(const std::string& s) {
    if (s == "leak") return Verdict::leak;
    if (s == "pass") return Verdict::pass;
    if (s == "inconclusive") return Verdict::inconclusive;
    if (s == "structural-zero") return Verdict::structural_zero;
    if (s == "inconclusive-budget") return Verdict::inconclusive_budget;
    throw ConfigError("unknown verdict: " + s);
}

std::vector<MediatorFlag> LeakageReport::flagged_mediators() const {
    std::map<std::string, double> best;
    for (const auto& entry : entries) {
        if (entry.verdict != Verdict::leak) continue;
        auto nodes = split_path_label(entry.path);
        if (nodes.size() < 3) continue;  // no interior nodes on TOTAL/DIRECT/direct edges
        for (std::size_t i = 1; i + 1 < nodes.size(); ++i) {
            auto it = best.find(nodes[i]);
            if (it == best.end() || entry.estimate.mean_abs_change > it->second) {
                best[nodes[i]] = entry.estimate.mean_abs_change;
            }
        }
    }
    std::vector<MediatorFlag> out;
    for (const auto& [node, effect] : best) out.push_back({node, effect});
    std::sort(out.begin(), out.end(), [](const MediatorFlag& a, const MediatorFlag& b) {
        if (a.max_effect != b.max_effect) return a.max_effect > b.max_effect;
        return a.node < b.node;
    });
    return out;
}

LeakageReport assemble(const std::vector<EffectEstimate>& estimates,
                       const BaselineResults& baselines, const ReportHeader& header) {
    LeakageReport report;
    report.header = header;
    report.baselines = baselines;
    if (report.header.propagation.empty()) {
        report.header.propagation =
            "residual-preserving edge-activation counterfactuals; "
            "effects averaged over the empirical reference distribution";
    }
    if (report.header.status.empty()) report.header.status = "ok";

    for (const auto& est : estimates) {
        ReportEntry entry;
        entry.path = est.path_label;
        entry.estimate = est;
        entry.subgroup = est.subgroup_label;
        switch (est.status) {
            case EstimateStatus::structural_zero:
                entry.verdict = Verdict::structural_zero;
                break;
            case EstimateStatus::budget_exhausted:
                entry.verdict = Verdict::inconclusive_budget;
                break;
            default:
                if (est.ci_low > header.tau) {
                    entry.verdict = Verdict::leak;
                } else if (est.ci_high < header.tau) {
                    entry.verdict = Verdict::pass;
                } else {
                    entry.verdict = Verdict::inconclusive;
                }
        }
        report.entries.push_back(std::move(entry));
    }

    std::sort(report.entries.begin(), report.entries.end(),
              [](const ReportEntry& a, const ReportEntry& b) {
                  if (a.estimate.mean_abs_change != b.estimate.mean_abs_change) {
                      return a.estimate.mean_abs_change > b.estimate.mean_abs_change;
                  }
                  if (a.path != b.path) return a.path < b.path;
                  return a.subgroup.value_or("") < b.subgroup.value_or("");
              });

    report.overall = Verdict::pass;
    for (const auto& entry : report.entries) {
        if (entry.verdict == Verdict::leak) {
            report.overall = Verdict::leak;
            break;
        }
    }
    return report;
}

std::string render_json(const LeakageReport& report) {
    nlohmann::ordered_json j;
    j["report_version"] = 1;
    nlohmann::ordered_json header;
    header["target"] = report.header.target;
    header["model"] = report.header.model_id;
    header["score_kind"] = to_string(report.header.score_kind);
    header["tau"] = report.header.tau;
    header["budget"] = report.header.budget;
    header["budget_used"] = report.header.budget_used;
    header["seed"] = report.header.seed;
    header["propagation"] = report.header.propagation;
    header["status"] = report.header.status;
    j["header"] = header;

    j["entries"] = nlohmann::ordered_json::array();
    for (const auto& entry : report.entries) {
        nlohmann::ordered_json e;
        e["path"] = entry.path;
        e["effect"] = entry.estimate.mean_abs_change;
        e["ci"] = {entry.estimate.ci_low, entry.estimate.ci_high};
        e["signed_mean"] = entry.estimate.signed_mean;
        e["n_pairs"] = entry.estimate.n_pairs;
        e["queries"] = entry.estimate.queries_used;
        e["verdict"] = to_string(entry.verdict);
        if (entry.subgroup) {
            e["subgroup"] = *entry.subgroup;
        } else {
            e["subgroup"] = nullptr;
        }
        j["entries"].push_back(e);
    }

    nlohmann::ordered_json baselines = nlohmann::ordered_json::object();
    if (report.baselines.permutation) {
        const auto& perm = *report.baselines.permutation;
        nlohmann::ordered_json b;
        b["feature"] = perm.feature;
        b["metric"] = perm.metric;
        b["mean_drop"] = perm.mean_drop;
        b["std"] = perm.std_dev;
        b["n_repeats"] = perm.n_repeats;
        b["structural_zero"] = perm.structural_zero;
        baselines["permutation_importance"] = b;
    }
    if (report.baselines.parity_gap) {
        nlohmann::ordered_json b;
        b["group"] = report.baselines.parity_group.value_or("");
        b["gap"] = *report.baselines.parity_gap;
        baselines["demographic_parity_gap"] = b;
    }
    j["baselines"] = baselines;
    j["overall"] = to_string(report.overall);
    return j.dump(2) + "\n";
}

LeakageReport parse_report(const std::string& json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("report syntax error at byte " + std::to_string(e.byte) + ": " +
                          e.what());
    }
    require_keys(j, {"report_version", "header", "entries", "baselines", "overall"}, "report");
    if (j.at("report_version").get<int>() != 1) {
        throw ConfigError("unsupported report_version");
    }

    LeakageReport report;
    const auto& h = j.at("header");
    require_keys(h,
                 {"target", "model", "score_kind", "tau", "budget", "budget_used", "seed",
                  "propagation", "status"},
                 "header");
    report.header.target = h.at("target").get<std::string>();
    report.header.model_id = h.at("model").get<std::string>();
    report.header.score_kind = score_kind_from_string(h.at("score_kind").get<std::string>());
    report.header.tau = h.at("tau").get<double>();
    report.header.budget = h.at("budget").get<std::uint64_t>();
    report.header.budget_used = h.at("budget_used").get<std::uint64_t>();
    report.header.seed = h.at("seed").get<std::uint64_t>();
    report.header.propagation = h.at("propagation").get<std::string>();
    report.header.status = h.at("status").get<std::string>();

    for (const auto& e : j.at("entries")) {
        require_keys(e,
                     {"path", "effect", "ci", "signed_mean", "n_pairs", "queries", "verdict",
                      "subgroup"},
                     "entry");
        ReportEntry entry;
        entry.path = e.at("path").get<std::string>();
        entry.estimate.path_label = entry.path;
        entry.estimate.mean_abs_change = e.at("effect").get<double>();
        if (!e.at("ci").is_array() || e.at("ci").size() != 2) {
            throw ConfigError("report: entry ci must be [low, high]");
        }
        entry.estimate.ci_low = e.at("ci")[0].get<double>();
        entry.estimate.ci_high = e.at("ci")[1].get<double>();
        entry.estimate.signed_mean = e.at("signed_mean").get<double>();
        entry.estimate.n_pairs = e.at("n_pairs").get<std::size_t>();
        entry.estimate.queries_used = e.at("queries").get<std::uint64_t>();
        entry.estimate.std_error =
            (entry.estimate.ci_high - entry.estimate.mean_abs_change) / 1.96;
        entry.verdict = verdict_from_string(e.at("verdict").get<std::string>());
        if (entry.verdict == Verdict::structural_zero) {
            entry.estimate.status = EstimateStatus::structural_zero;
        } else if (entry.verdict == Verdict::inconclusive_budget) {
            entry.estimate.status = EstimateStatus::budget_exhausted;
        }
        if (!e.at("subgroup").is_null()) {
            entry.subgroup = e.at("subgroup").get<std::string>();
            entry.estimate.subgroup_label = entry.subgroup;
        }
        report.entries.push_back(std::move(entry));
    }

    const auto& b = j.at("baselines");
    require_keys(b, {"permutation_importance", "demographic_parity_gap"}, "baselines");
    if (b.contains("permutation_importance")) {
        const auto& pb = b["permutation_importance"];
        require_keys(pb, {"feature", "metric", "mean_drop", "std", "n_repeats", "structural_zero"},
                     "permutation_importance");
        PermutationImportance perm;
        perm.feature = pb.at("feature").get<std::string>();
        perm.metric = pb.at("metric").get<std::string>();
        perm.mean_drop = pb.at("mean_drop").get<double>();
        perm.std_dev = pb.at("std").get<double>();
        perm.n_repeats = pb.at("n_repeats").get<std::size_t>();
        perm.structural_zero = pb.at("structural_zero").get<bool>();
        report.baselines.permutation = perm;
    }
    if (b.contains("demographic_parity_gap")) {
        const auto& gb = b["demographic_parity_gap"];
        require_keys(gb, {"group", "gap"}, "demographic_parity_gap");
        report.baselines.parity_group = gb.at("group").get<std::string>();
        report.baselines.parity_gap = gb.at("gap").get<double>();
    }
    report.overall = verdict_from_string(j.at("overall").get<std::string>());
    return report;
}

LeakageReport load_report(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open report file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_report(buf.str());
}

std::string render_text(const LeakageReport& report) {
    std::ostringstream out;
    out << "causal-fuzz leakage report\n";
    out << "target: " << report.header.target << "   model: " << report.header.model_id
        << "   score: " << to_string(report.header.score_kind) << "\n";
    char line[160];
    std::snprintf(line, sizeof(line), "tau: %.6f   budget: %llu (used %llu)   seed: %llu\n",
                  report.header.tau,
                  static_cast<unsigned long long>(report.header.budget),
                  static_cast<unsigned long long>(report.header.budget_used),
                  static_cast<unsigned long long>(report.header.seed));
    out << line;
    out << "propagation: " << report.header.propagation << "\n";
    if (report.header.status != "ok") out << "status: " << report.header.status << "\n";
    out << "overall: " << (report.overall == Verdict::leak ? "LEAK" : "PASS") << "\n\n";

    if (report.entries.empty()) {
        out << "no paths from target to outcome\n";
        return out.str();
    }

    out << "  " << "verdict               path                            effect      ci95"
        << "                     signed      pairs   queries  subgroup\n";
    for (const auto& entry : report.entries) {
        std::snprintf(line, sizeof(line), "  %s %-19s %-31s %s  [%s, %s]  %s  %7zu  %8llu  %s\n",
                      verdict_glyph(entry.verdict), to_string(entry.verdict).c_str(),
                      entry.path.c_str(), fixed6(entry.estimate.mean_abs_change).c_str(),
                      fixed6(entry.estimate.ci_low).c_str(), fixed6(entry.estimate.ci_high).c_str(),
                      fixed6(entry.estimate.signed_mean).c_str(), entry.estimate.n_pairs,
                      static_cast<unsigned long long>(entry.estimate.queries_used),
                      entry.subgroup ? entry.subgroup->c_str() : "-");
        out << line;
    }

    auto mediators = report.flagged_mediators();
    if (!mediators.empty()) {
        out << "\nflagged mediators:";
        for (const auto& m : mediators) {
            std::snprintf(line, sizeof(line), " %s (%.6f)", m.node.c_str(), m.max_effect);
            out << line;
        }
        out << "\n";
    }
    if (report.baselines.permutation) {
        const auto& perm = *report.baselines.permutation;
        if (perm.structural_zero) {
            out << "baseline permutation_importance(" << perm.feature
                << "): structural-zero (feature absent from model schema)\n";
        } else {
            std::snprintf(line, sizeof(line),
                          "baseline permutation_importance(%s): %s drop %.6f (std %.6f)\n",
                          perm.feature.c_str(), perm.metric.c_str(), perm.mean_drop,
                          perm.std_dev);
            out << line;
        }
    }
    if (report.baselines.parity_gap) {
        std::snprintf(line, sizeof(line), "baseline demographic_parity_gap(%s): %.6f\n",
                      report.baselines.parity_group.value_or("").c_str(),
                      *report.baselines.parity_gap);
        out << line;
    }
    return out.str();
}

bool ReportDiff::empty() const {
    return new_leaks.empty() && resolved.empty() && regressions.empty();
}

ReportDiff diff_reports(const LeakageReport& old_report, const LeakageReport& new_report) {
    if (old_report.header.target != new_report.header.target) {
        throw ConfigError("diff: reports audit different targets ('" + old_report.header.target +
                          "' vs '" + new_report.header.target + "')");
    }
    if (old_report.header.tau != new_report.header.tau) {
        throw ConfigError("diff: reports use different thresholds");
    }

    using Key = std::pair<std::string, std::string>;
    auto key_of = [](const ReportEntry& e) { return Key{e.path, e.subgroup.value_or("")}; };
    std::map<Key, const ReportEntry*> old_by_key, new_by_key;
    for (const auto& e : old_report.entries) old_by_key[key_of(e)] = &e;
    for (const auto& e : new_report.entries) new_by_key[key_of(e)] = &e;

    ReportDiff diff;
    diff.target = new_report.header.target;

    for (const auto& e : new_report.entries) {
        auto it = old_by_key.find(key_of(e));
        if (it != old_by_key.end()) {
            const ReportEntry& old_entry = *it->second;
            DiffEntry d{e.path, e.subgroup, old_entry.estimate.mean_abs_change,
                        e.estimate.mean_abs_change};
            diff.deltas.push_back(d);
            double pooled = std::sqrt(old_entry.estimate.std_error * old_entry.estimate.std_error +
                                      e.estimate.std_error * e.estimate.std_error);
            if (e.estimate.mean_abs_change - old_entry.estimate.mean_abs_change > 2.0 * pooled) {
                diff.regressions.push_back(d);
            }
            if (e.verdict == Verdict::leak && old_entry.verdict != Verdict::leak) {
                diff.new_leaks.push_back(d);
            }
            if (old_entry.verdict == Verdict::leak && e.verdict != Verdict::leak) {
                diff.resolved.push_back(d);
            }
        } else if (e.verdict == Verdict::leak) {
            diff.new_leaks.push_back({e.path, e.subgroup, 0.0, e.estimate.mean_abs_change});
        }
    }
    for (const auto& e : old_report.entries) {
        if (e.verdict == Verdict::leak && !new_by_key.count(key_of(e))) {
            diff.resolved.push_back({e.path, e.subgroup, e.estimate.mean_abs_change, 0.0});
        }
    }
    return diff;
}

std::string render_diff(const ReportDiff& diff) {
    nlohmann::ordered_json j;
    j["target"] = diff.target;
    auto entry_list = [](const std::vector<DiffEntry>& entries) {
        nlohmann::ordered_json arr = nlohmann::ordered_json::array();
        for (const auto& d : entries) {
            nlohmann::ordered_json e;
            e["path"] = d.path;
            if (d.subgroup) {
                e["subgroup"] = *d.subgroup;
            } else {
                e["subgroup"] = nullptr;
            }
            e["old_effect"] = d.old_effect;
            e["new_effect"] = d.new_effect;
            e["delta"] = d.new_effect - d.old_effect;
            arr.push_back(e);
        }
        return arr;
    };
    j["deltas"] = entry_list(diff.deltas);
    j["new_leaks"] = entry_list(diff.new_leaks);
    j["resolved_leaks"] = entry_list(diff.resolved);
    j["regressions"] = entry_list(diff.regressions);
    return j.dump(2) + "\n";
}

}  // namespace causalfuzz
