#include "causalfuzz/sem.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "causalfuzz/errors.hpp"
#include "causalfuzz/rng.hpp"

namespace causalfuzz {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// Solves A x = b in place by Gaussian elimination with partial pivoting.
// `labels` name the columns for rank-deficiency reporting.
std::vector<double> solve_linear(std::vector<std::vector<double>> a, std::vector<double> b,
                                 const std::vector<std::string>& labels,
                                 const std::string& context) {
    const std::size_t n = a.size();
    double scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) scale = std::max(scale, std::fabs(a[i][i]));
    const double tol = std::max(scale, 1.0) * 1e-12;

    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r) {
            if (std::fabs(a[r][col]) > std::fabs(a[pivot][col])) pivot = r;
        }
        if (std::fabs(a[pivot][col]) < tol) {
            throw ConfigError("rank-deficient design fitting " + context +
                              ": collinear column '" + labels[col] + "'");
        }
        std::swap(a[col], a[pivot]);
        std::swap(b[col], b[pivot]);
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col) continue;
            double f = a[r][col] / a[col][col];
            if (f == 0.0) continue;
            for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
            b[r] -= f * b[col];
        }
    }
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = b[i] / a[i][i];
    return x;
}

struct LogisticFit {
    std::vector<double> weights;  // original scale, one per feature
    double intercept = 0.0;
    bool converged = false;
    std::size_t iterations = 0;
};

// Full-batch gradient descent on internally standardized columns, weights
// folded back to the original scale. Step size fixed per fit from the
// standardized Hessian trace bound. l2 does not penalize the intercept.
LogisticFit logistic_gd(const std::vector<std::vector<double>>& x, const std::vector<double>& y,
                        double learning_rate, std::size_t max_iterations, double l2,
                        double grad_tol) {
    const std::size_t n = x.size();
    const std::size_t p = x.empty() ? 0 : x[0].size();

    std::vector<double> mean(p, 0.0), sd(p, 0.0);
    for (const auto& row : x) {
        for (std::size_t j = 0; j < p; ++j) mean[j] += row[j];
    }
    for (std::size_t j = 0; j < p; ++j) mean[j] /= static_cast<double>(n);
    for (const auto& row : x) {
        for (std::size_t j = 0; j < p; ++j) {
            double d = row[j] - mean[j];
            sd[j] += d * d;
        }
    }
    for (std::size_t j = 0; j < p; ++j) {
        sd[j] = std::sqrt(sd[j] / static_cast<double>(n));
        if (sd[j] == 0.0) sd[j] = 1.0;  // constant column: weight stays 0
    }

    // Hessian trace bound for standardized columns plus intercept.
    const double step = learning_rate / (0.25 * static_cast<double>(p + 1));

    std::vector<double> w(p, 0.0);
    double b = 0.0;
    std::vector<double> grad(p, 0.0);
    LogisticFit fit;
    for (std::size_t iter = 0; iter < max_iterations; ++iter) {
        std::fill(grad.begin(), grad.end(), 0.0);
        double grad_b = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double z = b;
            for (std::size_t j = 0; j < p; ++j) z += w[j] * (x[i][j] - mean[j]) / sd[j];
            double err = sigmoid(z) - y[i];
            for (std::size_t j = 0; j < p; ++j) grad[j] += err * (x[i][j] - mean[j]) / sd[j];
            grad_b += err;
        }
        double inf_norm = std::fabs(grad_b / static_cast<double>(n));
        for (std::size_t j = 0; j < p; ++j) {
            grad[j] = grad[j] / static_cast<double>(n) + l2 * w[j];
            inf_norm = std::max(inf_norm, std::fabs(grad[j]));
        }
        fit.iterations = iter + 1;
        if (inf_norm < grad_tol) {
            fit.converged = true;
            break;
        }
        for (std::size_t j = 0; j < p; ++j) w[j] -= step * grad[j];
        b -= step * grad_b / static_cast<double>(n);
    }

    fit.weights.resize(p);
    fit.intercept = b;
    for (std::size_t j = 0; j < p; ++j) {
        fit.weights[j] = w[j] / sd[j];
        fit.intercept -= w[j] * mean[j] / sd[j];
    }
    return fit;
}

}  // namespace

bool GatedTerm::gate_open(double gate_value) const {
    if (op == "<") return gate_value < threshold;
    if (op == "<=") return gate_value <= threshold;
    if (op == ">") return gate_value > threshold;
    if (op == ">=") return gate_value >= threshold;
    if (op == "==") return gate_value == threshold;
    throw ConfigError("unknown gate op: " + op);
}

double StructuralEquation::linear(const std::vector<double>& parent_values) const {
    double z = intercept;
    for (std::size_t i = 0; i < weights.size(); ++i) z += weights[i] * parent_values[i];
    for (const auto& term : gated_terms) {
        std::size_t on_idx = 0, gate_idx = 0;
        for (std::size_t i = 0; i < parent_names.size(); ++i) {
            if (parent_names[i] == term.on) on_idx = i;
            if (parent_names[i] == term.gate) gate_idx = i;
        }
        if (term.gate_open(parent_values[gate_idx])) {
            z += term.scale * parent_values[on_idx];
        }
    }
    return z;
}

double StructuralEquation::mean(const std::vector<double>& parent_values) const {
    double z = linear(parent_values);
    return link == LinkKind::logistic ? sigmoid(z) : z;
}

Sem::Sem(CausalGraph graph, std::vector<StructuralEquation> equations,
         std::vector<FitDiagnostic> diagnostics)
    : graph_(std::move(graph)),
      equations_(std::move(equations)),
      diagnostics_(std::move(diagnostics)) {
    validate();
}

void Sem::validate() const {
    std::set<std::string> seen;
    for (const auto& eq : equations_) {
        if (!graph_.has_node(eq.node)) {
            throw ConfigError("equation for unknown node: " + eq.node);
        }
        if (!seen.insert(eq.node).second) {
            throw ConfigError("duplicate equation for node: " + eq.node);
        }
        if (eq.weights.size() != eq.parent_names.size()) {
            throw ConfigError("equation for '" + eq.node + "': " +
                              std::to_string(eq.weights.size()) + " weights for " +
                              std::to_string(eq.parent_names.size()) + " parents");
        }
        auto graph_parents = graph_.parents(eq.node);
        std::vector<std::string> eq_parents = eq.parent_names;
        std::sort(eq_parents.begin(), eq_parents.end());
        if (eq_parents != graph_parents) {
            throw ConfigError("equation parents for '" + eq.node +
                              "' do not match the graph's parent set");
        }
        if (eq.residual_scale < 0.0) {
            throw ConfigError("negative residual_scale for node: " + eq.node);
        }
        if (eq.link == LinkKind::logistic &&
            graph_.node(eq.node).kind != ColumnKind::binary) {
            throw ConfigError("logistic link on non-binary node: " + eq.node);
        }
        for (const auto& term : eq.gated_terms) {
            auto in_parents = [&](const std::string& name) {
                return std::find(eq.parent_names.begin(), eq.parent_names.end(), name) !=
                       eq.parent_names.end();
            };
            if (!in_parents(term.on) || !in_parents(term.gate)) {
                throw ConfigError("gated term on '" + eq.node +
                                  "' references a non-parent column");
            }
        }
    }
}

bool Sem::has_equation(const std::string& node) const {
    return std::any_of(equations_.begin(), equations_.end(),
                       [&](const StructuralEquation& eq) { return eq.node == node; });
}

const StructuralEquation& Sem::equation(const std::string& node) const {
    for (const auto& eq : equations_) {
        if (eq.node == node) return eq;
    }
    throw ConfigError("no equation for node: " + node);
}

Sem fit_sem(const CausalGraph& graph, const Dataset& data) {
    std::vector<StructuralEquation> equations;
    std::vector<FitDiagnostic> diagnostics;
    const std::size_t n = data.n_rows();

    for (const auto& node_name : topological_order(graph)) {
        auto parents = graph.parents(node_name);
        if (parents.empty()) continue;  // exogenous root, no equation
        if (node_name == graph.outcome() && !data.has_column(node_name)) continue;

        const std::size_t p = parents.size();
        if (n < 10 * (p + 1)) {
            throw ConfigError("fit_sem: node '" + node_name + "' needs at least " +
                              std::to_string(10 * (p + 1)) + " rows for " +
                              std::to_string(p + 1) + " coefficients, got " + std::to_string(n));
        }

        std::vector<std::size_t> parent_idx;
        for (const auto& parent : parents) parent_idx.push_back(data.column_index(parent));
        const std::size_t node_idx = data.column_index(node_name);

        StructuralEquation eq;
        eq.node = node_name;
        eq.parent_names = parents;

        const bool binary = graph.node(node_name).kind == ColumnKind::binary;
        if (binary) {
            std::vector<std::vector<double>> x(n, std::vector<double>(p));
            std::vector<double> y(n);
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = 0; j < p; ++j) x[i][j] = data.rows[i][parent_idx[j]];
                y[i] = data.rows[i][node_idx];
            }
            auto fit = logistic_gd(x, y, 1.0, 5000, 0.0, 1e-6);
            if (!fit.converged) {
                throw ConfigError("fit_sem: logistic fit for '" + node_name +
                                  "' did not converge after 5000 iterations");
            }
            eq.link = LinkKind::logistic;
            eq.weights = fit.weights;
            eq.intercept = fit.intercept;
            eq.residual_scale = 0.0;

            std::size_t correct = 0;
            for (std::size_t i = 0; i < n; ++i) {
                double z = eq.intercept;
                for (std::size_t j = 0; j < p; ++j) z += eq.weights[j] * x[i][j];
                if ((sigmoid(z) >= 0.5 ? 1.0 : 0.0) == y[i]) ++correct;
            }
            diagnostics.push_back(
                {node_name, "accuracy", static_cast<double>(correct) / static_cast<double>(n)});
        } else {
            // OLS via normal equations; intercept is the last column.
            std::vector<std::string> labels = parents;
            labels.push_back("(intercept)");
            const std::size_t m = p + 1;
            std::vector<std::vector<double>> a(m, std::vector<double>(m, 0.0));
            std::vector<double> b(m, 0.0);
            for (std::size_t i = 0; i < n; ++i) {
                std::vector<double> xi(m, 1.0);
                for (std::size_t j = 0; j < p; ++j) xi[j] = data.rows[i][parent_idx[j]];
                double yi = data.rows[i][node_idx];
                for (std::size_t r = 0; r < m; ++r) {
                    for (std::size_t c = 0; c < m; ++c) a[r][c] += xi[r] * xi[c];
                    b[r] += xi[r] * yi;
                }
            }
            auto coef = solve_linear(std::move(a), std::move(b), labels, "'" + node_name + "'");

            eq.link = LinkKind::identity;
            eq.weights.assign(coef.begin(), coef.begin() + static_cast<std::ptrdiff_t>(p));
            eq.intercept = coef[p];

            double ss_res = 0.0, ss_tot = 0.0, mean_y = 0.0;
            for (std::size_t i = 0; i < n; ++i) mean_y += data.rows[i][node_idx];
            mean_y /= static_cast<double>(n);
            for (std::size_t i = 0; i < n; ++i) {
                double pred = eq.intercept;
                for (std::size_t j = 0; j < p; ++j) pred += eq.weights[j] * data.rows[i][parent_idx[j]];
                double y = data.rows[i][node_idx];
                ss_res += (y - pred) * (y - pred);
                ss_tot += (y - mean_y) * (y - mean_y);
            }
            eq.residual_scale =
                n > m ? std::sqrt(ss_res / static_cast<double>(n - m)) : 0.0;
            double r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : (ss_res == 0.0 ? 1.0 : 0.0);
            diagnostics.push_back({node_name, "r2", r2});
        }
        equations.push_back(std::move(eq));
    }
    return Sem(graph, std::move(equations), std::move(diagnostics));
}

namespace {

// Ancestral sampling; preset columns are taken as given and consume no draws.
Dataset ancestral_sample(const Sem& sem, std::size_t n, std::uint64_t seed,
                         const std::map<std::string, std::vector<double>>& presets) {
    if (n == 0) throw ConfigError("sample_synthetic: n must be positive");
    const auto order = topological_order(sem.graph());
    for (const auto& node : order) {
        if (!presets.count(node) && !sem.has_equation(node)) {
            throw ConfigError("sample_synthetic: node '" + node +
                              "' has no equation and no preset values");
        }
    }

    Dataset data;
    for (const auto& node : order) {
        data.schema.push_back({node, sem.graph().node(node).kind});
    }
    data.rows.assign(n, std::vector<double>(order.size(), 0.0));

    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < order.size(); ++i) index[order[i]] = i;

    Rng rng(derive_seed(seed, "ancestral-sample", 0));
    for (std::size_t r = 0; r < n; ++r) {
        auto& row = data.rows[r];
        for (std::size_t c = 0; c < order.size(); ++c) {
            const std::string& node = order[c];
            auto preset = presets.find(node);
            if (preset != presets.end()) {
                row[c] = preset->second[r];
                continue;
            }
            const auto& eq = sem.equation(node);
            std::vector<double> parent_values(eq.parent_names.size());
            for (std::size_t j = 0; j < eq.parent_names.size(); ++j) {
                parent_values[j] = row[index.at(eq.parent_names[j])];
            }
            if (eq.link == LinkKind::logistic) {
                row[c] = rng.bernoulli(eq.mean(parent_values)) ? 1.0 : 0.0;
            } else {
                row[c] = eq.linear(parent_values);
                if (eq.residual_scale > 0.0) row[c] += eq.residual_scale * rng.normal();
            }
        }
    }
    data.validate();
    return data;
}

}  // namespace

Dataset sample_synthetic(const Sem& spec, std::size_t n, std::uint64_t seed) {
    return ancestral_sample(spec, n, seed, {});
}

std::vector<std::string> feature_order(const Sem& sem) {
    std::vector<std::string> order;
    for (const auto& node : topological_order(sem.graph())) {
        if (node != sem.graph().outcome()) order.push_back(node);
    }
    return order;
}

CounterfactualEngine::CounterfactualEngine(const Sem& sem)
    : sem_(&sem), order_(feature_order(sem)) {
    for (std::size_t i = 0; i < order_.size(); ++i) index_[order_[i]] = i;
    steps_.reserve(order_.size());
    for (const auto& node : order_) {
        NodeStep step;
        if (sem.has_equation(node)) {
            step.equation = &sem.equation(node);
            for (const auto& parent : step.equation->parent_names) {
                step.parent_positions.push_back(index_.at(parent));
            }
        }
        steps_.push_back(std::move(step));
    }
}

std::size_t CounterfactualEngine::node_index(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw ConfigError("unknown feature node: " + name);
    return it->second;
}

std::vector<double> CounterfactualEngine::propagate(const std::vector<double>& row,
                                                    const Intervention& intervention) const {
    if (row.size() != order_.size()) {
        throw ConfigError("counterfactual_row: row has " + std::to_string(row.size()) +
                          " values, expected " + std::to_string(order_.size()));
    }
    for (const auto& [node, _] : intervention.assignments) {
        if (node == sem_->graph().outcome()) {
            throw ConfigError("cannot intervene on the outcome node: " + node);
        }
        if (!index_.count(node)) {
            throw ConfigError("intervention on unknown node: " + node);
        }
    }
    for (const auto& edge : intervention.active_edges) {
        if (!sem_->graph().has_edge(edge.first, edge.second)) {
            throw ConfigError("active edge not in graph: " + edge.first + " -> " + edge.second);
        }
    }

    std::vector<double> cf = row;
    std::vector<double> observed_parents, mixed_parents;
    for (std::size_t c = 0; c < order_.size(); ++c) {
        const std::string& node = order_[c];
        auto assigned = intervention.assignments.find(node);
        if (assigned != intervention.assignments.end()) {
            cf[c] = assigned->second;
            continue;
        }
        const NodeStep& step = steps_[c];
        if (!step.equation) {
            cf[c] = row[c];  // exogenous: residual is the observed value itself
            continue;
        }
        const auto& eq = *step.equation;
        observed_parents.resize(eq.parent_names.size());
        mixed_parents.resize(eq.parent_names.size());
        bool unchanged = true;
        for (std::size_t j = 0; j < eq.parent_names.size(); ++j) {
            std::size_t pi = step.parent_positions[j];
            observed_parents[j] = row[pi];
            bool active = intervention.active_edges.count({eq.parent_names[j], node}) > 0;
            mixed_parents[j] = active ? cf[pi] : row[pi];
            if (mixed_parents[j] != observed_parents[j]) unchanged = false;
        }
        if (unchanged) {
            cf[c] = row[c];  // effective inputs identical: carry the observed value bit-exactly
            continue;
        }
        if (eq.link == LinkKind::logistic) {
            double residual = row[c] - eq.mean(observed_parents);
            cf[c] = (eq.mean(mixed_parents) + residual >= 0.5) ? 1.0 : 0.0;
        } else {
            double residual = row[c] - eq.linear(observed_parents);
            cf[c] = eq.linear(mixed_parents) + residual;
        }
    }
    return cf;
}

std::vector<double> counterfactual_row(const Sem& sem, const std::vector<double>& row,
                                       const Intervention& intervention) {
    return CounterfactualEngine(sem).propagate(row, intervention);
}

// --- failure-mode families --------------------------------------------------

namespace {

FailureModeFixture make_proxy(std::size_t n, std::uint64_t seed, double s) {
    CausalGraph graph(
        {{"smoking", NodeRole::target, ColumnKind::binary},
         {"bp", NodeRole::feature, ColumnKind::continuous},
         {"bmi", NodeRole::feature, ColumnKind::continuous},
         {"risk", NodeRole::outcome, ColumnKind::binary}},
        {{"smoking", "bp"}, {"smoking", "bmi"}, {"bp", "risk"}, {"bmi", "risk"}});
    std::vector<StructuralEquation> eqs;
    eqs.push_back({"smoking", {}, {}, 0.0, LinkKind::logistic, 0.0, {}});
    eqs.push_back({"bp", {"smoking"}, {1.0 * s}, 0.0, LinkKind::identity, 0.5, {}});
    eqs.push_back({"bmi", {"smoking"}, {0.8 * s}, 0.0, LinkKind::identity, 0.5, {}});
    eqs.push_back({"risk", {"bmi", "bp"}, {1.0, 1.2}, -1.0 * s, LinkKind::logistic, 0.0, {}});
    Sem sem(graph, std::move(eqs));
    FailureModeFixture fx{ancestral_sample(sem, n, seed, {}), graph, sem, {}};
    fx.truth = {
        {path_label({"smoking", "bmi", "risk"}), 0.8 * s},
        {path_label({"smoking", "bp", "risk"}), 1.2 * s},
        {"TOTAL", 2.0 * s},
        {"DIRECT", 0.0},
    };
    return fx;
}

FailureModeFixture make_cancellation(std::size_t n, std::uint64_t seed, double s) {
    CausalGraph graph(
        {{"education", NodeRole::target, ColumnKind::binary},
         {"cscore", NodeRole::feature, ColumnKind::continuous},
         {"escore", NodeRole::feature, ColumnKind::continuous},
         {"risk", NodeRole::outcome, ColumnKind::binary}},
        {{"education", "cscore"}, {"education", "escore"}, {"cscore", "risk"}, {"escore", "risk"}});
    std::vector<StructuralEquation> eqs;
    eqs.push_back({"education", {}, {}, 0.0, LinkKind::logistic, 0.0, {}});
    eqs.push_back({"cscore", {"education"}, {1.0}, 0.0, LinkKind::identity, 0.5, {}});
    eqs.push_back({"escore", {"education"}, {1.0}, 0.0, LinkKind::identity, 0.5, {}});
    // opposing outcome weights of equal magnitude: aggregate effect cancels
    eqs.push_back({"risk", {"cscore", "escore"}, {-1.0 * s, 1.0 * s}, 0.0, LinkKind::logistic,
                   0.0, {}});
    Sem sem(graph, std::move(eqs));
    FailureModeFixture fx{ancestral_sample(sem, n, seed, {}), graph, sem, {}};
    fx.truth = {
        {path_label({"education", "cscore", "risk"}), -1.0 * s},
        {path_label({"education", "escore", "risk"}), 1.0 * s},
        {"TOTAL", 0.0},
        {"DIRECT", 0.0},
    };
    return fx;
}

FailureModeFixture make_subgroup(std::size_t n, std::uint64_t seed, double s) {
    CausalGraph graph(
        {{"age", NodeRole::feature, ColumnKind::continuous},
         {"exposure", NodeRole::target, ColumnKind::binary},
         {"marker", NodeRole::feature, ColumnKind::continuous},
         {"risk", NodeRole::outcome, ColumnKind::binary}},
        {{"age", "marker"}, {"exposure", "marker"}, {"age", "risk"}, {"marker", "risk"}});

    // Discrete age support with an atom at the median (40), so the gated
    // share P(age < median) is 0.40 rather than exactly one half.
    const double ages[] = {25, 32, 38, 40, 45, 52, 60};
    const double probs[] = {0.15, 0.15, 0.10, 0.20, 0.20, 0.15, 0.05};
    std::vector<double> age_col(n);
    Rng rng(derive_seed(seed, "subgroup-age", 0));
    for (std::size_t i = 0; i < n; ++i) {
        double u = rng.uniform01();
        double acc = 0.0;
        age_col[i] = ages[6];
        for (std::size_t j = 0; j < 7; ++j) {
            acc += probs[j];
            if (u < acc) {
                age_col[i] = ages[j];
                break;
            }
        }
    }

    const double w_marker = 0.45;
    std::vector<StructuralEquation> eqs;
    eqs.push_back({"exposure", {}, {}, 0.0, LinkKind::logistic, 0.0, {}});
    // marker responds to exposure only below the age median
    eqs.push_back({"marker",
                   {"age", "exposure"},
                   {0.04, 0.0},
                   -1.6,
                   LinkKind::identity,
                   0.5,
                   {{1.0 * s, "exposure", "age", "<", 40.0}}});
    eqs.push_back({"risk", {"age", "marker"}, {0.03, w_marker},
                   -(0.03 * 40.15 + w_marker * (0.006 + 0.2 * s)), LinkKind::logistic, 0.0, {}});
    Sem sem(graph, std::move(eqs));
    FailureModeFixture fx{ancestral_sample(sem, n, seed, {{"age", age_col}}), graph, sem, {}};
    const std::string path = path_label({"exposure", "marker", "risk"});
    fx.truth = {
        {path, s * w_marker},
        {path + "|age<40", s * w_marker},
        {path + "|age>=40", 0.0},
        {"TOTAL", 0.4 * s * w_marker},
        {"TOTAL|age<40", s * w_marker},
        {"TOTAL|age>=40", 0.0},
        {"DIRECT", 0.0},
    };
    return fx;
}

FailureModeFixture make_heart(std::size_t n, std::uint64_t seed, double s) {
    CausalGraph graph(
        {{"age", NodeRole::feature, ColumnKind::continuous},
         {"smoking", NodeRole::target, ColumnKind::binary},
         {"bp", NodeRole::feature, ColumnKind::continuous},
         {"bmi", NodeRole::feature, ColumnKind::continuous},
         {"risk", NodeRole::outcome, ColumnKind::binary}},
        {{"age", "bp"},
         {"age", "bmi"},
         {"smoking", "bp"},
         {"smoking", "bmi"},
         {"smoking", "risk"},
         {"bp", "risk"},
         {"bmi", "risk"}});
    std::vector<StructuralEquation> eqs;
    eqs.push_back({"age", {}, {}, 0.0, LinkKind::identity, 1.0, {}});  // standardized age
    eqs.push_back({"smoking", {}, {}, 0.0, LinkKind::logistic, 0.0, {}});
    eqs.push_back({"bp", {"age", "smoking"}, {0.5, 1.0 * s}, 0.0, LinkKind::identity, 0.5, {}});
    eqs.push_back({"bmi", {"age", "smoking"}, {0.3, 0.8 * s}, 0.0, LinkKind::identity, 0.5, {}});
    eqs.push_back({"risk", {"bmi", "bp", "smoking"}, {0.8, 1.0, 0.5 * s}, -1.07 * s,
                   LinkKind::logistic, 0.0, {}});
    Sem sem(graph, std::move(eqs));
    FailureModeFixture fx{ancestral_sample(sem, n, seed, {}), graph, sem, {}};
    fx.truth = {
        {path_label({"smoking", "risk"}), 0.5 * s},
        {path_label({"smoking", "bmi", "risk"}), 0.8 * s * 0.8},
        {path_label({"smoking", "bp", "risk"}), 1.0 * s * 1.0},
        {"TOTAL", 0.5 * s + 0.64 * s + 1.0 * s},
        {"DIRECT", 0.5 * s},
    };
    return fx;
}

}  // namespace

FailureModeFixture gen_failure_mode(const std::string& family, std::size_t n, std::uint64_t seed,
                                    double strength) {
    if (strength <= 0.0) throw ConfigError("gen_failure_mode: strength must be positive");
    if (n == 0) throw ConfigError("gen_failure_mode: n must be positive");
    if (family == "proxy") return make_proxy(n, seed, strength);
    if (family == "cancellation") return make_cancellation(n, seed, strength);
    if (family == "subgroup") return make_subgroup(n, seed, strength);
    if (family == "heart") return make_heart(n, seed, strength);
    throw ConfigError("unknown failure-mode family: " + family);
}

std::string truth_to_csv(const std::vector<GroundTruthRow>& truth) {
    std::string out = "path,effect\n";
    for (const auto& row : truth) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.17g", row.effect);
        out += row.path;
        out += ',';
        out += buf;
        out += '\n';
    }
    return out;
}

// --- SEM file format ---------------------------------------------------------

Sem parse_sem(const std::string& text, const CausalGraph& graph) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("sem file syntax error at byte " + std::to_string(e.byte) + ": " +
                          e.what());
    }
    if (!j.is_object() || !j.contains("nodes") || !j["nodes"].is_array()) {
        throw ConfigError("sem file must contain a \"nodes\" array");
    }
    std::vector<StructuralEquation> equations;
    std::vector<FitDiagnostic> diagnostics;
    for (const auto& e : j["nodes"]) {
        StructuralEquation eq;
        eq.node = e.at("node").get<std::string>();
        for (const auto& p : e.at("parents")) eq.parent_names.push_back(p.get<std::string>());
        for (const auto& w : e.at("weights")) eq.weights.push_back(w.get<double>());
        eq.intercept = e.at("intercept").get<double>();
        std::string link = e.at("link").get<std::string>();
        if (link == "identity") {
            eq.link = LinkKind::identity;
        } else if (link == "logistic") {
            eq.link = LinkKind::logistic;
        } else {
            throw ConfigError("unknown link for node '" + eq.node + "': " + link);
        }
        eq.residual_scale = e.at("residual_scale").get<double>();
        if (e.contains("gated_terms")) {
            for (const auto& t : e["gated_terms"]) {
                GatedTerm term;
                term.scale = t.at("scale").get<double>();
                term.on = t.at("on").get<std::string>();
                term.gate = t.at("gate").get<std::string>();
                term.op = t.at("op").get<std::string>();
                term.threshold = t.at("threshold").get<double>();
                eq.gated_terms.push_back(std::move(term));
            }
        }
        if (e.contains("diagnostic")) {
            diagnostics.push_back({eq.node, e["diagnostic"].at("metric").get<std::string>(),
                                   e["diagnostic"].at("value").get<double>()});
        }
        equations.push_back(std::move(eq));
    }
    return Sem(graph, std::move(equations), std::move(diagnostics));
}

Sem load_sem(const std::string& path, const CausalGraph& graph) {
    return parse_sem(read_file(path), graph);
}

std::string sem_to_json(const Sem& sem) {
    nlohmann::ordered_json j;
    j["nodes"] = nlohmann::ordered_json::array();
    for (const auto& eq : sem.equations()) {
        nlohmann::ordered_json e;
        e["node"] = eq.node;
        e["parents"] = eq.parent_names;
        e["weights"] = eq.weights;
        e["intercept"] = eq.intercept;
        e["link"] = eq.link == LinkKind::logistic ? "logistic" : "identity";
        e["residual_scale"] = eq.residual_scale;
        if (!eq.gated_terms.empty()) {
            e["gated_terms"] = nlohmann::ordered_json::array();
            for (const auto& term : eq.gated_terms) {
                nlohmann::ordered_json t;
                t["scale"] = term.scale;
                t["on"] = term.on;
                t["gate"] = term.gate;
                t["op"] = term.op;
                t["threshold"] = term.threshold;
                e["gated_terms"].push_back(t);
            }
        }
        for (const auto& diag : sem.diagnostics()) {
            if (diag.node == eq.node) {
                e["diagnostic"] = {{"metric", diag.metric}, {"value", diag.value}};
                break;
            }
        }
        j["nodes"].push_back(e);
    }
    return j.dump(2) + "\n";
}

}  // namespace causalfuzz
