#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "causalfuzz/dataset.hpp"
#include "causalfuzz/graph.hpp"

namespace causalfuzz {

enum class LinkKind { identity, logistic };

// Product term gated by a threshold on another parent, e.g.
// weight * z * 1[age < 40]. Only generators use these; fits are linear.
struct GatedTerm {
    double scale = 0.0;
    std::string on;      // parent whose value is scaled
    std::string gate;    // parent tested against the threshold
    std::string op;      // one of < <= > >= ==
    double threshold = 0.0;

    bool gate_open(double gate_value) const;
};

struct StructuralEquation {
    std::string node;
    std::vector<std::string> parent_names;
    std::vector<double> weights;  // one per parent
    double intercept = 0.0;
    LinkKind link = LinkKind::identity;
    double residual_scale = 0.0;  // residual std dev; unused for logistic
    std::vector<GatedTerm> gated_terms;

    // Linear predictor (pre-link), parents given in parent_names order.
    double linear(const std::vector<double>& parent_values) const;
    // Post-link mean: identity value or logistic probability.
    double mean(const std::vector<double>& parent_values) const;
};

// Per-node fit quality: R^2 for identity links, accuracy for logistic.
struct FitDiagnostic {
    std::string node;
    std::string metric;  // "r2" | "accuracy"
    double value = 0.0;
};

// Structural equations over a causal graph. Root nodes carry no equation and
// are treated as exogenous. Immutable after construction; counterfactuals are
// pure and safe to run concurrently.
class Sem {
public:
    Sem(CausalGraph graph, std::vector<StructuralEquation> equations,
        std::vector<FitDiagnostic> diagnostics = {});

    const CausalGraph& graph() const { return graph_; }
    const std::vector<StructuralEquation>& equations() const { return equations_; }
    const std::vector<FitDiagnostic>& diagnostics() const { return diagnostics_; }

    bool has_equation(const std::string& node) const;
    const StructuralEquation& equation(const std::string& node) const;

private:
    CausalGraph graph_;
    std::vector<StructuralEquation> equations_;
    std::vector<FitDiagnostic> diagnostics_;

    void validate() const;
};

// Fits one equation per node with parents: OLS for identity links, logistic
// regression by gradient descent for binary nodes. The outcome node is fitted
// too when present in the data. Deterministic.
Sem fit_sem(const CausalGraph& graph, const Dataset& data);

// Ancestral sampling in topological order; Gaussian residuals for identity
// links, Bernoulli draws for logistic. Every node must carry an equation
// (roots as intercept-only). Deterministic per seed.
Dataset sample_synthetic(const Sem& spec, std::size_t n, std::uint64_t seed);

struct Intervention {
    std::map<std::string, double> assignments;
    std::set<Edge> active_edges;  // edges through which the change propagates
};

// Abduction-action-prediction with edge selectivity. Per node, the observed
// residual is carried over; parents enter at their counterfactual value iff
// the parent->node edge is active, at their observed value otherwise.
// Intervened nodes take their assigned value unconditionally. Binary nodes
// threshold (logistic mean + residual) at 0.5. A node whose effective inputs
// are unchanged reproduces its observed value bit-exactly.
// `row` holds one value per graph feature node, in `feature_order(sem)` order.
std::vector<double> counterfactual_row(const Sem& sem, const std::vector<double>& row,
                                       const Intervention& intervention);

// All non-outcome nodes in topological order; the row layout used by
// counterfactual_row.
std::vector<std::string> feature_order(const Sem& sem);

// Prebuilt propagation context for repeated counterfactual queries against
// one SEM; counterfactual_row is a one-shot wrapper around this.
class CounterfactualEngine {
public:
    explicit CounterfactualEngine(const Sem& sem);

    const std::vector<std::string>& order() const { return order_; }
    std::size_t node_index(const std::string& name) const;

    std::vector<double> propagate(const std::vector<double>& row,
                                  const Intervention& intervention) const;

private:
    struct NodeStep {
        const StructuralEquation* equation = nullptr;  // null for exogenous nodes
        std::vector<std::size_t> parent_positions;
    };
    const Sem* sem_;
    std::vector<std::string> order_;
    std::map<std::string, std::size_t> index_;
    std::vector<NodeStep> steps_;
};

// --- synthetic failure-mode families ---------------------------------------

struct GroundTruthRow {
    std::string path;   // path label, TOTAL, DIRECT, or label|subgroup
    double effect = 0.0;  // product of generating coefficients (raw score scale)
};

struct FailureModeFixture {
    Dataset data;       // feature columns plus the outcome column
    CausalGraph graph;  // target and outcome roles assigned
    Sem sem;            // the generating equations for non-root nodes
    std::vector<GroundTruthRow> truth;
};

// family: proxy | cancellation | subgroup | heart.
//   proxy        target's influence flows only through two mediators
//   cancellation two mediated routes with opposite-signed outcome weights
//   subgroup     mediated route active only where the gate is below its median
//   heart        age/smoking -> bp/bmi -> risk, with a direct smoking edge
FailureModeFixture gen_failure_mode(const std::string& family, std::size_t n,
                                    std::uint64_t seed, double strength);

std::string truth_to_csv(const std::vector<GroundTruthRow>& truth);

// SEM file format: {"nodes":[{"node","parents","weights","intercept","link",
// "residual_scale"[,"gated_terms"][,"diagnostic"]}...]}. The graph is supplied
// separately and equations are checked against its parent sets.
Sem parse_sem(const std::string& text, const CausalGraph& graph);
Sem load_sem(const std::string& path, const CausalGraph& graph);
std::string sem_to_json(const Sem& sem);

}  // namespace causalfuzz
