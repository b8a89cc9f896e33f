#pragma once

#include <cstddef>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "causalfuzz/dataset.hpp"

namespace causalfuzz {

enum class NodeRole { feature, target, outcome };

struct NodeSpec {
    std::string name;
    NodeRole role = NodeRole::feature;
    ColumnKind kind = ColumnKind::continuous;
};

using Edge = std::pair<std::string, std::string>;

// User-supplied causal DAG over feature nodes plus one outcome node.
// Immutable after validation; all operations are pure.
class CausalGraph {
public:
    CausalGraph(std::vector<NodeSpec> nodes, std::vector<Edge> edges);

    const std::vector<NodeSpec>& nodes() const { return nodes_; }
    const std::vector<Edge>& edges() const { return edges_; }

    bool has_node(const std::string& name) const;
    const NodeSpec& node(const std::string& name) const;
    bool has_edge(const std::string& src, const std::string& dst) const;

    const std::string& outcome() const { return outcome_; }
    // Empty string when no target role is assigned.
    const std::string& target() const { return target_; }

    // Direct parents/children, sorted by name.
    std::vector<std::string> parents(const std::string& name) const;
    std::vector<std::string> children(const std::string& name) const;

    // Returns a copy with the target role moved to `name` (previous target
    // becomes a plain feature). Role assignment is rebindable per audit run.
    CausalGraph with_target(const std::string& name) const;

    // All nodes reachable from `name` through directed edges (excludes `name`).
    std::set<std::string> descendants(const std::string& name) const;

private:
    std::vector<NodeSpec> nodes_;
    std::vector<Edge> edges_;
    std::string outcome_;
    std::string target_;

    void validate();
};

// Simple directed routes target -> outcome plus the union of their edges.
struct PathSet {
    std::vector<std::vector<std::string>> paths;
    std::set<Edge> active_edges;
};

// "Z->BMI->Y" style label (unicode arrow, matches report rendering).
std::string path_label(const std::vector<std::string>& path);

// Parses and validates the JSON graph file format:
//   {"nodes":[{"name","role","kind"}...], "edges":[["src","dst"]...]}
// Roles default to "feature", kinds to "continuous".
CausalGraph parse_graph(const std::string& text);
CausalGraph load_graph(const std::string& path);
std::string graph_to_json(const CausalGraph& graph);

// Kahn's algorithm; ties broken by node-name lexicographic order, so the
// result is deterministic.
std::vector<std::string> topological_order(const CausalGraph& graph);

// All simple directed paths target -> outcome with at most max_length edges,
// sorted by (length, lexicographic node names). Empty set when no path exists.
PathSet enumerate_paths(const CausalGraph& graph, std::size_t max_length = 4);

// Top-k paths ranked by proxy strength: the product over consecutive
// feature-feature pairs of |Pearson correlation| on `data` (pairs touching
// the outcome node are skipped; a direct path scores the empty product 1).
// Ties broken lexicographically by path label.
struct RankedPath {
    std::vector<std::string> path;
    double strength = 0.0;
};
std::vector<RankedPath> prioritize_paths(const PathSet& paths, const Dataset& data,
                                         const CausalGraph& graph, std::size_t k);

double pearson(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace causalfuzz
