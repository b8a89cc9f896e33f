#include "causalfuzz/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <queue>
#include <sstream>

#include <json.hpp>

#include "causalfuzz/errors.hpp"

namespace causalfuzz {

namespace {

std::string role_name(NodeRole role) {
    switch (role) {
        case NodeRole::target: return "target";
        case NodeRole::outcome: return "outcome";
        default: return "feature";
    }
}

NodeRole role_from(const std::string& s) {
    if (s == "target") return NodeRole::target;
    if (s == "outcome") return NodeRole::outcome;
    if (s == "feature") return NodeRole::feature;
    throw ConfigError("unknown node role: " + s);
}

ColumnKind kind_from(const std::string& s) {
    if (s == "continuous") return ColumnKind::continuous;
    if (s == "binary") return ColumnKind::binary;
    throw ConfigError("unknown node kind: " + s);
}

// Reports one offending cycle by walking the gray stack.
std::vector<std::string> find_cycle(const std::vector<NodeSpec>& nodes,
                                    const std::map<std::string, std::vector<std::string>>& adj) {
    std::map<std::string, int> color;  // 0 white, 1 gray, 2 black
    std::vector<std::string> stack;
    std::vector<std::string> cycle;

    std::function<bool(const std::string&)> visit = [&](const std::string& u) {
        color[u] = 1;
        stack.push_back(u);
        auto it = adj.find(u);
        if (it != adj.end()) {
            for (const auto& v : it->second) {
                if (color[v] == 1) {
                    auto pos = std::find(stack.begin(), stack.end(), v);
                    cycle.assign(pos, stack.end());
                    return true;
                }
                if (color[v] == 0 && visit(v)) return true;
            }
        }
        stack.pop_back();
        color[u] = 2;
        return false;
    };

    for (const auto& n : nodes) {
        if (color[n.name] == 0 && visit(n.name)) return cycle;
    }
    return {};
}

}  // namespace

CausalGraph::CausalGraph(std::vector<NodeSpec> nodes, std::vector<Edge> edges)
    : nodes_(std::move(nodes)), edges_(std::move(edges)) {
    validate();
}

void CausalGraph::validate() {
    std::set<std::string> names;
    std::size_t n_outcome = 0;
    std::size_t n_target = 0;
    for (const auto& n : nodes_) {
        if (!names.insert(n.name).second) {
            throw ConfigError("duplicate node: " + n.name);
        }
        if (n.role == NodeRole::outcome) {
            ++n_outcome;
            outcome_ = n.name;
        }
        if (n.role == NodeRole::target) {
            ++n_target;
            target_ = n.name;
        }
    }
    if (n_outcome != 1) {
        throw ConfigError("graph must have exactly one outcome node, found " +
                          std::to_string(n_outcome));
    }
    if (n_target > 1) {
        throw ConfigError("graph may have at most one target node, found " +
                          std::to_string(n_target));
    }
    std::set<Edge> seen;
    for (const auto& [src, dst] : edges_) {
        if (!names.count(src)) throw ConfigError("unknown edge endpoint: " + src);
        if (!names.count(dst)) throw ConfigError("unknown edge endpoint: " + dst);
        if (src == dst) throw ConfigError("self-loop on node: " + src);
        if (!seen.insert({src, dst}).second) {
            throw ConfigError("duplicate edge: " + src + " -> " + dst);
        }
        if (src == outcome_) {
            throw ConfigError("outcome node '" + outcome_ + "' must have no outgoing edges");
        }
    }
    std::map<std::string, std::vector<std::string>> adj;
    for (const auto& [src, dst] : edges_) adj[src].push_back(dst);
    auto cycle = find_cycle(nodes_, adj);
    if (!cycle.empty()) {
        std::string desc;
        for (const auto& n : cycle) {
            if (!desc.empty()) desc += " -> ";
            desc += n;
        }
        throw ConfigError("cycle detected: " + desc + " -> " + cycle.front());
    }
}

bool CausalGraph::has_node(const std::string& name) const {
    return std::any_of(nodes_.begin(), nodes_.end(),
                       [&](const NodeSpec& n) { return n.name == name; });
}

const NodeSpec& CausalGraph::node(const std::string& name) const {
    for (const auto& n : nodes_) {
        if (n.name == name) return n;
    }
    throw ConfigError("unknown node: " + name);
}

bool CausalGraph::has_edge(const std::string& src, const std::string& dst) const {
    return std::any_of(edges_.begin(), edges_.end(),
                       [&](const Edge& e) { return e.first == src && e.second == dst; });
}

std::vector<std::string> CausalGraph::parents(const std::string& name) const {
    std::vector<std::string> out;
    for (const auto& [src, dst] : edges_) {
        if (dst == name) out.push_back(src);
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<std::string> CausalGraph::children(const std::string& name) const {
    std::vector<std::string> out;
    for (const auto& [src, dst] : edges_) {
        if (src == name) out.push_back(dst);
    }
    std::sort(out.begin(), out.end());
    return out;
}

CausalGraph CausalGraph::with_target(const std::string& name) const {
    if (!has_node(name)) throw ConfigError("unknown target node: " + name);
    if (node(name).role == NodeRole::outcome) {
        throw ConfigError("target cannot be the outcome node: " + name);
    }
    std::vector<NodeSpec> nodes = nodes_;
    for (auto& n : nodes) {
        if (n.role == NodeRole::target) n.role = NodeRole::feature;
        if (n.name == name) n.role = NodeRole::target;
    }
    return CausalGraph(std::move(nodes), edges_);
}

std::set<std::string> CausalGraph::descendants(const std::string& name) const {
    std::set<std::string> out;
    std::vector<std::string> frontier{name};
    while (!frontier.empty()) {
        std::string u = frontier.back();
        frontier.pop_back();
        for (const auto& [src, dst] : edges_) {
            if (src == u && out.insert(dst).second) frontier.push_back(dst);
        }
    }
    return out;
}

std::string path_label(const std::vector<std::string>& path) {
    std::string out;
    for (const auto& n : path) {
        if (!out.empty()) out += "→";
        out += n;
    }
    return out;
}

CausalGraph parse_graph(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        // e.byte gives the offset of the offending character
        throw ConfigError("graph file syntax error at byte " + std::to_string(e.byte) + ": " +
                          e.what());
    }
    if (!j.is_object() || !j.contains("nodes") || !j["nodes"].is_array()) {
        throw ConfigError("graph file must contain a \"nodes\" array");
    }
    std::vector<NodeSpec> nodes;
    for (const auto& n : j["nodes"]) {
        if (!n.is_object() || !n.contains("name") || !n["name"].is_string()) {
            throw ConfigError("each node needs a string \"name\"");
        }
        NodeSpec spec;
        spec.name = n["name"].get<std::string>();
        spec.role = n.contains("role") ? role_from(n["role"].get<std::string>())
                                       : NodeRole::feature;
        spec.kind = n.contains("kind") ? kind_from(n["kind"].get<std::string>())
                                       : ColumnKind::continuous;
        nodes.push_back(std::move(spec));
    }
    std::vector<Edge> edges;
    if (j.contains("edges")) {
        if (!j["edges"].is_array()) throw ConfigError("\"edges\" must be an array");
        for (const auto& e : j["edges"]) {
            if (!e.is_array() || e.size() != 2 || !e[0].is_string() || !e[1].is_string()) {
                throw ConfigError("each edge must be a [\"src\",\"dst\"] pair");
            }
            edges.push_back({e[0].get<std::string>(), e[1].get<std::string>()});
        }
    }
    return CausalGraph(std::move(nodes), std::move(edges));
}

CausalGraph load_graph(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open graph file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_graph(buf.str());
}

std::string graph_to_json(const CausalGraph& graph) {
    nlohmann::ordered_json j;
    j["nodes"] = nlohmann::ordered_json::array();
    for (const auto& n : graph.nodes()) {
        nlohmann::ordered_json node;
        node["name"] = n.name;
        node["role"] = role_name(n.role);
        node["kind"] = n.kind == ColumnKind::binary ? "binary" : "continuous";
        j["nodes"].push_back(node);
    }
    j["edges"] = nlohmann::ordered_json::array();
    for (const auto& [src, dst] : graph.edges()) {
        j["edges"].push_back({src, dst});
    }
    return j.dump(2) + "\n";
}

std::vector<std::string> topological_order(const CausalGraph& graph) {
    std::map<std::string, std::size_t> indegree;
    std::map<std::string, std::vector<std::string>> adj;
    for (const auto& n : graph.nodes()) indegree[n.name] = 0;
    for (const auto& [src, dst] : graph.edges()) {
        adj[src].push_back(dst);
        ++indegree[dst];
    }
    // min-heap on names: lexicographic tie-break makes the order unique
    std::priority_queue<std::string, std::vector<std::string>, std::greater<>> ready;
    for (const auto& [name, deg] : indegree) {
        if (deg == 0) ready.push(name);
    }
    std::vector<std::string> order;
    order.reserve(indegree.size());
    while (!ready.empty()) {
        std::string u = ready.top();
        ready.pop();
        order.push_back(u);
        for (const auto& v : adj[u]) {
            if (--indegree[v] == 0) ready.push(v);
        }
    }
    return order;
}

PathSet enumerate_paths(const CausalGraph& graph, std::size_t max_length) {
    PathSet out;
    if (graph.target().empty()) {
        throw ConfigError("target role not assigned");
    }
    const std::string& target = graph.target();
    const std::string& outcome = graph.outcome();

    std::map<std::string, std::vector<std::string>> adj;
    for (const auto& [src, dst] : graph.edges()) adj[src].push_back(dst);
    for (auto& [_, ch] : adj) std::sort(ch.begin(), ch.end());

    std::vector<std::string> current{target};
    std::set<std::string> on_path{target};
    std::function<void()> dfs = [&]() {
        const std::string& u = current.back();
        if (u == outcome) {
            out.paths.push_back(current);
            return;
        }
        if (current.size() > max_length) return;  // size-1 edges used so far
        for (const auto& v : adj[u]) {
            if (on_path.count(v)) continue;
            current.push_back(v);
            on_path.insert(v);
            dfs();
            current.pop_back();
            on_path.erase(v);
        }
    };
    dfs();

    std::sort(out.paths.begin(), out.paths.end(),
              [](const std::vector<std::string>& a, const std::vector<std::string>& b) {
                  if (a.size() != b.size()) return a.size() < b.size();
                  return a < b;
              });
    for (const auto& path : out.paths) {
        for (std::size_t i = 0; i + 1 < path.size(); ++i) {
            out.active_edges.insert({path[i], path[i + 1]});
        }
    }
    return out;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size() || a.empty()) {
        throw ConfigError("pearson: column length mismatch");
    }
    double n = static_cast<double>(a.size());
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double da = a[i] - ma;
        double db = b[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if (saa == 0.0 || sbb == 0.0) return 0.0;  // constant column carries no signal
    return sab / std::sqrt(saa * sbb);
}

std::vector<RankedPath> prioritize_paths(const PathSet& paths, const Dataset& data,
                                         const CausalGraph& graph, std::size_t k) {
    if (k == 0) throw ConfigError("prioritize_paths: k must be positive");
    const std::string& outcome = graph.outcome();

    std::map<std::string, std::vector<double>> columns;
    auto column_of = [&](const std::string& name) -> const std::vector<double>& {
        auto it = columns.find(name);
        if (it == columns.end()) {
            it = columns.emplace(name, data.column(name)).first;
        }
        return it->second;
    };

    std::vector<RankedPath> ranked;
    ranked.reserve(paths.paths.size());
    for (const auto& path : paths.paths) {
        double strength = 1.0;
        for (std::size_t i = 0; i + 1 < path.size(); ++i) {
            if (path[i] == outcome || path[i + 1] == outcome) continue;
            strength *= std::fabs(pearson(column_of(path[i]), column_of(path[i + 1])));
        }
        ranked.push_back({path, strength});
    }
    std::sort(ranked.begin(), ranked.end(), [](const RankedPath& a, const RankedPath& b) {
        if (a.strength != b.strength) return a.strength > b.strength;
        return path_label(a.path) < path_label(b.path);
    });
    if (ranked.size() > k) ranked.resize(k);
    return ranked;
}

}  // namespace causalfuzz
