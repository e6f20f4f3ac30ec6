#pragma once

#include <algorithm>
#include <compare>
#include <cstdint>
#include <optional>
#include <queue>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cxgnn/error.hpp"

namespace cxgnn {

enum class NodeId : std::uint32_t {};

constexpr std::size_t index(NodeId v) noexcept { return static_cast<std::size_t>(v); }
constexpr NodeId node_id(std::size_t i) noexcept { return static_cast<NodeId>(i); }

using Label = int;

struct LabelDomain {
    std::vector<Label> values{0, 1};

    bool contains(Label y) const { return std::find(values.begin(), values.end(), y) != values.end(); }
    bool is_binary() const { return values == std::vector<Label>{0, 1}; }
};

// Undirected edge, stored with u < v.
struct Edge {
    NodeId u{};
    NodeId v{};

    Edge() = default;
    Edge(NodeId a, NodeId b) : u(std::min(a, b)), v(std::max(a, b)) {}

    bool touches(NodeId x) const { return u == x || v == x; }
    NodeId other(NodeId x) const { return x == u ? v : u; }
    auto operator<=>(const Edge&) const = default;
};

class Graph {
public:
    Graph() = default;

    Graph(std::size_t num_nodes, std::vector<Label> labels, std::vector<Edge> edges,
          std::optional<std::vector<NodeId>> groundtruth = std::nullopt,
          const LabelDomain& domain = {})
        : labels_(std::move(labels)), edges_(std::move(edges)), adj_(num_nodes) {
        if (labels_.size() != num_nodes)
            throw InputError("graph has " + std::to_string(num_nodes) + " nodes but " +
                             std::to_string(labels_.size()) + " labels");
        for (std::size_t i = 0; i < labels_.size(); ++i)
            if (!domain.contains(labels_[i]))
                throw InputError("label " + std::to_string(labels_[i]) + " of node " + std::to_string(i) +
                                 " is outside the label domain");
        for (const Edge& e : edges_) {
            if (index(e.v) >= num_nodes)
                throw InputError("edge endpoint " + std::to_string(index(e.v)) + " >= num_nodes " +
                                 std::to_string(num_nodes));
            if (e.u == e.v) throw InputError("self-loop on node " + std::to_string(index(e.u)));
        }
        std::sort(edges_.begin(), edges_.end());
        if (auto dup = std::adjacent_find(edges_.begin(), edges_.end()); dup != edges_.end())
            throw InputError("duplicate edge " + std::to_string(index(dup->u)) + "-" +
                             std::to_string(index(dup->v)));
        for (const Edge& e : edges_) {
            adj_[index(e.u)].push_back(e.v);
            adj_[index(e.v)].push_back(e.u);
        }
        for (auto& nb : adj_) std::sort(nb.begin(), nb.end());
        if (groundtruth) {
            auto gt = std::move(*groundtruth);
            std::sort(gt.begin(), gt.end());
            gt.erase(std::unique(gt.begin(), gt.end()), gt.end());
            for (NodeId v : gt)
                if (index(v) >= num_nodes)
                    throw InputError("groundtruth node " + std::to_string(index(v)) + " >= num_nodes");
            groundtruth_ = std::move(gt);
        }
    }

    std::size_t num_nodes() const { return labels_.size(); }
    std::size_t num_edges() const { return edges_.size(); }
    const std::vector<Edge>& edges() const { return edges_; }
    const std::vector<Label>& labels() const { return labels_; }

    Label label(NodeId v) const { return labels_.at(checked(v)); }
    std::span<const NodeId> neighbors(NodeId v) const { return adj_[checked(v)]; }
    std::size_t degree(NodeId v) const { return adj_[checked(v)].size(); }

    bool has_node(NodeId v) const { return index(v) < num_nodes(); }
    bool has_edge(NodeId a, NodeId b) const {
        if (!has_node(a) || !has_node(b)) return false;
        const auto& nb = adj_[index(a)];
        return std::binary_search(nb.begin(), nb.end(), b);
    }

    bool has_groundtruth() const { return groundtruth_.has_value(); }
    const std::vector<NodeId>& groundtruth() const {
        if (!groundtruth_) throw InputError("graph has no groundtruth mask");
        return *groundtruth_;
    }
    const std::optional<std::vector<NodeId>>& groundtruth_mask() const { return groundtruth_; }
    bool in_groundtruth(NodeId v) const {
        return groundtruth_ && std::binary_search(groundtruth_->begin(), groundtruth_->end(), v);
    }

    bool operator==(const Graph& o) const {
        return labels_ == o.labels_ && edges_ == o.edges_ && groundtruth_ == o.groundtruth_;
    }

private:
    std::size_t checked(NodeId v) const {
        if (!has_node(v))
            throw InputError("node " + std::to_string(index(v)) + " not in graph of " +
                             std::to_string(num_nodes()) + " nodes");
        return index(v);
    }

    std::vector<Label> labels_;
    std::vector<Edge> edges_;
    std::vector<std::vector<NodeId>> adj_;
    std::optional<std::vector<NodeId>> groundtruth_;
};

// BFS distances from v, -1 for unreachable.
inline std::vector<int> bfs_distances(const Graph& g, NodeId v) {
    std::vector<int> dist(g.num_nodes(), -1);
    std::queue<NodeId> q;
    dist[index(v)] = 0;
    q.push(v);
    while (!q.empty()) {
        NodeId x = q.front();
        q.pop();
        for (NodeId y : g.neighbors(x))
            if (dist[index(y)] < 0) {
                dist[index(y)] = dist[index(x)] + 1;
                q.push(y);
            }
    }
    return dist;
}

inline std::vector<NodeId> k_hop_neighbors(const Graph& g, NodeId v, int k) {
    if (!g.has_node(v)) throw InputError("invalid node id " + std::to_string(index(v)));
    if (k < 1) throw InputError("hop must be >= 1");
    auto dist = bfs_distances(g, v);
    std::vector<NodeId> out;
    for (std::size_t i = 0; i < dist.size(); ++i)
        if (dist[i] >= 1 && dist[i] <= k) out.push_back(node_id(i));
    return out;
}

enum class LatentId : std::uint32_t {};

constexpr std::size_t index(LatentId l) noexcept { return static_cast<std::size_t>(l); }

struct EdgeEffect {
    LatentId id{};
    Edge edge;
    NodeId neighbor{}; // the non-reference endpoint

    bool operator==(const EdgeEffect&) const = default;
};

// Causal structure centred on a reference node. Node-effect latents take ids
// 0..|N|-1 in neighbourhood order; edge-effect latents follow, one per
// reference-incident edge, in ascending neighbour order.
struct CausalStructure {
    NodeId reference{};
    int hop = 2;
    std::vector<NodeId> neighborhood;
    std::vector<LatentId> node_effect_ids;
    std::vector<EdgeEffect> edge_effects;
    std::vector<int> distance;     // aligned with neighborhood
    Label reference_label = 0;
    std::vector<Label> observables; // labels aligned with neighborhood

    std::size_t num_latents() const { return node_effect_ids.size() + edge_effects.size(); }
    bool degenerate() const { return edge_effects.empty(); }

    // reference first, then neighbourhood
    std::vector<NodeId> nodes() const {
        std::vector<NodeId> out{reference};
        out.insert(out.end(), neighborhood.begin(), neighborhood.end());
        return out;
    }

    std::optional<std::size_t> position(NodeId v) const {
        auto it = std::lower_bound(neighborhood.begin(), neighborhood.end(), v);
        if (it == neighborhood.end() || *it != v) return std::nullopt;
        return static_cast<std::size_t>(it - neighborhood.begin());
    }

    bool is_one_hop(NodeId v) const {
        auto p = position(v);
        return p && distance[*p] == 1;
    }

    std::optional<LatentId> edge_effect_of(NodeId v) const {
        for (const auto& e : edge_effects)
            if (e.neighbor == v) return e.id;
        return std::nullopt;
    }

    std::vector<NodeId> one_hop() const {
        std::vector<NodeId> out;
        for (const auto& e : edge_effects) out.push_back(e.neighbor);
        return out;
    }

    bool operator==(const CausalStructure&) const = default;
};

inline CausalStructure build_causal_structure(const Graph& g, NodeId v, int k) {
    if (!g.has_node(v)) throw InputError("invalid node id " + std::to_string(index(v)));
    if (k < 1) throw InputError("hop must be >= 1");
    auto dist = bfs_distances(g, v);
    CausalStructure cs;
    cs.reference = v;
    cs.hop = k;
    cs.reference_label = g.label(v);
    for (std::size_t i = 0; i < dist.size(); ++i)
        if (dist[i] >= 1 && dist[i] <= k) {
            cs.neighborhood.push_back(node_id(i));
            cs.distance.push_back(dist[i]);
            cs.observables.push_back(g.label(node_id(i)));
        }
    std::uint32_t next = 0;
    for (std::size_t i = 0; i < cs.neighborhood.size(); ++i) cs.node_effect_ids.push_back(LatentId{next++});
    for (std::size_t i = 0; i < cs.neighborhood.size(); ++i)
        if (cs.distance[i] == 1)
            cs.edge_effects.push_back({LatentId{next++}, Edge(v, cs.neighborhood[i]), cs.neighborhood[i]});
    return cs;
}

// Node-induced subgraph, renumbered densely; nodes[i] is the original id of new node i.
struct Subgraph {
    Graph graph;
    std::vector<NodeId> nodes;

    bool operator==(const Subgraph&) const = default;
};

inline Subgraph induced_subgraph(const Graph& g, std::vector<NodeId> nodes) {
    std::sort(nodes.begin(), nodes.end());
    nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
    for (NodeId v : nodes)
        if (!g.has_node(v)) throw InputError("unknown node " + std::to_string(index(v)));
    auto local = [&](NodeId v) -> std::optional<NodeId> {
        auto it = std::lower_bound(nodes.begin(), nodes.end(), v);
        if (it == nodes.end() || *it != v) return std::nullopt;
        return node_id(static_cast<std::size_t>(it - nodes.begin()));
    };
    std::vector<Label> labels;
    std::optional<std::vector<NodeId>> gt;
    if (g.has_groundtruth()) gt.emplace();
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        labels.push_back(g.label(nodes[i]));
        if (gt && g.in_groundtruth(nodes[i])) gt->push_back(node_id(i));
    }
    std::vector<Edge> edges;
    for (const Edge& e : g.edges()) {
        auto a = local(e.u), b = local(e.v);
        if (a && b) edges.emplace_back(*a, *b);
    }
    LabelDomain domain;
    for (Label y : labels)
        if (!domain.contains(y)) domain.values.push_back(y);
    return {Graph(nodes.size(), std::move(labels), std::move(edges), std::move(gt), domain), std::move(nodes)};
}

// Spreadsheet-style names: 0 -> A, 25 -> Z, 26 -> AA.
inline std::string node_name(NodeId v) {
    std::string s;
    for (std::size_t n = index(v) + 1; n > 0; n = (n - 1) / 26)
        s.insert(s.begin(), static_cast<char>('A' + (n - 1) % 26));
    return s;
}

} // namespace cxgnn
