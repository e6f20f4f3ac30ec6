#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "cxgnn/error.hpp"
#include "cxgnn/graph.hpp"
#include "cxgnn/rng.hpp"

namespace cxgnn {

enum class MotifKind { House, Grid, Cycle };

struct BarabasiAlbert {
    std::size_t n = 7;
    std::size_t m = 1;
    bool operator==(const BarabasiAlbert&) const = default;
};

struct BalancedBinaryTree {
    std::size_t depth = 2;
    bool operator==(const BalancedBinaryTree&) const = default;
};

using BaseKind = std::variant<BarabasiAlbert, BalancedBinaryTree>;

struct SyntheticSpec {
    BaseKind base;
    MotifKind motif = MotifKind::House;
    std::uint64_t seed = 0;
    std::size_t count = 1;
};

namespace detail {

inline Graph unlabeled(std::size_t n, std::vector<Edge> edges, Label y, bool gt_all) {
    std::vector<NodeId> gt;
    if (gt_all)
        for (std::size_t i = 0; i < n; ++i) gt.push_back(node_id(i));
    return Graph(n, std::vector<Label>(n, y), std::move(edges), std::move(gt));
}

inline Edge e(std::size_t a, std::size_t b) { return Edge(node_id(a), node_id(b)); }

} // namespace detail

// House: square 0-1-2-3 with apex 4 on edge 0-1.
inline Graph gen_motif(MotifKind kind) {
    using detail::e;
    std::vector<Edge> edges;
    std::size_t n = 0;
    switch (kind) {
    case MotifKind::House:
        n = 5;
        edges = {e(0, 1), e(1, 2), e(2, 3), e(3, 0), e(0, 4), e(1, 4)};
        break;
    case MotifKind::Grid:
        n = 9;
        for (std::size_t r = 0; r < 3; ++r)
            for (std::size_t c = 0; c < 3; ++c) {
                if (c + 1 < 3) edges.push_back(e(3 * r + c, 3 * r + c + 1));
                if (r + 1 < 3) edges.push_back(e(3 * r + c, 3 * (r + 1) + c));
            }
        break;
    case MotifKind::Cycle:
        n = 6;
        for (std::size_t i = 0; i < n; ++i) edges.push_back(e(i, (i + 1) % n));
        break;
    }
    return detail::unlabeled(n, std::move(edges), 1, true);
}

// Barabasi-Albert: seed clique on m nodes, then each new node attaches to m
// distinct existing nodes with probability proportional to degree (uniform
// while all candidate degrees are zero).
inline Graph gen_barabasi_albert(std::size_t n, std::size_t m, std::uint64_t seed) {
    if (m < 1 || n < m) throw InputError("Barabasi-Albert needs n >= m >= 1");
    std::mt19937_64 rng(seed);
    std::vector<Edge> edges;
    std::vector<std::size_t> deg(n, 0);
    auto link = [&](std::size_t a, std::size_t b) {
        edges.push_back(detail::e(a, b));
        ++deg[a];
        ++deg[b];
    };
    for (std::size_t a = 0; a < m; ++a)
        for (std::size_t b = a + 1; b < m; ++b) link(a, b);
    for (std::size_t t = m; t < n; ++t) {
        std::vector<double> w(t);
        for (std::size_t i = 0; i < t; ++i) w[i] = static_cast<double>(deg[i]);
        std::vector<bool> taken(t, false);
        std::vector<std::size_t> targets;
        for (std::size_t k = 0; k < m; ++k) {
            double total = 0.0;
            std::size_t free = 0;
            for (std::size_t i = 0; i < t; ++i)
                if (!taken[i]) {
                    total += w[i];
                    ++free;
                }
            std::size_t pick = t;
            if (total > 0.0) {
                double r = std::uniform_real_distribution<double>(0.0, total)(rng);
                for (std::size_t i = 0; i < t; ++i) {
                    if (taken[i] || w[i] == 0.0) continue;
                    pick = i;
                    if ((r -= w[i]) < 0.0) break;
                }
            } else {
                auto r = std::uniform_int_distribution<std::size_t>(0, free - 1)(rng);
                for (std::size_t i = 0; i < t; ++i)
                    if (!taken[i] && r-- == 0) {
                        pick = i;
                        break;
                    }
            }
            taken[pick] = true;
            targets.push_back(pick);
        }
        for (auto target : targets) link(t, target);
    }
    return detail::unlabeled(n, std::move(edges), 0, false);
}

inline Graph gen_balanced_tree(std::size_t depth) {
    if (depth < 1) throw InputError("tree depth must be >= 1");
    if (depth > 20) throw InputError("tree depth too large");
    const std::size_t n = (std::size_t{1} << (depth + 1)) - 1;
    std::vector<Edge> edges;
    for (std::size_t i = 1; i < n; ++i) edges.push_back(detail::e(i, (i - 1) / 2));
    return detail::unlabeled(n, std::move(edges), 0, false);
}

inline Graph gen_base(const BaseKind& kind, std::uint64_t seed) {
    if (auto* ba = std::get_if<BarabasiAlbert>(&kind)) return gen_barabasi_albert(ba->n, ba->m, seed);
    return gen_balanced_tree(std::get<BalancedBinaryTree>(kind).depth);
}

inline Graph attach_motif(const Graph& base, const Graph& motif, std::uint64_t seed) {
    if (base.num_nodes() == 0 || motif.num_nodes() == 0) throw InputError("base and motif must be non-empty");
    const std::size_t nb = base.num_nodes(), nm = motif.num_nodes();
    std::mt19937_64 rng(seed);
    const auto b = std::uniform_int_distribution<std::size_t>(0, nb - 1)(rng);
    const auto m = std::uniform_int_distribution<std::size_t>(0, nm - 1)(rng);
    std::vector<Edge> edges = base.edges();
    for (const Edge& x : motif.edges()) edges.emplace_back(node_id(index(x.u) + nb), node_id(index(x.v) + nb));
    edges.emplace_back(node_id(b), node_id(nb + m));
    std::vector<Label> labels(nb, 0);
    labels.resize(nb + nm, 1);
    std::vector<NodeId> gt;
    for (std::size_t i = 0; i < nm; ++i) gt.push_back(node_id(nb + i));
    return Graph(nb + nm, std::move(labels), std::move(edges), std::move(gt));
}

inline std::vector<Graph> gen_dataset(const SyntheticSpec& spec) {
    if (spec.count < 1) throw InputError("dataset count must be >= 1");
    const Graph motif = gen_motif(spec.motif);
    std::vector<Graph> out;
    out.reserve(spec.count);
    for (std::size_t i = 0; i < spec.count; ++i) {
        const auto s = derive_seed(spec.seed, i);
        out.push_back(attach_motif(gen_base(spec.base, derive_seed(s, 1)), motif, derive_seed(s, 2)));
    }
    return out;
}

struct DatasetPreset {
    std::string_view name;
    BaseKind base;
    MotifKind motif;
};

// Base sizes calibrated against the benchmark node/edge statistics.
inline const std::vector<DatasetPreset>& dataset_presets() {
    static const std::vector<DatasetPreset> presets{
        {"ba-house", BarabasiAlbert{7, 2}, MotifKind::House},
        {"ba-grid", BarabasiAlbert{7, 2}, MotifKind::Grid},
        {"ba-cycle", BarabasiAlbert{4, 1}, MotifKind::Cycle},
        {"tree-house", BalancedBinaryTree{2}, MotifKind::House},
        {"tree-cycle", BalancedBinaryTree{2}, MotifKind::Cycle},
        {"tree-grid", BalancedBinaryTree{3}, MotifKind::Grid},
    };
    return presets;
}

inline SyntheticSpec preset_spec(std::string_view name, std::uint64_t seed, std::size_t count) {
    for (const auto& p : dataset_presets())
        if (p.name == name) return {p.base, p.motif, seed, count};
    throw InputError("unknown dataset " + std::string(name));
}

} // namespace cxgnn
