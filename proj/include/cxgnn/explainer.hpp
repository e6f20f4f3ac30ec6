#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "cxgnn/error.hpp"
#include "cxgnn/graph.hpp"
#include "cxgnn/ncm.hpp"
#include "cxgnn/parallel.hpp"
#include "cxgnn/rng.hpp"

namespace cxgnn {

struct ExplainConfig {
    int hop = 2;
    TrainConfig train;
    MlpConfig mlp;
    double expressivity_threshold = 0.0; // recorded only
    Label target_label = 1;              // class being explained
    std::size_t workers = 1;

    void validate() const {
        if (hop < 1) throw InputError("hop must be >= 1");
        train.validate();
        mlp.validate();
    }
};

struct NodeScore {
    NodeId node{};
    std::optional<double> expressivity; // present iff trained
    double final_loss = 0.0;
    bool trained = false;

    bool operator==(const NodeScore&) const = default;
};

struct ExplanationResult {
    NodeId winner{};
    Subgraph subgraph;
    std::vector<NodeScore> scores;                  // ascending NodeId
    std::map<NodeId, std::vector<double>> traces;   // trained nodes only
    ExplainConfig config;
};

// sum_y y * p(y); binary labels reduce to p(1).
inline double node_expressivity(const NcmModel& m, std::span<const LatentSample> samples,
                                const LabelDomain& domain = {}) {
    double e = 0.0;
    for (Label y : domain.values)
        if (y != 0) e += static_cast<double>(y) * label_prob(m, y, samples);
    return e;
}

inline std::uint64_t node_seed(std::uint64_t graph_seed, NodeId v) { return derive_seed(graph_seed, index(v)); }

// Trains one NCM for reference v and scores it.
inline std::pair<NodeScore, std::vector<double>> score_node(const Graph& g, NodeId v, const ExplainConfig& cfg) {
    const auto cs = build_causal_structure(g, v, cfg.hop);
    NodeScore s{v, std::nullopt, 0.0, false};
    if (cs.degenerate()) return {s, {}};
    TrainConfig tc = cfg.train;
    tc.seed = node_seed(cfg.train.seed, v);
    auto r = train_ncm(cs, cfg.target_label, tc, cfg.mlp);
    const auto eval = sample_latents(cs, derive_seed(tc.seed, stream::eval), tc.mc_samples);
    s.expressivity = node_expressivity(r.model, eval);
    s.final_loss = r.loss_trace.back();
    s.trained = true;
    return {s, std::move(r.loss_trace)};
}

// Higher expressivity, then lower final loss, then lower id.
inline bool better(const NodeScore& a, const NodeScore& b) {
    if (*a.expressivity != *b.expressivity) return *a.expressivity > *b.expressivity;
    if (a.final_loss != b.final_loss) return a.final_loss < b.final_loss;
    return a.node < b.node;
}

inline ExplanationResult explain_graph(const Graph& g, const ExplainConfig& cfg) {
    cfg.validate();
    if (g.num_nodes() == 0) throw InputError("cannot explain an empty graph");
    const std::size_t n = g.num_nodes();
    std::vector<std::pair<NodeScore, std::vector<double>>> per(n);
    parallel_for(n, cfg.workers, [&](std::size_t i) { per[i] = score_node(g, node_id(i), cfg); });

    ExplanationResult r;
    r.config = cfg;
    const NodeScore* best = nullptr;
    for (auto& [s, trace] : per) {
        r.scores.push_back(s);
        if (s.trained) r.traces.emplace(s.node, std::move(trace));
    }
    for (const auto& s : r.scores)
        if (s.trained && (!best || better(s, *best))) best = &s;
    if (!best) throw ExplanationFailedError("no node has a one-hop neighbour; nothing to train");
    r.winner = best->node;
    auto nodes = k_hop_neighbors(g, r.winner, cfg.hop);
    nodes.push_back(r.winner);
    r.subgraph = induced_subgraph(g, std::move(nodes));
    return r;
}

struct HistogramRow {
    NodeId node{};
    double expressivity = 0.0;
    bool in_groundtruth = false;
};

inline std::vector<HistogramRow> expressivity_histogram(const ExplanationResult& r, const Graph& g) {
    if (!g.has_groundtruth()) throw InputError("expressivity histogram needs a groundtruth mask");
    std::vector<HistogramRow> rows;
    for (const auto& s : r.scores)
        if (s.trained) rows.push_back({s.node, *s.expressivity, g.in_groundtruth(s.node)});
    std::stable_sort(rows.begin(), rows.end(),
                     [](const HistogramRow& a, const HistogramRow& b) { return a.expressivity > b.expressivity; });
    return rows;
}

} // namespace cxgnn
