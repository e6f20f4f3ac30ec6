#include <gtest/gtest.h>

#include <filesystem>
#include <numeric>

#include "cxgnn/datasets.hpp"
#include "cxgnn/io.hpp"

using namespace cxgnn;

namespace {

std::vector<std::size_t> degrees(const Graph& g) {
    std::vector<std::size_t> d;
    for (std::size_t v = 0; v < g.num_nodes(); ++v) d.push_back(g.degree(node_id(v)));
    return d;
}

bool connected(const Graph& g) {
    if (g.num_nodes() == 0) return true;
    const auto d = bfs_distances(g, NodeId{0});
    return std::all_of(d.begin(), d.end(), [](int x) { return x >= 0; });
}

// Exhaustive permutation search; fine for motif sizes.
bool isomorphic(const Graph& a, const Graph& b) {
    if (a.num_nodes() != b.num_nodes() || a.num_edges() != b.num_edges()) return false;
    auto da = degrees(a), db = degrees(b);
    std::sort(da.begin(), da.end());
    std::sort(db.begin(), db.end());
    if (da != db) return false;
    std::vector<std::size_t> perm(a.num_nodes());
    std::iota(perm.begin(), perm.end(), 0);
    do {
        bool ok = true;
        for (const Edge& e : a.edges())
            if (!b.has_edge(node_id(perm[index(e.u)]), node_id(perm[index(e.v)]))) {
                ok = false;
                break;
            }
        if (ok) return true;
    } while (std::next_permutation(perm.begin(), perm.end()));
    return false;
}

double mean_nodes(const std::vector<Graph>& gs) {
    double s = 0;
    for (const auto& g : gs) s += static_cast<double>(g.num_nodes());
    return s / static_cast<double>(gs.size());
}

} // namespace

TEST(Motif, House) {
    const auto g = gen_motif(MotifKind::House);
    EXPECT_EQ(g.num_nodes(), 5u);
    EXPECT_EQ(g.num_edges(), 6u);
    auto d = degrees(g);
    std::sort(d.begin(), d.end());
    EXPECT_EQ(d, (std::vector<std::size_t>{2, 2, 2, 3, 3}));
    EXPECT_EQ(g.groundtruth().size(), 5u);
    for (Label y : g.labels()) EXPECT_EQ(y, 1);
}

TEST(Motif, Cycle) {
    const auto g = gen_motif(MotifKind::Cycle);
    EXPECT_EQ(g.num_nodes(), 6u);
    EXPECT_EQ(g.num_edges(), 6u);
    for (auto d : degrees(g)) EXPECT_EQ(d, 2u);
}

TEST(Motif, Grid) {
    const auto g = gen_motif(MotifKind::Grid);
    EXPECT_EQ(g.num_nodes(), 9u);
    EXPECT_EQ(g.num_edges(), 12u);
    EXPECT_EQ(g.degree(NodeId{0}), 2u);
    EXPECT_EQ(g.degree(NodeId{8}), 2u);
    EXPECT_EQ(g.degree(NodeId{4}), 4u);
}

TEST(Base, BalancedTreeDepthTwo) {
    const auto g = gen_base(BalancedBinaryTree{2}, 0);
    EXPECT_EQ(g.num_nodes(), 7u);
    EXPECT_EQ(g.num_edges(), 6u);
    EXPECT_TRUE(g.groundtruth().empty());
    for (Label y : g.labels()) EXPECT_EQ(y, 0);
}

TEST(Base, BarabasiAlbertTreeShaped) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto g = gen_base(BarabasiAlbert{7, 1}, seed);
        EXPECT_EQ(g.num_nodes(), 7u);
        EXPECT_EQ(g.num_edges(), 6u);
        EXPECT_TRUE(connected(g));
    }
}

TEST(Base, BarabasiAlbertEdgeCount) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto g = gen_base(BarabasiAlbert{10, 2}, seed);
        EXPECT_EQ(g.num_nodes(), 10u);
        EXPECT_EQ(g.num_edges(), 17u);
        EXPECT_TRUE(connected(g));
    }
}

TEST(Base, InvalidParametersAreInputErrors) {
    EXPECT_THROW(gen_base(BarabasiAlbert{3, 0}, 0), InputError);
    EXPECT_THROW(gen_base(BarabasiAlbert{2, 3}, 0), InputError);
    EXPECT_THROW(gen_base(BalancedBinaryTree{0}, 0), InputError);
}

TEST(Attach, CountsAndLabels) {
    const auto base = gen_base(BarabasiAlbert{7, 1}, 3);
    const auto motif = gen_motif(MotifKind::House);
    const auto g = attach_motif(base, motif, 11);
    EXPECT_EQ(g.num_nodes(), 12u);
    EXPECT_EQ(g.num_edges(), base.num_edges() + motif.num_edges() + 1);
    for (std::size_t v = 0; v < 12; ++v) {
        EXPECT_EQ(g.label(node_id(v)), v >= 7 ? 1 : 0);
        EXPECT_EQ(g.in_groundtruth(node_id(v)), v >= 7);
    }
    std::size_t bridges = 0;
    for (const Edge& e : g.edges()) bridges += (index(e.u) < 7) != (index(e.v) < 7);
    EXPECT_EQ(bridges, 1u);
}

TEST(Dataset, TreeHouseIsAlwaysTwelveNodes) {
    for (const auto& g : gen_dataset(preset_spec("tree-house", 1, 50))) EXPECT_EQ(g.num_nodes(), 12u);
}

TEST(Dataset, CountAndDeterminism) {
    const auto a = gen_dataset(preset_spec("ba-house", 7, 500));
    EXPECT_EQ(a.size(), 500u);
    EXPECT_EQ(a, gen_dataset(preset_spec("ba-house", 7, 500)));
    EXPECT_NE(a, gen_dataset(preset_spec("ba-house", 8, 500)));
    EXPECT_THROW(gen_dataset(preset_spec("ba-house", 7, 0)), InputError);
    EXPECT_THROW(preset_spec("ba-star", 7, 1), InputError);
}

TEST(Dataset, PresetMeanNodeCounts) {
    const std::vector<std::pair<std::string, double>> expected{
        {"ba-house", 12}, {"ba-grid", 16}, {"ba-cycle", 10}, {"tree-house", 12}, {"tree-cycle", 13}, {"tree-grid", 24}};
    for (const auto& [name, mean] : expected) {
        const auto gs = gen_dataset(preset_spec(name, 0, 500));
        EXPECT_NEAR(mean_nodes(gs), mean, 2.0) << name;
    }
    const auto grid = gen_dataset(preset_spec("ba-grid", 0, 500));
    EXPECT_GE(mean_nodes(grid), 14.0);
    EXPECT_LE(mean_nodes(grid), 18.0);
}

TEST(DatasetProperties, ConnectedMaskedAndMotifIsomorphic) {
    for (const auto& preset : dataset_presets()) {
        const auto motif = gen_motif(preset.motif);
        for (const auto& g : gen_dataset(preset_spec(preset.name, 42, 30))) {
            EXPECT_TRUE(connected(g)) << preset.name;
            const auto& gt = g.groundtruth();
            ASSERT_EQ(gt.size(), motif.num_nodes());
            for (std::size_t v = 0; v < g.num_nodes(); ++v)
                EXPECT_EQ(g.label(node_id(v)), g.in_groundtruth(node_id(v)) ? 1 : 0);
            EXPECT_TRUE(isomorphic(induced_subgraph(g, gt).graph, motif)) << preset.name;
        }
    }
}

TEST(Isomorphism, DistinguishesMotifs) {
    EXPECT_TRUE(isomorphic(gen_motif(MotifKind::House), gen_motif(MotifKind::House)));
    EXPECT_FALSE(isomorphic(gen_motif(MotifKind::Cycle), gen_motif(MotifKind::House)));
    // same degree sequence as a 6-cycle, different graph
    const Graph two_triangles(6, std::vector<Label>(6, 1),
                              {Edge(NodeId{0}, NodeId{1}), Edge(NodeId{1}, NodeId{2}), Edge(NodeId{0}, NodeId{2}),
                               Edge(NodeId{3}, NodeId{4}), Edge(NodeId{4}, NodeId{5}), Edge(NodeId{3}, NodeId{5})});
    EXPECT_FALSE(isomorphic(two_triangles, gen_motif(MotifKind::Cycle)));
}

TEST(LoadGraphs, RoundTrip) {
    const auto path = std::filesystem::temp_directory_path() / "cxgnn_test_datasets" / "round_trip.json";
    const auto gs = gen_dataset(preset_spec("tree-grid", 3, 10));
    save_graphs(path, gs);
    EXPECT_EQ(load_graphs(path), gs);
    std::filesystem::remove_all(path.parent_path());
}

TEST(LoadGraphs, BenzeneStyleRingMask) {
    // 20-node molecule: 6-atom ring 0..5 with a 14-atom chain hanging off atom 0
    nlohmann::json g{{"num_nodes", 20}};
    std::vector<int> labels(20, 0);
    nlohmann::json edges = nlohmann::json::array();
    for (int i = 0; i < 6; ++i) {
        edges.push_back({i, (i + 1) % 6});
        labels[i] = 1;
    }
    edges.push_back({0, 6});
    for (int i = 6; i < 19; ++i) edges.push_back({i, i + 1});
    g["labels"] = labels;
    g["edges"] = edges;
    g["groundtruth"] = {0, 1, 2, 3, 4, 5};
    const auto path = std::filesystem::temp_directory_path() / "cxgnn_test_benzene.json";
    write_file(path, dump({{"graphs", {g}}}));
    const auto loaded = load_graphs(path);
    std::filesystem::remove(path);
    ASSERT_EQ(loaded.size(), 1u);
    EXPECT_EQ(loaded[0].num_nodes(), 20u);
    EXPECT_EQ(loaded[0].groundtruth().size(), 6u);
}
