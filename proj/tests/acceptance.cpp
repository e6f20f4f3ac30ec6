// Acceptance harness: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <sys/wait.h>
#include <unistd.h>

#include <bit>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>

#include "cxgnn/cxgnn.hpp"
#include "toy_tables.hpp"

namespace fs = std::filesystem;
using namespace cxgnn;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    int id;
    std::string title;
    double budget_s; // runtime limit, 0 = none
    std::function<Outcome()> body;
};

std::string fmt(double x, int prec = 4) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(prec) << x;
    return os.str();
}

constexpr std::uint64_t acceptance_seed = 0;
constexpr std::size_t desk_graphs = 20;
constexpr NodeId A{0}, B{1}, C{2}, D{3};

// ---- shared desk runs ----

struct DeskRun {
    std::vector<Graph> graphs;
    std::vector<ExplanationResult> results;
    double seconds = 0;
};

DeskRun desk_run(std::string_view preset) {
    const auto t0 = std::chrono::steady_clock::now();
    DeskRun run;
    run.graphs = gen_dataset(preset_spec(preset, acceptance_seed, desk_graphs));
    run.results.resize(run.graphs.size());
    parallel_for(run.graphs.size(), default_workers(), [&](std::size_t i) {
        ExplainConfig cfg;
        cfg.train.seed = derive_seed(acceptance_seed, i);
        run.results[i] = explain_graph(run.graphs[i], cfg);
    });
    run.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return run;
}

const DeskRun& ba_house() {
    static const DeskRun r = desk_run("ba-house");
    return r;
}

Summary summarize(const DeskRun& run) {
    std::vector<ScoreReport> reports;
    for (std::size_t i = 0; i < run.graphs.size(); ++i) {
        const auto& gt = run.graphs[i].groundtruth();
        const auto& nodes = run.results[i].subgraph.nodes;
        reports.push_back(score(NodeSet(nodes.begin(), nodes.end()), NodeSet(gt.begin(), gt.end())));
    }
    return aggregate(reports);
}

// ---- criteria ----

Outcome oracle_exactness() {
    const auto scm = build_toy_example();
    const Rational cond = conditional_probability(scm, is("A", true), is("C", true));
    const Rational intv = interventional_probability(scm, is("A", true), {{{"C", true}}});
    const bool pass = cond == Rational(1, 2) && intv == Rational(7, 12) && std::abs(to_double(intv) - 0.58) <= 0.005;
    return {pass, "P(A=1|C=1) = " + to_string(cond) + ", P(A=1|do(C=1)) = " + to_string(intv) + " (want 1/2 and 7/12)"};
}

Outcome truth_tables() {
    std::size_t checked = 0;
    const auto bad = toy_tables::check(build_toy_example(), &checked);
    return {bad.empty() && checked == 512, std::to_string(checked) + " cells checked, " + std::to_string(bad.size()) +
                                               " mismatches"};
}

Outcome ncm_oracle_agreement() {
    const Graph g = toy_graph();
    const auto cs = build_causal_structure(g, A, 2);
    const auto scm = scm_from_causal_structure(cs, g);
    std::size_t good_seeds = 0;
    std::ostringstream detail;
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        TrainConfig cfg;
        cfg.seed = seed;
        const auto model = train_ncm(cs, 1, cfg).model;
        const auto samples = sample_latents(cs, derive_seed(seed, stream::eval), cfg.mc_samples);
        double worst = 0;
        for (NodeId x : {B, C, D}) {
            const double oracle = to_double(interventional_probability(scm, is("A", true), {{{node_name(x), true}}}));
            worst = std::max(worst, std::abs(interventional_prob(model, 1, x, samples, 1) - oracle));
        }
        good_seeds += worst <= 0.1;
        detail << (seed ? ", " : "") << "seed " << seed << " max err " << fmt(worst, 3);
    }
    return {good_seeds >= 2, detail.str() + "; " + std::to_string(good_seeds) + "/3 seeds within 0.1"};
}

Outcome gradient_correctness() {
    double worst = 0;
    std::size_t skipped_total = 0;
    std::mt19937_64 rng(12345);
    for (std::uint64_t m = 0; m < 10; ++m) {
        // even: toy structure; odd: a random BA+House reference node
        Graph g = toy_graph();
        NodeId ref = A;
        if (m % 2) {
            g = gen_dataset(preset_spec("ba-house", m, 1)).front();
            do ref = node_id(rng() % g.num_nodes());
            while (g.degree(ref) == 0);
        }
        const auto cs = build_causal_structure(g, ref, 2);
        const auto model = NcmModel::initialized(cs, {}, derive_seed(99, m));
        const auto samples = sample_latents(cs, derive_seed(7, m), 64);
        std::size_t skipped = 0;
        GradientCheckOptions opt;
        opt.seed = m;
        opt.skipped = &skipped;
        worst = std::max(worst, gradient_check(model, static_cast<Label>(m % 2), samples, 1e-5, opt));
        skipped_total += skipped;
    }
    std::ostringstream w;
    w << std::scientific << std::setprecision(2) << worst;
    return {worst < 1e-4, "max relative error " + w.str() + " (< 1e-4) over 10 models, " +
                              std::to_string(skipped_total) + " kink-crossing parameters skipped"};
}

Outcome desk_table() {
    const auto& bh = ba_house();
    const auto th = desk_run("tree-house");
    const auto bc = desk_run("ba-cycle");
    const auto s1 = summarize(bh), s2 = summarize(th), s3 = summarize(bc);
    const bool pass = s1.exact_match_rate >= 0.8 && s2.exact_match_rate >= 0.8 && s3.exact_match_rate >= 0.35;
    std::ostringstream d;
    d << "match rate BA+House " << fmt(s1.exact_match_rate, 2) << " (>=0.8), Tree+House " << fmt(s2.exact_match_rate, 2)
      << " (>=0.8), BA+Cycle " << fmt(s3.exact_match_rate, 2) << " (>=0.35); approx " << fmt(s1.approx_match_rate, 2)
      << "/" << fmt(s2.approx_match_rate, 2) << "/" << fmt(s3.approx_match_rate, 2) << "; runs "
      << fmt(bh.seconds, 1) << "s/" << fmt(th.seconds, 1) << "s/" << fmt(bc.seconds, 1) << "s";
    return {pass, d.str()};
}

Outcome loss_curves() {
    const auto& run = ba_house();
    double gt = 0, other = 0;
    std::size_t ngt = 0, nother = 0;
    for (std::size_t i = 0; i < run.graphs.size(); ++i)
        for (const auto& s : run.results[i].scores) {
            if (!s.trained) continue;
            if (run.graphs[i].in_groundtruth(s.node)) {
                gt += s.final_loss;
                ++ngt;
            } else {
                other += s.final_loss;
                ++nother;
            }
        }
    gt /= static_cast<double>(ngt);
    other /= static_cast<double>(nother);
    return {gt < other, "mean final loss groundtruth " + fmt(gt) + " vs other " + fmt(other)};
}

Outcome expressivity_ranking() {
    const auto& run = ba_house();
    std::size_t top = 0;
    for (std::size_t i = 0; i < run.graphs.size(); ++i) {
        const auto h = expressivity_histogram(run.results[i], run.graphs[i]);
        top += !h.empty() && h.front().in_groundtruth;
    }
    const double frac = static_cast<double>(top) / static_cast<double>(run.graphs.size());
    return {frac >= 0.7, std::to_string(top) + "/" + std::to_string(run.graphs.size()) +
                             " graphs have the top node in the groundtruth (>=70%)"};
}

Outcome toy_ordering() {
    std::size_t good = 0;
    std::ostringstream d;
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        ExplainConfig cfg;
        cfg.train.seed = seed;
        const auto r = explain_graph(toy_graph(), cfg);
        std::array<double, 4> e{};
        for (const auto& s : r.scores) e[index(s.node)] = *s.expressivity;
        const bool ordered = r.winner == A && e[0] > e[1] && e[1] > e[2] && e[2] > e[3];
        good += ordered;
        d << (seed ? "; " : "") << "seed " << seed << " winner " << node_name(r.winner) << " exp A..D " << fmt(e[0], 2)
          << "/" << fmt(e[1], 2) << "/" << fmt(e[2], 2) << "/" << fmt(e[3], 2);
    }
    return {good >= 2, d.str() + "; " + std::to_string(good) + "/3 seeds ordered A>B>C>D"};
}

Outcome metric_properties() {
    std::mt19937_64 rng(2025);
    std::size_t violations = 0;
    auto check = [&](const NodeSet& est, const NodeSet& gt) {
        const auto r = score(est, gt);
        const bool bounds = r.accuracy >= 0 && r.accuracy <= 1 && r.recall >= 0 && r.recall <= 1;
        const bool implication = !r.exact_match || r.approx_match;
        const bool ints = std::lround(r.accuracy * static_cast<double>(gt.size())) == static_cast<long>(r.intersection) &&
                          std::lround(r.recall * static_cast<double>(est.size())) == static_cast<long>(r.intersection);
        violations += !(bounds && implication && ints);
    };
    auto random_set = [&] {
        NodeSet s;
        while (s.empty())
            for (int i = 0; i < 15; ++i)
                if (rng() % 3 == 0) s.insert(NodeId(i));
        return s;
    };
    for (int i = 0; i < 1000; ++i) check(random_set(), random_set());
    std::size_t exhaustive = 0;
    for (unsigned e = 1; e < 64; ++e)
        for (unsigned g = 1; g < 64; ++g) {
            NodeSet est, gt;
            for (unsigned b = 0; b < 6; ++b) {
                if (e >> b & 1u) est.insert(NodeId(b));
                if (g >> b & 1u) gt.insert(NodeId(b));
            }
            check(est, gt);
            const bool approx = (e & ~g) == 0 && 5 * std::popcount(e) >= 3 * std::popcount(g);
            violations += approx_match(est, gt) != approx || groundtruth_match(est, gt) != (e == g);
            ++exhaustive;
        }
    return {violations == 0, "1000 random pairs + " + std::to_string(exhaustive) + " exhaustive pairs, " +
                                 std::to_string(violations) + " violations"};
}

Outcome generator_statistics() {
    const std::vector<std::pair<std::string, double>> table{
        {"ba-house", 11.97}, {"ba-grid", 15.96}, {"tree-house", 12}, {"tree-cycle", 13}, {"tree-grid", 24}};
    bool pass = true;
    std::ostringstream d;
    for (const auto& [name, target] : table) {
        double mean = 0;
        for (const auto& g : gen_dataset(preset_spec(name, acceptance_seed, 500))) mean += static_cast<double>(g.num_nodes());
        mean /= 500.0;
        pass = pass && std::abs(mean - target) <= 2.0;
        d << (d.tellp() ? ", " : "") << name << " " << fmt(mean, 2) << " vs " << target;
    }
    return {pass, d.str()};
}

int cli(const std::string& args, const fs::path& log) {
    const std::string cmd = std::string(CXGNN_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome determinism() {
    const fs::path dir = fs::temp_directory_path() / ("cxgnn_acceptance_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
    const auto log = dir / "log.txt";
    const auto data1 = dir / "d1.json", data2 = dir / "d2.json";
    int rc = cli("generate ba-house --count 4 --seed 11 --out " + data1.string(), log);
    rc |= cli("generate ba-house --count 4 --seed 11 --out " + data2.string(), log);
    const std::string explain = "explain " + data1.string() + " --seed 3 --out ";
    rc |= cli(explain + (dir / "r1").string() + " --workers 1", log);
    rc |= cli(explain + (dir / "r2").string() + " --workers 1", log);
    rc |= cli(explain + (dir / "r4").string() + " --workers 4", log);
    std::size_t compared = 0, differing = 0;
    if (read_file(data1) != read_file(data2)) ++differing;
    for (const auto& entry : fs::directory_iterator(dir / "r1")) {
        const auto name = entry.path().filename();
        if (name == "config.json") continue; // echoes the worker count
        ++compared;
        const auto ref = read_file(entry.path());
        if (read_file(dir / "r2" / name) != ref || read_file(dir / "r4" / name) != ref) ++differing;
    }
    fs::remove_all(dir);
    return {rc == 0 && differing == 0 && compared > 0,
            std::to_string(compared) + " result files x 3 runs (workers 1,1,4) + dataset file, " +
                std::to_string(differing) + " differ, exit status " + std::to_string(rc)};
}

} // namespace

int main() {
    const std::vector<Criterion> criteria{
        {1, "oracle exactness on the toy SCM", 1, oracle_exactness},
        {2, "truth-table fidelity of evaluate()", 1, truth_tables},
        {3, "NCM-oracle agreement on the toy structure", 30, ncm_oracle_agreement},
        {4, "gradient correctness", 30, gradient_correctness},
        {5, "desk-scale groundtruth match rates", 900, desk_table},
        {6, "loss-curve separation on BA+House", 0, loss_curves},
        {7, "expressivity ranking on BA+House", 0, expressivity_ranking},
        {8, "toy ordering A>B>C>D with winner A", 0, toy_ordering},
        {9, "metric properties", 0, metric_properties},
        {10, "generator statistics", 0, generator_statistics},
        {11, "CLI determinism across repeats and worker counts", 0, determinism},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.body();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (c.budget_s > 0 && secs > c.budget_s) {
            o.pass = false;
            o.detail += "; over the " + fmt(c.budget_s, 0) + " s budget";
        }
        failed += !o.pass;
        std::cout << (o.pass ? "[PASS]" : "[FAIL]") << " criterion " << c.id << ": " << c.title << " -- " << o.detail
                  << " [" << fmt(secs, 2) << " s]" << std::endl;
    }
    std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << "/" << criteria.size() << " criteria passed"
              << std::endl;
    return failed ? 1 : 0;
}
