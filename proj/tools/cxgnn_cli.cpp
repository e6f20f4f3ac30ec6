// cxgnn command-line front end: generate, explain, evaluate, oracle, report.

#include <cstdio>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cxgnn/cxgnn.hpp"

namespace fs = std::filesystem;
using namespace cxgnn;

namespace {

enum ExitCode : int { ok = 0, unexpected = 1, input_error = 2, tractability_error = 3, explanation_failed = 4 };

std::string result_name(std::size_t i, std::string_view suffix) {
    std::ostringstream os;
    os << "graph_" << std::setw(5) << std::setfill('0') << i << suffix;
    return os.str();
}

// ---------------------------------------------------------------- generate

struct GenerateOptions {
    std::string dataset;
    std::size_t count = 20;
    std::uint64_t seed = 0;
    std::string out;
    std::size_t base_n = 0, ba_m = 0, depth = 0; // 0 = preset
};

int cmd_generate(const GenerateOptions& o) {
    auto spec = preset_spec(o.dataset, o.seed, o.count);
    if (auto* ba = std::get_if<BarabasiAlbert>(&spec.base)) {
        if (o.base_n) ba->n = o.base_n;
        if (o.ba_m) ba->m = o.ba_m;
    } else if (o.depth) {
        std::get<BalancedBinaryTree>(spec.base).depth = o.depth;
    }
    const auto graphs = gen_dataset(spec);
    save_graphs(o.out, graphs);

    double nodes = 0, edges = 0;
    for (const auto& g : graphs) {
        nodes += static_cast<double>(g.num_nodes());
        edges += static_cast<double>(g.num_edges());
    }
    nodes /= static_cast<double>(graphs.size());
    edges /= static_cast<double>(graphs.size());

    json base;
    if (auto* ba = std::get_if<BarabasiAlbert>(&spec.base)) base = {{"kind", "barabasi-albert"}, {"n", ba->n}, {"m", ba->m}};
    else base = {{"kind", "balanced-binary-tree"}, {"depth", std::get<BalancedBinaryTree>(spec.base).depth}};
    const json config{{"command", "generate"}, {"dataset", o.dataset}, {"count", o.count}, {"seed", o.seed},
                      {"base", base},          {"out", o.out}};
    write_file(o.out + ".config.json", dump(config));

    std::cout << std::fixed << std::setprecision(2) << o.dataset << ": " << graphs.size() << " graphs, mean nodes "
              << nodes << ", mean edges " << edges << "\nwrote " << o.out << "\n"
              << config.dump() << "\n";
    return ok;
}

// ---------------------------------------------------------------- explain

struct ExplainOptions {
    std::string input;
    std::string out = "results";
    std::uint64_t seed = 0;
    std::size_t workers = default_workers();
    int hop = 2;
    std::size_t epochs = 100, batch = 64, mc_samples = 256;
    double lr = 0.01;
    double threshold = 0.0;
    Label target = 1;
};

ExplainConfig explain_config(const ExplainOptions& o) {
    ExplainConfig c;
    c.hop = o.hop;
    c.train.learning_rate = o.lr;
    c.train.epochs = o.epochs;
    c.train.batch_size = o.batch;
    c.train.mc_samples = o.mc_samples;
    c.expressivity_threshold = o.threshold;
    c.target_label = o.target;
    c.validate();
    return c;
}

int cmd_explain(const ExplainOptions& o) {
    const auto graphs = load_graphs(o.input);
    const ExplainConfig base = explain_config(o);
    const fs::path dir(o.out);
    fs::create_directories(dir);

    const json run{{"command", "explain"},   {"input", o.input},       {"out", o.out},
                   {"seed", o.seed},         {"workers", o.workers},   {"hop", o.hop},
                   {"epochs", o.epochs},     {"lr", o.lr},             {"batch", o.batch},
                   {"mc_samples", o.mc_samples}, {"threshold", o.threshold}, {"target_label", o.target}};
    write_file(dir / "config.json", dump(run));
    std::cout << run.dump() << "\n";

    // Graph-level parallelism when there are enough graphs, node-level otherwise.
    const bool per_graph = graphs.size() >= o.workers;
    std::vector<json> entries(graphs.size());
    parallel_for(graphs.size(), per_graph ? o.workers : 1, [&](std::size_t i) {
        ExplainConfig cfg = base;
        cfg.train.seed = derive_seed(o.seed, i);
        cfg.workers = per_graph ? 1 : o.workers;
        json entry{{"index", i}, {"result", result_name(i, ".json")}};
        try {
            const auto r = explain_graph(graphs[i], cfg);
            write_file(dir / result_name(i, ".json"), dump(to_json(r)));
            write_file(dir / result_name(i, "_traces.csv"), traces_csv(r));
            if (graphs[i].has_groundtruth())
                write_file(dir / result_name(i, "_hist.csv"), histogram_csv(expressivity_histogram(r, graphs[i])));
            entry["status"] = "ok";
            entry["winner"] = index(r.winner);
        } catch (const ExplanationFailedError& e) {
            write_file(dir / result_name(i, ".json"),
                       dump({{"version", format_version}, {"status", "explanation-failed"}, {"error", e.what()}}));
            entry["status"] = "explanation-failed";
        }
        entries[i] = std::move(entry);
    });

    std::size_t failed = 0;
    for (const auto& e : entries) failed += e["status"] != "ok";
    write_file(dir / "manifest.json",
               dump({{"version", format_version}, {"input", o.input}, {"count", graphs.size()}, {"graphs", entries}}));
    std::cout << "explained " << graphs.size() - failed << "/" << graphs.size() << " graphs into " << o.out << "\n";
    return failed ? explanation_failed : ok;
}

// ---------------------------------------------------------------- evaluate

json load_manifest(const fs::path& dir) {
    if (!fs::exists(dir / "manifest.json")) throw InputError(dir.string() + ": no manifest.json (empty results?)");
    auto m = parse_json(read_file(dir / "manifest.json"), (dir / "manifest.json").string());
    if (!m.contains("graphs") || m["graphs"].empty()) throw InputError(dir.string() + ": results directory is empty");
    return m;
}

struct EvaluateOptions {
    std::string results;
    std::string dataset;
    std::string name;
};

int cmd_evaluate(const EvaluateOptions& o) {
    const fs::path dir(o.results);
    const auto manifest = load_manifest(dir);
    const auto graphs = load_graphs(o.dataset);
    if (manifest["graphs"].size() != graphs.size())
        throw InputError("results hold " + std::to_string(manifest["graphs"].size()) + " graphs but " + o.dataset +
                         " holds " + std::to_string(graphs.size()));

    std::vector<ScoreReport> reports;
    json per_graph = json::array();
    for (const auto& entry : manifest["graphs"]) {
        const auto i = entry.at("index").get<std::size_t>();
        if (i >= graphs.size()) throw InputError("result index " + std::to_string(i) + " has no dataset graph");
        const auto& g = graphs[i];
        if (!g.has_groundtruth() || g.groundtruth().empty())
            throw InputError("dataset graph " + std::to_string(i) + " has no groundtruth");
        const NodeSet gt(g.groundtruth().begin(), g.groundtruth().end());
        ScoreReport rep;
        rep.gt_size = gt.size();
        if (entry.at("status") == "ok") {
            const auto r = parse_json(read_file(dir / entry.at("result").get<std::string>()), entry["result"]);
            NodeSet est;
            for (const auto& v : r.at("subgraph").at("nodes")) {
                const auto id = v.get<std::size_t>();
                if (id >= g.num_nodes()) throw InputError("result " + std::to_string(i) + " does not match its graph");
                est.insert(node_id(id));
            }
            rep = score(est, gt);
        }
        reports.push_back(rep);
        per_graph.push_back({{"index", i},
                             {"accuracy", rep.accuracy},
                             {"recall", rep.recall},
                             {"exact_match", rep.exact_match},
                             {"approx_match", rep.approx_match},
                             {"sizes", {rep.est_size, rep.gt_size, rep.intersection}}});
    }
    const auto s = aggregate(reports);
    const std::string name = o.name.empty() ? fs::path(o.dataset).stem().string() : o.name;
    const json summary{{"dataset", name},
                       {"count", s.count},
                       {"accuracy", s.accuracy},
                       {"recall", s.recall},
                       {"groundtruth_match_rate", s.exact_match_rate},
                       {"approx_match_rate", s.approx_match_rate}};
    write_file(dir / "evaluation.json", dump({{"summary", summary}, {"graphs", per_graph}}));
    std::cout << summary_table("CXGNN", {{name, s}});
    return ok;
}

// ---------------------------------------------------------------- oracle

struct OracleOptions {
    std::string mode = "toy"; // toy | structure
    std::vector<std::string> queries;
    std::string graphs;
    std::size_t index = 0;
    std::size_t node = 0;
    int hop = 2;
    std::size_t budget = 20;
    bool dump_scm = false;
};

int cmd_oracle(const OracleOptions& o) {
    std::optional<ExactScm> scm;
    if (o.mode == "toy") {
        scm = build_toy_example();
    } else {
        const auto graphs = load_graphs(o.graphs);
        if (o.index >= graphs.size()) throw InputError("graph index out of range");
        const auto& g = graphs[o.index];
        scm = scm_from_causal_structure(build_causal_structure(g, node_id(o.node), o.hop), g, o.budget);
    }
    if (o.dump_scm) std::cout << dump(to_json(*scm));
    for (const auto& text : o.queries) {
        const auto p = answer(*scm, parse_query(text));
        std::cout << text << " = " << to_string(p) << " = " << std::setprecision(10) << to_double(p) << "\n";
    }
    return ok;
}

// ---------------------------------------------------------------- report

struct ReportOptions {
    std::string results;
};

std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(read_file(path));
    std::string line;
    std::getline(in, line); // header
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::istringstream ls(line);
        for (std::string cell; std::getline(ls, cell, ',');) cells.push_back(cell);
        rows.push_back(std::move(cells));
    }
    return rows;
}

int cmd_report(const ReportOptions& o) {
    const fs::path dir(o.results);
    const auto manifest = load_manifest(dir);
    std::cout << std::left << std::setw(7) << "graph" << std::setw(8) << "winner" << std::right << std::setw(12)
              << "exp(win)" << std::setw(6) << "inGT" << std::setw(10) << "trained" << std::setw(14) << "loss(GT)"
              << std::setw(14) << "loss(other)" << "\n";
    std::size_t top_in_gt = 0, with_hist = 0;
    for (const auto& entry : manifest["graphs"]) {
        const auto i = entry.at("index").get<std::size_t>();
        if (entry.at("status") != "ok") {
            std::cout << std::left << std::setw(7) << i << "explanation failed\n";
            continue;
        }
        std::map<std::size_t, double> final_loss;
        for (const auto& row : read_csv(dir / result_name(i, "_traces.csv"))) final_loss[std::stoul(row[0])] = std::stod(row[2]);
        const auto hist_path = dir / result_name(i, "_hist.csv");
        std::cout << std::left << std::setw(7) << i << std::setw(8) << entry.at("winner").get<std::size_t>();
        if (!fs::exists(hist_path)) {
            std::cout << "  (no groundtruth)\n";
            continue;
        }
        const auto hist = read_csv(hist_path);
        double gt_loss = 0, other_loss = 0;
        std::size_t gt_n = 0, other_n = 0;
        for (const auto& row : hist) {
            const double l = final_loss.at(std::stoul(row[0]));
            if (row[2] == "1") {
                gt_loss += l;
                ++gt_n;
            } else {
                other_loss += l;
                ++other_n;
            }
        }
        ++with_hist;
        top_in_gt += !hist.empty() && hist.front()[2] == "1";
        std::cout << std::right << std::fixed << std::setprecision(4) << std::setw(12)
                  << (hist.empty() ? 0.0 : std::stod(hist.front()[1])) << std::setw(6)
                  << (!hist.empty() && hist.front()[2] == "1" ? "yes" : "no") << std::setw(10) << hist.size()
                  << std::setw(14) << (gt_n ? gt_loss / static_cast<double>(gt_n) : 0.0) << std::setw(14)
                  << (other_n ? other_loss / static_cast<double>(other_n) : 0.0) << "\n";
    }
    if (with_hist) std::cout << "top node in groundtruth: " << top_in_gt << "/" << with_hist << "\n";
    if (fs::exists(dir / "evaluation.json")) {
        const auto ev = parse_json(read_file(dir / "evaluation.json"), "evaluation.json")["summary"];
        Summary s{ev["count"].get<std::size_t>(), ev["accuracy"].get<double>(), ev["recall"].get<double>(),
                  ev["groundtruth_match_rate"].get<double>(), ev["approx_match_rate"].get<double>()};
        std::cout << "\n" << summary_table("CXGNN", {{ev["dataset"].get<std::string>(), s}});
    }
    return ok;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"cxgnn: causal explanations for graph node labels"};
    app.require_subcommand(1);

    GenerateOptions gen;
    auto* g = app.add_subcommand("generate", "Generate a synthetic benchmark dataset");
    std::vector<std::string> names;
    for (const auto& p : dataset_presets()) names.emplace_back(p.name);
    g->add_option("dataset", gen.dataset, "Dataset preset")->required()->check(CLI::IsMember(names));
    g->add_option("--count", gen.count, "Number of graphs")->check(CLI::PositiveNumber);
    g->add_option("--seed", gen.seed, "Root seed");
    g->add_option("--out", gen.out, "Output graph-list JSON")->required();
    g->add_option("--base-n", gen.base_n, "Override BA base node count");
    g->add_option("--ba-m", gen.ba_m, "Override BA edges per new node");
    g->add_option("--depth", gen.depth, "Override tree depth");

    ExplainOptions ex;
    auto* e = app.add_subcommand("explain", "Explain every graph of a graph-list file");
    e->add_option("input", ex.input, "Graph-list JSON")->required();
    e->add_option("--out", ex.out, "Results directory");
    e->add_option("--seed", ex.seed, "Root seed");
    e->add_option("--workers", ex.workers, "Worker threads")->check(CLI::PositiveNumber);
    e->add_option("--hop", ex.hop, "Neighbourhood radius k");
    e->add_option("--epochs", ex.epochs, "Training epochs");
    e->add_option("--lr", ex.lr, "Learning rate");
    e->add_option("--batch", ex.batch, "Latent samples per step");
    e->add_option("--mc-samples", ex.mc_samples, "Samples for expressivity estimation");
    e->add_option("--threshold", ex.threshold, "Expressivity threshold (recorded only)");
    e->add_option("--target-label", ex.target, "Label being explained");

    EvaluateOptions ev;
    auto* v = app.add_subcommand("evaluate", "Score results against groundtruth masks");
    v->add_option("results", ev.results, "Results directory")->required();
    v->add_option("dataset", ev.dataset, "Graph-list JSON with groundtruth")->required();
    v->add_option("--name", ev.name, "Dataset name for the summary table");

    OracleOptions orc;
    auto* o = app.add_subcommand("oracle", "Exact SCM queries");
    o->add_option("mode", orc.mode, "toy or structure")->check(CLI::IsMember({"toy", "structure"}));
    o->add_option("--query", orc.queries, "Query such as \"P(A=1|do(C=1))\"");
    o->add_option("--graphs", orc.graphs, "Graph-list JSON (structure mode)");
    o->add_option("--index", orc.index, "Graph index (structure mode)");
    o->add_option("--node", orc.node, "Reference node (structure mode)");
    o->add_option("--hop", orc.hop, "Neighbourhood radius k");
    o->add_option("--budget", orc.budget, "Latent budget");
    o->add_flag("--dump", orc.dump_scm, "Print the SCM as JSON");

    ReportOptions rep;
    auto* r = app.add_subcommand("report", "Summarise a results directory");
    r->add_option("results", rep.results, "Results directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        const int code = app.exit(err);
        return code == 0 ? ok : input_error;
    }

    try {
        if (*g) return cmd_generate(gen);
        if (*e) return cmd_explain(ex);
        if (*v) return cmd_evaluate(ev);
        if (*o) return cmd_oracle(orc);
        if (*r) return cmd_report(rep);
    } catch (const InputError& err) {
        std::cerr << "input error: " << err.what() << "\n";
        return input_error;
    } catch (const UndefinedConditionalError& err) {
        std::cerr << "input error: " << err.what() << "\n";
        return input_error;
    } catch (const TractabilityError& err) {
        std::cerr << "tractability error: " << err.what() << "\n";
        return tractability_error;
    } catch (const ExplanationFailedError& err) {
        std::cerr << "explanation failed: " << err.what() << "\n";
        return explanation_failed;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return unexpected;
    }
    return ok;
}
