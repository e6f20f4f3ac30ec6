#pragma once

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cxgnn/error.hpp"
#include "cxgnn/explainer.hpp"
#include "cxgnn/graph.hpp"
#include "cxgnn/ncm.hpp"
#include "cxgnn/scm.hpp"

namespace cxgnn {

using json = nlohmann::json;

inline constexpr int format_version = 1;

// ---- files ----

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path.string());
    out << text;
    if (!out) throw InputError("write failed for " + path.string());
}

inline json parse_json(const std::string& text, const std::string& origin) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        std::size_t line = 1, col = 1;
        for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw InputError(origin + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + e.what());
    }
}

inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

// ---- graphs ----

inline json to_json(const Graph& g) {
    json edges = json::array();
    for (const Edge& e : g.edges()) edges.push_back({index(e.u), index(e.v)});
    json j{{"num_nodes", g.num_nodes()}, {"labels", g.labels()}, {"edges", edges}};
    if (g.has_groundtruth()) {
        json gt = json::array();
        for (NodeId v : g.groundtruth()) gt.push_back(index(v));
        j["groundtruth"] = gt;
    }
    return j;
}

namespace detail {

inline std::size_t as_index(const json& j, const std::string& what) {
    if (!j.is_number_integer() || j.get<long long>() < 0) throw InputError(what + " must be a non-negative integer");
    return j.get<std::size_t>();
}

} // namespace detail

inline Graph graph_from_json(const json& j, const LabelDomain& domain = {}) {
    if (!j.is_object()) throw InputError("graph must be a JSON object");
    static const std::set<std::string> known{"num_nodes", "labels", "edges", "groundtruth"};
    for (const auto& [k, _] : j.items())
        if (!known.contains(k)) throw InputError("unknown key '" + k + "'");
    for (const char* k : {"num_nodes", "labels", "edges"})
        if (!j.contains(k)) throw InputError(std::string("missing key '") + k + "'");
    const std::size_t n = detail::as_index(j["num_nodes"], "num_nodes");
    if (!j["labels"].is_array()) throw InputError("labels must be an array");
    std::vector<Label> labels;
    for (const auto& y : j["labels"]) {
        if (!y.is_number_integer()) throw InputError("labels must be integers");
        labels.push_back(y.get<Label>());
    }
    if (!j["edges"].is_array()) throw InputError("edges must be an array");
    std::vector<Edge> edges;
    for (const auto& e : j["edges"]) {
        if (!e.is_array() || e.size() != 2) throw InputError("each edge must be a [u, v] pair");
        edges.emplace_back(node_id(detail::as_index(e[0], "edge endpoint")),
                           node_id(detail::as_index(e[1], "edge endpoint")));
    }
    std::optional<std::vector<NodeId>> gt;
    if (j.contains("groundtruth")) {
        if (!j["groundtruth"].is_array()) throw InputError("groundtruth must be an array");
        gt.emplace();
        for (const auto& v : j["groundtruth"]) gt->push_back(node_id(detail::as_index(v, "groundtruth id")));
    }
    return Graph(n, std::move(labels), std::move(edges), std::move(gt), domain);
}

inline json graphs_to_json(const std::vector<Graph>& graphs) {
    json arr = json::array();
    for (const auto& g : graphs) arr.push_back(to_json(g));
    return {{"version", format_version}, {"graphs", arr}};
}

inline std::vector<Graph> graphs_from_json(const json& j, const std::string& origin = "input",
                                           const LabelDomain& domain = {}) {
    if (!j.is_object() || !j.contains("graphs") || !j["graphs"].is_array())
        throw InputError(origin + ": expected an object with a \"graphs\" array");
    for (const auto& [k, _] : j.items())
        if (k != "graphs" && k != "version") throw InputError(origin + ": unknown key '" + k + "'");
    std::vector<Graph> out;
    for (std::size_t i = 0; i < j["graphs"].size(); ++i) {
        try {
            out.push_back(graph_from_json(j["graphs"][i], domain));
        } catch (const InputError& e) {
            throw InputError(origin + ": graph " + std::to_string(i) + ": " + e.what());
        }
    }
    return out;
}

inline void save_graphs(const std::filesystem::path& path, const std::vector<Graph>& graphs) {
    write_file(path, dump(graphs_to_json(graphs)));
}

inline std::vector<Graph> load_graphs(const std::filesystem::path& path, const LabelDomain& domain = {}) {
    return graphs_from_json(parse_json(read_file(path), path.string()), path.string(), domain);
}

// ---- SCM fixtures ----

inline json to_json(const BoolExpr& e) {
    switch (e.op()) {
    case BoolExpr::Op::Const: return e.value();
    case BoolExpr::Op::Var: return e.name();
    default: break;
    }
    static const char* names[] = {"", "", "not", "and", "or", "xor"};
    json j = json::array({names[static_cast<int>(e.op())]});
    for (const auto& c : e.children()) j.push_back(to_json(c));
    return j;
}

inline BoolExpr bool_expr_from_json(const json& j) {
    if (j.is_boolean()) return BoolExpr::constant(j.get<bool>());
    if (j.is_string()) return BoolExpr::var(j.get<std::string>());
    if (!j.is_array() || j.empty() || !j[0].is_string()) throw InputError("malformed expression");
    const auto op = j[0].get<std::string>();
    std::vector<BoolExpr> kids;
    for (std::size_t i = 1; i < j.size(); ++i) kids.push_back(bool_expr_from_json(j[i]));
    if (op == "not") return BoolExpr::make(BoolExpr::Op::Not, std::move(kids));
    if (op == "and") return BoolExpr::make(BoolExpr::Op::And, std::move(kids));
    if (op == "or") return BoolExpr::make(BoolExpr::Op::Or, std::move(kids));
    if (op == "xor") return BoolExpr::make(BoolExpr::Op::Xor, std::move(kids));
    throw InputError("unknown connective '" + op + "'");
}

inline json to_json(const ExactScm& scm) {
    json mech = json::object();
    for (std::size_t i = 0; i < scm.endogenous().size(); ++i) mech[scm.endogenous()[i]] = to_json(scm.mechanisms()[i]);
    json j{{"version", format_version}, {"exogenous", scm.exogenous()}, {"endogenous", scm.endogenous()},
           {"mechanisms", mech}};
    if (!scm.uniform()) {
        json table = json::array();
        for (const auto& p : scm.table()) table.push_back(to_string(p));
        j["table"] = table;
    }
    return j;
}

inline Rational rational_from_string(const std::string& s) {
    try {
        const auto slash = s.find('/');
        if (slash == std::string::npos) return Rational(boost::multiprecision::cpp_int(s));
        return Rational(boost::multiprecision::cpp_int(s.substr(0, slash)),
                        boost::multiprecision::cpp_int(s.substr(slash + 1)));
    } catch (const std::exception&) {
        throw InputError("malformed rational '" + s + "'");
    }
}

inline ExactScm scm_from_json(const json& j) {
    try {
        auto exo = j.at("exogenous").get<std::vector<std::string>>();
        auto endo = j.at("endogenous").get<std::vector<std::string>>();
        std::vector<BoolExpr> mech;
        for (const auto& v : endo) {
            if (!j.at("mechanisms").contains(v)) throw InputError("no mechanism for " + v);
            mech.push_back(bool_expr_from_json(j["mechanisms"][v]));
        }
        std::vector<Rational> table;
        if (j.contains("table"))
            for (const auto& p : j["table"]) table.push_back(rational_from_string(p.get<std::string>()));
        return ExactScm(std::move(exo), std::move(endo), std::move(mech), std::move(table));
    } catch (const json::exception& e) {
        throw InputError(std::string("malformed SCM: ") + e.what());
    }
}

// ---- models ----

inline json to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(row);
    }
    return rows;
}

inline json to_json(const NcmModel& m) {
    json nets = json::array();
    const auto nodes = m.structure.nodes();
    for (std::size_t s = 0; s < m.nets.size(); ++s) {
        json layers = json::array();
        for (const auto& L : m.nets[s].layers())
            layers.push_back({{"w", to_json(L.w)}, {"b", std::vector<double>(L.b.data(), L.b.data() + L.b.size())}});
        nets.push_back({{"node", index(nodes[s])}, {"layers", layers}});
    }
    return {{"version", format_version},
            {"reference", index(m.structure.reference)},
            {"hop", m.structure.hop},
            {"mlp", {{"input_dim", m.config.input_dim}, {"hidden_layers", m.config.hidden_layers},
                     {"hidden_width", m.config.hidden_width}}},
            {"nets", nets}};
}

// The structure is rebuilt from the graph; parameters are loaded on top.
inline NcmModel model_from_json(const json& j, const Graph& g) {
    try {
        MlpConfig cfg{j.at("mlp").at("input_dim").get<std::size_t>(), j["mlp"].at("hidden_layers").get<std::size_t>(),
                      j["mlp"].at("hidden_width").get<std::size_t>()};
        auto cs = build_causal_structure(g, node_id(j.at("reference").get<std::size_t>()), j.at("hop").get<int>());
        auto m = NcmModel::zeros(std::move(cs), cfg);
        const auto& nets = j.at("nets");
        if (nets.size() != m.nets.size()) throw InputError("model has the wrong number of networks");
        for (std::size_t s = 0; s < nets.size(); ++s) {
            auto& layers = m.nets[m.slot(node_id(nets[s].at("node").get<std::size_t>()))].layers();
            const auto& jl = nets[s].at("layers");
            if (jl.size() != layers.size()) throw InputError("layer count mismatch");
            for (std::size_t l = 0; l < layers.size(); ++l) {
                auto& L = layers[l];
                const auto& w = jl[l].at("w");
                const auto& b = jl[l].at("b");
                if (static_cast<Eigen::Index>(w.size()) != L.w.rows() || static_cast<Eigen::Index>(b.size()) != L.b.size())
                    throw InputError("tensor shape mismatch");
                for (Eigen::Index r = 0; r < L.w.rows(); ++r) {
                    if (static_cast<Eigen::Index>(w[r].size()) != L.w.cols()) throw InputError("tensor shape mismatch");
                    for (Eigen::Index c = 0; c < L.w.cols(); ++c) L.w(r, c) = w[r][c].get<double>();
                }
                for (Eigen::Index r = 0; r < L.b.size(); ++r) L.b(r) = b[r].get<double>();
            }
        }
        return m;
    } catch (const json::exception& e) {
        throw InputError(std::string("malformed model: ") + e.what());
    }
}

// ---- explanation results ----

inline json to_json(const ExplainConfig& c) {
    return {{"hop", c.hop},
            {"learning_rate", c.train.learning_rate},
            {"epochs", c.train.epochs},
            {"batch_size", c.train.batch_size},
            {"mc_samples", c.train.mc_samples},
            {"graph_seed", c.train.seed},
            {"expressivity_threshold", c.expressivity_threshold},
            {"target_label", c.target_label},
            {"mlp", {{"input_dim", c.mlp.input_dim}, {"hidden_layers", c.mlp.hidden_layers},
                     {"hidden_width", c.mlp.hidden_width}}}};
}

inline json to_json(const ExplanationResult& r) {
    json scores = json::array();
    for (const auto& s : r.scores)
        scores.push_back({{"node", index(s.node)},
                          {"trained", s.trained},
                          {"expressivity", s.expressivity ? json(*s.expressivity) : json(nullptr)},
                          {"final_loss", s.trained ? json(s.final_loss) : json(nullptr)}});
    json nodes = json::array();
    for (NodeId v : r.subgraph.nodes) nodes.push_back(index(v));
    return {{"version", format_version},
            {"status", "ok"},
            {"winner", index(r.winner)},
            {"subgraph", {{"nodes", nodes}, {"graph", to_json(r.subgraph.graph)}}},
            {"scores", scores},
            {"config", to_json(r.config)}};
}

inline std::string traces_csv(const ExplanationResult& r) {
    std::ostringstream os;
    os << "node,epoch,loss\n" << std::setprecision(17);
    for (const auto& [v, trace] : r.traces)
        for (std::size_t e = 0; e < trace.size(); ++e) os << index(v) << ',' << e << ',' << trace[e] << '\n';
    return os.str();
}

inline std::string loss_trace_csv(const std::vector<double>& trace) {
    std::ostringstream os;
    os << "epoch,loss\n" << std::setprecision(17);
    for (std::size_t e = 0; e < trace.size(); ++e) os << e << ',' << trace[e] << '\n';
    return os.str();
}

inline std::string histogram_csv(const std::vector<HistogramRow>& rows) {
    std::ostringstream os;
    os << "node,expressivity,in_groundtruth\n" << std::setprecision(17);
    for (const auto& row : rows) os << index(row.node) << ',' << row.expressivity << ',' << (row.in_groundtruth ? 1 : 0) << '\n';
    return os.str();
}

} // namespace cxgnn
