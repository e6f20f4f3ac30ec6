#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iterator>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "cxgnn/error.hpp"
#include "cxgnn/graph.hpp"
#include "cxgnn/mlp.hpp"
#include "cxgnn/rng.hpp"

namespace cxgnn {

inline constexpr double probability_floor = 1e-7;

struct TrainConfig {
    double learning_rate = 0.01;
    std::size_t epochs = 100;
    std::size_t batch_size = 64;
    std::size_t mc_samples = 256;
    std::uint64_t seed = 0;

    void validate() const {
        if (!(learning_rate > 0) || epochs == 0 || batch_size == 0 || mc_samples == 0)
            throw InputError("training parameters must be positive");
    }
    bool operator==(const TrainConfig&) const = default;
};

// One joint draw of every latent of a structure. effects is indexed by LatentId;
// noise[k][s] is T_{k, nodes()[s]}.
struct LatentSample {
    std::vector<double> effects;
    std::array<std::vector<double>, 2> noise;

    double effect(LatentId id) const { return effects.at(index(id)); }
    bool operator==(const LatentSample&) const = default;
};

inline std::vector<LatentSample> sample_latents(const CausalStructure& cs, std::uint64_t seed, std::size_t n) {
    if (n == 0) throw InputError("sample count must be >= 1");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const std::size_t nodes = cs.neighborhood.size() + 1;
    std::vector<LatentSample> out(n);
    for (auto& s : out) {
        s.effects.resize(cs.num_latents());
        for (auto& e : s.effects) e = unif(rng);
        for (auto& row : s.noise) {
            row.resize(nodes);
            for (auto& t : row) t = gauss(rng);
        }
    }
    return out;
}

struct NcmModel {
    CausalStructure structure;
    MlpConfig config;
    std::vector<Mlp> nets; // aligned with structure.nodes()

    static NcmModel zeros(CausalStructure cs, const MlpConfig& cfg = {}) {
        NcmModel m{std::move(cs), cfg, {}};
        m.nets.assign(m.structure.neighborhood.size() + 1, Mlp(cfg));
        return m;
    }

    static NcmModel initialized(CausalStructure cs, const MlpConfig& cfg, std::uint64_t seed) {
        auto m = zeros(std::move(cs), cfg);
        std::mt19937_64 rng(seed);
        for (auto& net : m.nets) net.init(rng);
        return m;
    }

    std::size_t slot(NodeId v) const {
        if (v == structure.reference) return 0;
        if (auto p = structure.position(v)) return *p + 1;
        throw InputError("node " + std::to_string(index(v)) + " is not part of the causal structure");
    }

    Mlp& net(NodeId v) { return nets[slot(v)]; }
    const Mlp& net(NodeId v) const { return nets[slot(v)]; }

    std::size_t num_params() const {
        std::size_t n = 0;
        for (const auto& net : nets) n += net.num_params();
        return n;
    }

    bool operator==(const NcmModel&) const = default;
};

using NcmGrad = std::vector<MlpGrad>; // aligned with NcmModel::nets

inline double forward_ff(const NcmModel& m, NodeId node, double node_effect, double edge_effect) {
    return m.net(node).forward(node_effect, edge_effect);
}

// Hard path: argmax_k T_k + [k=1] log s + [k=0] log(1-s), ties to 0.
inline Label structural_fn_sample(const NcmModel& m, NodeId node, const LatentSample& sample) {
    const auto& cs = m.structure;
    const std::size_t s = m.slot(node);
    double ne = 0.0, ee = 0.0;
    if (s > 0) {
        ne = sample.effect(cs.node_effect_ids[s - 1]);
        if (auto e = cs.edge_effect_of(node)) ee = sample.effect(*e);
    }
    const double z = forward_ff(m, node, ne, ee);
    const double score1 = sample.noise[1][s] + log_sigmoid(z);
    const double score0 = sample.noise[0][s] + log_sigmoid(-z);
    return score1 > score0 ? 1 : 0;
}

namespace detail {

inline Eigen::MatrixXd effects_matrix(std::span<const LatentSample> samples, std::size_t latents) {
    if (samples.empty()) throw InputError("sample list is empty");
    Eigen::MatrixXd U(static_cast<Eigen::Index>(latents), static_cast<Eigen::Index>(samples.size()));
    for (std::size_t c = 0; c < samples.size(); ++c) {
        if (samples[c].effects.size() != latents) throw InputError("sample does not match the structure");
        for (std::size_t r = 0; r < latents; ++r) U(r, c) = samples[c].effects[r];
    }
    return U;
}

// Per one-hop neighbour j: a_j = sigma(ff_j([u_j, u_vj])), and b_j = sigma(ff_j([x, u_vj]))
// where x is the value the neighbour is forced to.
struct EdgeFactors {
    std::vector<Eigen::RowVectorXd> a, b;
    std::vector<MlpCache> cache_a, cache_b;
    std::vector<std::size_t> slot;
};

inline EdgeFactors edge_factors(const NcmModel& m, const Eigen::MatrixXd& U, bool keep_cache,
                                std::optional<std::pair<NodeId, double>> only_forced = std::nullopt) {
    const auto& cs = m.structure;
    EdgeFactors f;
    const auto B = U.cols();
    for (const auto& ee : cs.edge_effects) {
        const std::size_t pos = *cs.position(ee.neighbor);
        const std::size_t s = pos + 1;
        Eigen::MatrixXd x(2, B);
        x.row(0) = U.row(static_cast<Eigen::Index>(index(cs.node_effect_ids[pos])));
        x.row(1) = U.row(static_cast<Eigen::Index>(index(ee.id)));
        MlpCache ca, cb;
        f.a.push_back(sigmoid(m.nets[s].forward(x, keep_cache ? &ca : nullptr)));
        const bool want_b = only_forced ? only_forced->first == ee.neighbor : true;
        if (want_b) {
            x.row(0).setConstant(only_forced ? only_forced->second : static_cast<double>(cs.observables[pos]));
            f.b.push_back(sigmoid(m.nets[s].forward(x, keep_cache ? &cb : nullptr)));
        } else {
            f.b.emplace_back();
        }
        f.cache_a.push_back(std::move(ca));
        f.cache_b.push_back(std::move(cb));
        f.slot.push_back(s);
    }
    return f;
}

inline Eigen::RowVectorXd product_except(const std::vector<Eigen::RowVectorXd>& a, Eigen::Index cols,
                                         std::optional<std::size_t> skip1, std::optional<std::size_t> skip2 = {}) {
    Eigen::RowVectorXd p = Eigen::RowVectorXd::Ones(cols);
    for (std::size_t j = 0; j < a.size(); ++j)
        if (j != skip1 && j != skip2) p = p.cwiseProduct(a[j]);
    return p;
}

// Per-sample probability of label 1 under do(v_i = x).
inline Eigen::RowVectorXd intervention_one(const NcmModel& m, const Eigen::MatrixXd& U, NodeId i, Label x) {
    const auto& cs = m.structure;
    const auto B = U.cols();
    if (x != 1) return Eigen::RowVectorXd::Zero(B);
    auto f = edge_factors(m, U, false, std::pair{i, static_cast<double>(x)});
    std::optional<std::size_t> forced;
    for (std::size_t j = 0; j < cs.edge_effects.size(); ++j)
        if (cs.edge_effects[j].neighbor == i) forced = j;
    Eigen::RowVectorXd p = product_except(f.a, B, forced);
    if (forced) p = p.cwiseProduct(f.b[*forced]);
    return p;
}

inline void require_one_hop(const CausalStructure& cs) {
    if (cs.degenerate())
        throw UndefinedProbabilityError("reference node " + std::to_string(index(cs.reference)) +
                                        " has no one-hop neighbours");
}

} // namespace detail

// Monte-Carlo p(y_v = target | do(intervened = value)); value defaults to the observed label.
inline double interventional_prob(const NcmModel& m, Label target, NodeId intervened,
                                  std::span<const LatentSample> samples, std::optional<Label> value = std::nullopt) {
    const auto& cs = m.structure;
    auto pos = cs.position(intervened);
    if (!pos) throw InputError("intervened node " + std::to_string(index(intervened)) + " is outside the neighbourhood");
    const Eigen::MatrixXd U = detail::effects_matrix(samples, cs.num_latents());
    const double p1 = std::clamp(detail::intervention_one(m, U, intervened, value.value_or(cs.observables[*pos])).mean(), 0.0, 1.0);
    return target == 1 ? p1 : 1.0 - p1;
}

// Average of interventional probabilities over the whole neighbourhood.
inline double label_prob(const NcmModel& m, Label target, std::span<const LatentSample> samples) {
    const auto& cs = m.structure;
    detail::require_one_hop(cs);
    const Eigen::MatrixXd U = detail::effects_matrix(samples, cs.num_latents());
    double sum = 0.0;
    for (std::size_t p = 0; p < cs.neighborhood.size(); ++p)
        sum += detail::intervention_one(m, U, cs.neighborhood[p], cs.observables[p]).mean();
    const double p1 = std::clamp(sum / static_cast<double>(cs.neighborhood.size()), 0.0, 1.0);
    return target == 1 ? p1 : 1.0 - p1;
}

inline double loss_from_prob(double p) { return -std::log(std::max(p, probability_floor)); }

inline double ncm_loss(const NcmModel& m, Label true_label, std::span<const LatentSample> samples) {
    return loss_from_prob(label_prob(m, true_label, samples));
}

struct LossAndGrad {
    double loss = 0.0;
    NcmGrad grad;
};

// Fused forward/backward of ncm_loss.
inline LossAndGrad ncm_loss_and_grad(const NcmModel& m, Label true_label, std::span<const LatentSample> samples) {
    const auto& cs = m.structure;
    detail::require_one_hop(cs);
    const Eigen::MatrixXd U = detail::effects_matrix(samples, cs.num_latents());
    const auto B = U.cols();
    const auto f = detail::edge_factors(m, U, true);
    const std::size_t m1 = f.a.size();

    std::vector<bool> gate(m1);
    for (std::size_t j = 0; j < m1; ++j) gate[j] = cs.observables[f.slot[j] - 1] == 1;
    double far_open = 0.0; // neighbours beyond one hop with label 1
    for (std::size_t p = 0; p < cs.neighborhood.size(); ++p)
        if (cs.distance[p] > 1 && cs.observables[p] == 1) far_open += 1.0;

    const double scale = 1.0 / (static_cast<double>(cs.neighborhood.size()) * static_cast<double>(B));
    std::vector<Eigen::RowVectorXd> except(m1);
    for (std::size_t j = 0; j < m1; ++j) except[j] = detail::product_except(f.a, B, j);
    Eigen::RowVectorXd per_sample = far_open * detail::product_except(f.a, B, std::nullopt);
    for (std::size_t i = 0; i < m1; ++i)
        if (gate[i]) per_sample += f.b[i].cwiseProduct(except[i]);
    const double p1 = std::clamp(per_sample.sum() * scale, 0.0, 1.0);
    const double p = true_label == 1 ? p1 : 1.0 - p1;

    LossAndGrad out;
    out.loss = loss_from_prob(p);
    for (const auto& net : m.nets) out.grad.push_back(net.zero_grad());
    if (p <= probability_floor) return out;
    const double dloss_dp1 = true_label == 1 ? -1.0 / p : 1.0 / p;

    for (std::size_t j = 0; j < m1; ++j) {
        Eigen::RowVectorXd da = far_open * except[j];
        for (std::size_t i = 0; i < m1; ++i)
            if (i != j && gate[i]) da += f.b[i].cwiseProduct(detail::product_except(f.a, B, i, j));
        const Eigen::RowVectorXd dz =
            (dloss_dp1 * scale) * da.cwiseProduct(f.a[j]).cwiseProduct((1.0 - f.a[j].array()).matrix());
        m.nets[f.slot[j]].backward(f.cache_a[j], dz, out.grad[f.slot[j]]);
        if (gate[j]) {
            const Eigen::RowVectorXd dzb =
                (dloss_dp1 * scale) * except[j].cwiseProduct(f.b[j]).cwiseProduct((1.0 - f.b[j].array()).matrix());
            m.nets[f.slot[j]].backward(f.cache_b[j], dzb, out.grad[f.slot[j]]);
        }
    }
    return out;
}

inline void sgd_step(NcmModel& m, const NcmGrad& g, double lr) {
    for (std::size_t s = 0; s < m.nets.size(); ++s)
        for (std::size_t l = 0; l < g[s].size(); ++l) {
            m.nets[s].layers()[l].w -= lr * g[s][l].w;
            m.nets[s].layers()[l].b -= lr * g[s][l].b;
        }
}

struct TrainResult {
    NcmModel model;
    std::vector<double> loss_trace;
};

inline TrainResult train_ncm(const CausalStructure& cs, Label true_label, const TrainConfig& cfg,
                             const MlpConfig& mlp = {}) {
    cfg.validate();
    if (cs.degenerate())
        throw TrainingSkipped("reference node " + std::to_string(index(cs.reference)) + " has no one-hop neighbours");
    TrainResult r{NcmModel::initialized(cs, mlp, derive_seed(cfg.seed, stream::init)), {}};
    r.loss_trace.reserve(cfg.epochs);
    for (std::size_t e = 0; e < cfg.epochs; ++e) {
        const auto batch = sample_latents(cs, derive_seed(cfg.seed, {stream::epoch, e}), cfg.batch_size);
        auto lg = ncm_loss_and_grad(r.model, true_label, batch);
        r.loss_trace.push_back(lg.loss);
        sgd_step(r.model, lg.grad, cfg.learning_rate);
    }
    return r;
}

using GradientHook = std::function<void(NcmGrad&)>;

struct GradientCheckOptions {
    double subset_fraction = 0.05;
    std::uint64_t seed = 0;
    GradientHook hook;                 // applied to the analytic gradient before comparison
    std::size_t* skipped = nullptr;    // receives the number of kink-crossing parameters
};

namespace detail {

using RowL = Eigen::Matrix<long double, 1, Eigen::Dynamic>;
using MatL = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;

// ncm_loss rewritten over per-edge factors a_j, b_j, at extended precision.
// Finite differences of a double loss drown gradients below ~1e-9 in roundoff.
class ExtendedLoss {
public:
    ExtendedLoss(const NcmModel& m, Label true_label, const Eigen::MatrixXd& U)
        : cs_(m.structure), label_(true_label), slot_edge_(m.nets.size()) {
        const auto B = U.cols();
        for (std::size_t j = 0; j < cs_.edge_effects.size(); ++j) {
            const auto& ee = cs_.edge_effects[j];
            const std::size_t pos = *cs_.position(ee.neighbor);
            MatL xa(2, B);
            xa.row(0) = U.row(static_cast<Eigen::Index>(index(cs_.node_effect_ids[pos]))).cast<long double>();
            xa.row(1) = U.row(static_cast<Eigen::Index>(index(ee.id))).cast<long double>();
            MatL xb = xa;
            xb.row(0).setConstant(static_cast<long double>(cs_.observables[pos]));
            xa_.push_back(std::move(xa));
            xb_.push_back(std::move(xb));
            gate_.push_back(cs_.observables[pos] == 1);
            slot_edge_[pos + 1] = j;
        }
        for (std::size_t p = 0; p < cs_.neighborhood.size(); ++p)
            if (cs_.distance[p] > 1 && cs_.observables[p] == 1) far_open_ += 1;
        a_.resize(xa_.size());
        b_.resize(xa_.size());
        signs_.resize(xa_.size());
        for (std::size_t j = 0; j < xa_.size(); ++j) signs_[j] = factors(m.nets[pos_slot(j)], j, a_[j], b_[j]);
    }

    std::optional<std::size_t> edge_of_slot(std::size_t s) const { return slot_edge_[s]; }

    long double base() const { return combine(a_, b_); }

    // Loss with net j replaced by `net`; `kink` reports a changed ReLU pattern.
    long double with_net(std::size_t j, const Mlp& net, bool& kink) const {
        auto a = a_;
        auto b = b_;
        kink = factors(net, j, a[j], b[j]) != signs_[j];
        return combine(a, b);
    }

private:
    std::size_t pos_slot(std::size_t j) const { return *cs_.position(cs_.edge_effects[j].neighbor) + 1; }

    std::vector<bool> factors(const Mlp& net, std::size_t j, RowL& a, RowL& b) const {
        std::vector<bool> signs;
        auto sig = [](long double z) { return sigmoid(z); };
        a = net.forward_as<long double>(xa_[j], &signs).unaryExpr(sig);
        b = net.forward_as<long double>(xb_[j], &signs).unaryExpr(sig);
        return signs;
    }

    long double combine(const std::vector<RowL>& a, const std::vector<RowL>& b) const {
        const Eigen::Index B = xa_.empty() ? 1 : xa_[0].cols();
        auto except = [&](std::optional<std::size_t> skip) {
            RowL p = RowL::Ones(B);
            for (std::size_t j = 0; j < a.size(); ++j)
                if (j != skip) p = p.cwiseProduct(a[j]);
            return p;
        };
        RowL per = far_open_ * except(std::nullopt);
        for (std::size_t i = 0; i < a.size(); ++i)
            if (gate_[i]) per += b[i].cwiseProduct(except(i));
        const long double n = static_cast<long double>(cs_.neighborhood.size()) * static_cast<long double>(B);
        const long double p1 = std::clamp(per.sum() / n, 0.0L, 1.0L);
        const long double p = label_ == 1 ? p1 : 1.0L - p1;
        return -std::log(std::max(p, static_cast<long double>(probability_floor)));
    }

    const CausalStructure& cs_;
    Label label_;
    std::vector<MatL> xa_, xb_;
    std::vector<bool> gate_;
    long double far_open_ = 0;
    std::vector<std::optional<std::size_t>> slot_edge_;
    std::vector<RowL> a_, b_;
    std::vector<std::vector<bool>> signs_;
};

} // namespace detail

// Max over a random parameter subset of |g_a - g_n| / max(|g_a| + |g_n|, 1e-8).
// Parameters whose +-h step flips a ReLU are skipped: central differences are
// meaningless across a kink.
inline double gradient_check(const NcmModel& model, Label true_label, std::span<const LatentSample> samples,
                             double perturbation, const GradientCheckOptions& opt = {}) {
    if (!(perturbation > 0.0 && perturbation <= 1e-2)) throw InputError("perturbation must lie in (0, 1e-2]");
    detail::require_one_hop(model.structure);
    auto analytic = ncm_loss_and_grad(model, true_label, samples).grad;
    if (opt.hook) opt.hook(analytic);
    std::mt19937_64 rng(opt.seed);
    NcmModel probe = model;
    const detail::ExtendedLoss loss(model, true_label,
                                    detail::effects_matrix(samples, model.structure.num_latents()));
    double worst = 0.0;
    std::size_t skipped = 0;
    auto check = [&](std::size_t s, double& theta, double ga) {
        double gn = 0.0; // nets off the one-hop ring never reach the loss
        if (auto j = loss.edge_of_slot(s)) {
            const double saved = theta;
            bool kink_up = false, kink_down = false;
            theta = saved + perturbation;
            const long double up = loss.with_net(*j, probe.nets[s], kink_up);
            theta = saved - perturbation;
            const long double down = loss.with_net(*j, probe.nets[s], kink_down);
            theta = saved;
            if (kink_up || kink_down) {
                ++skipped;
                return;
            }
            gn = static_cast<double>((up - down) / (2.0L * static_cast<long double>(perturbation)));
        }
        worst = std::max(worst, std::abs(ga - gn) / std::max(std::abs(ga) + std::abs(gn), 1e-8));
    };
    auto pick = [&](Eigen::Index size) {
        std::vector<Eigen::Index> all(static_cast<std::size_t>(size)), chosen;
        for (Eigen::Index i = 0; i < size; ++i) all[static_cast<std::size_t>(i)] = i;
        const auto k = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(opt.subset_fraction * size)));
        std::sample(all.begin(), all.end(), std::back_inserter(chosen), k, rng);
        return chosen;
    };
    for (std::size_t s = 0; s < probe.nets.size(); ++s)
        for (std::size_t l = 0; l < probe.nets[s].layers().size(); ++l) {
            auto& L = probe.nets[s].layers()[l];
            for (auto i : pick(L.w.size())) check(s, L.w.data()[i], analytic[s][l].w.data()[i]);
            for (auto i : pick(L.b.size())) check(s, L.b.data()[i], analytic[s][l].b.data()[i]);
        }
    if (opt.skipped) *opt.skipped = skipped;
    return worst;
}

} // namespace cxgnn
