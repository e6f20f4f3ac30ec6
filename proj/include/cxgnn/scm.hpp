#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "cxgnn/error.hpp"
#include "cxgnn/graph.hpp"

namespace cxgnn {

using Rational = boost::multiprecision::cpp_rational;

inline std::string to_string(const Rational& r) {
    if (denominator(r) == 1) return numerator(r).str();
    return numerator(r).str() + "/" + denominator(r).str();
}

inline double to_double(const Rational& r) { return r.convert_to<double>(); }

class BoolExpr {
public:
    enum class Op : std::uint8_t { Const, Var, Not, And, Or, Xor };

    BoolExpr() : BoolExpr(constant(false)) {}

    static BoolExpr constant(bool b) { return BoolExpr(Node{Op::Const, b, {}, {}}); }
    static BoolExpr var(std::string name) { return BoolExpr(Node{Op::Var, false, std::move(name), {}}); }
    static BoolExpr make(Op op, std::vector<BoolExpr> kids) {
        if (op == Op::Not && kids.size() != 1) throw InputError("not takes exactly one operand");
        if ((op == Op::And || op == Op::Or || op == Op::Xor) && kids.size() < 2)
            throw InputError("and/or/xor take at least two operands");
        if (op == Op::Const || op == Op::Var) throw InputError("make() is for connectives");
        return BoolExpr(Node{op, false, {}, std::move(kids)});
    }

    friend BoolExpr operator!(BoolExpr a) { return make(Op::Not, {std::move(a)}); }
    friend BoolExpr operator&(BoolExpr a, BoolExpr b) { return make(Op::And, {std::move(a), std::move(b)}); }
    friend BoolExpr operator|(BoolExpr a, BoolExpr b) { return make(Op::Or, {std::move(a), std::move(b)}); }
    friend BoolExpr operator^(BoolExpr a, BoolExpr b) { return make(Op::Xor, {std::move(a), std::move(b)}); }

    Op op() const { return n_->op; }
    bool value() const { return n_->value; }
    const std::string& name() const { return n_->name; }
    std::span<const BoolExpr> children() const { return n_->kids; }

    bool operator==(const BoolExpr& o) const {
        if (n_ == o.n_) return true;
        if (op() != o.op() || value() != o.value() || name() != o.name()) return false;
        return std::equal(children().begin(), children().end(), o.children().begin(), o.children().end());
    }

    void collect_vars(std::set<std::string>& out) const {
        if (op() == Op::Var) out.insert(name());
        for (const auto& c : children()) c.collect_vars(out);
    }

    std::string str() const {
        switch (op()) {
        case Op::Const: return value() ? "1" : "0";
        case Op::Var: return name();
        case Op::Not: return "!" + children()[0].str();
        default: break;
        }
        const char* sym = op() == Op::And ? " & " : op() == Op::Or ? " | " : " ^ ";
        std::string s = "(";
        for (std::size_t i = 0; i < children().size(); ++i) s += (i ? sym : "") + children()[i].str();
        return s + ")";
    }

private:
    struct Node {
        Op op;
        bool value;
        std::string name;
        std::vector<BoolExpr> kids;
    };
    explicit BoolExpr(Node n) : n_(std::make_shared<const Node>(std::move(n))) {}
    std::shared_ptr<const Node> n_;
};

// X = value as an expression.
inline BoolExpr is(const std::string& var, bool value) {
    return value ? BoolExpr::var(var) : !BoolExpr::var(var);
}

inline BoolExpr conjunction(std::span<const BoolExpr> xs) {
    if (xs.empty()) return BoolExpr::constant(true);
    BoolExpr acc = xs[0];
    for (std::size_t i = 1; i < xs.size(); ++i) acc = acc & xs[i];
    return acc;
}

struct Intervention {
    std::map<std::string, bool> assignments;
};

// Stack-machine form of a BoolExpr over value slots (exogenous first, then endogenous).
struct Program {
    enum class Code : std::uint8_t { Const, Load, Not, And, Or, Xor };
    struct Instr {
        Code code;
        std::uint32_t arg; // slot, constant value, or operand count
    };
    std::vector<Instr> code;

    bool run(const std::vector<std::uint8_t>& slots, std::vector<std::uint8_t>& stack) const {
        stack.clear();
        for (const Instr& in : code) {
            switch (in.code) {
            case Code::Const: stack.push_back(static_cast<std::uint8_t>(in.arg)); break;
            case Code::Load: stack.push_back(slots[in.arg]); break;
            case Code::Not: stack.back() ^= 1; break;
            case Code::And:
            case Code::Or:
            case Code::Xor: {
                std::uint8_t acc = stack.back();
                stack.pop_back();
                for (std::uint32_t i = 1; i < in.arg; ++i) {
                    std::uint8_t x = stack.back();
                    stack.pop_back();
                    acc = in.code == Code::And ? (acc & x) : in.code == Code::Or ? (acc | x) : (acc ^ x);
                }
                stack.push_back(acc);
                break;
            }
            }
        }
        return stack.back() != 0;
    }
};

class ExactScm {
public:
    ExactScm(std::vector<std::string> exogenous, std::vector<std::string> endogenous,
             std::vector<BoolExpr> mechanisms, std::vector<Rational> table = {})
        : exo_(std::move(exogenous)), endo_(std::move(endogenous)), mech_(std::move(mechanisms)),
          table_(std::move(table)) {
        if (mech_.size() != endo_.size())
            throw InputError("every endogenous variable needs exactly one mechanism");
        std::set<std::string> names;
        for (const auto& n : exo_)
            if (!names.insert(n).second) throw InputError("duplicate variable " + n);
        for (const auto& n : endo_)
            if (!names.insert(n).second) throw InputError("duplicate variable " + n);
        if (exo_.size() > 62) throw TractabilityError("more than 62 exogenous variables");
        if (!table_.empty()) {
            if (table_.size() != (std::size_t{1} << exo_.size()))
                throw InputError("probability table must have 2^|U| entries");
            Rational total = 0;
            for (const auto& p : table_) {
                if (p < 0) throw InputError("negative probability in table");
                total += p;
            }
            if (total != 1) throw InputError("probability table sums to " + to_string(total) + ", not 1");
        }
        deps_.resize(endo_.size());
        for (std::size_t i = 0; i < endo_.size(); ++i) {
            std::set<std::string> vars;
            mech_[i].collect_vars(vars);
            for (const auto& v : vars) {
                if (v == endo_[i]) throw InputError("mechanism of " + v + " references itself");
                if (!names.contains(v)) throw InputError("mechanism of " + endo_[i] + " references undeclared " + v);
                if (auto j = endogenous_index(v)) deps_[i].push_back(*j);
            }
        }
        topo_sort();
        for (const auto& m : mech_) programs_.push_back(compile(m));
    }

    const std::vector<std::string>& exogenous() const { return exo_; }
    const std::vector<std::string>& endogenous() const { return endo_; }
    const std::vector<BoolExpr>& mechanisms() const { return mech_; }
    const std::vector<std::size_t>& order() const { return order_; }
    const std::vector<Rational>& table() const { return table_; }
    bool uniform() const { return table_.empty(); }
    std::size_t num_rows() const { return std::size_t{1} << exo_.size(); }
    const Program& program(std::size_t endo) const { return programs_[endo]; }

    Rational row_probability(std::uint64_t row) const {
        if (uniform()) return Rational(1, boost::multiprecision::cpp_int(1) << exo_.size());
        return table_.at(row);
    }

    std::optional<std::size_t> exogenous_index(std::string_view name) const {
        auto it = std::find(exo_.begin(), exo_.end(), name);
        if (it == exo_.end()) return std::nullopt;
        return static_cast<std::size_t>(it - exo_.begin());
    }
    std::optional<std::size_t> endogenous_index(std::string_view name) const {
        auto it = std::find(endo_.begin(), endo_.end(), name);
        if (it == endo_.end()) return std::nullopt;
        return static_cast<std::size_t>(it - endo_.begin());
    }

    std::uint32_t slot(std::string_view name) const {
        if (auto i = exogenous_index(name)) return static_cast<std::uint32_t>(*i);
        if (auto i = endogenous_index(name)) return static_cast<std::uint32_t>(exo_.size() + *i);
        throw InputError("undeclared variable " + std::string(name));
    }

    Program compile(const BoolExpr& e) const {
        Program p;
        emit(e, p);
        return p;
    }

    bool operator==(const ExactScm& o) const {
        return exo_ == o.exo_ && endo_ == o.endo_ && mech_ == o.mech_ && table_ == o.table_;
    }

private:
    void emit(const BoolExpr& e, Program& p) const {
        using C = Program::Code;
        switch (e.op()) {
        case BoolExpr::Op::Const: p.code.push_back({C::Const, e.value() ? 1u : 0u}); return;
        case BoolExpr::Op::Var: p.code.push_back({C::Load, slot(e.name())}); return;
        case BoolExpr::Op::Not:
            emit(e.children()[0], p);
            p.code.push_back({C::Not, 1});
            return;
        default: break;
        }
        for (const auto& c : e.children()) emit(c, p);
        C code = e.op() == BoolExpr::Op::And ? C::And : e.op() == BoolExpr::Op::Or ? C::Or : C::Xor;
        p.code.push_back({code, static_cast<std::uint32_t>(e.children().size())});
    }

    // Kahn's algorithm, lowest declared index first among ready variables.
    void topo_sort() {
        std::vector<std::size_t> pending(endo_.size());
        std::vector<std::vector<std::size_t>> users(endo_.size());
        for (std::size_t i = 0; i < endo_.size(); ++i) {
            pending[i] = deps_[i].size();
            for (auto d : deps_[i]) users[d].push_back(i);
        }
        std::set<std::size_t> ready;
        for (std::size_t i = 0; i < endo_.size(); ++i)
            if (pending[i] == 0) ready.insert(i);
        while (!ready.empty()) {
            auto i = *ready.begin();
            ready.erase(ready.begin());
            order_.push_back(i);
            for (auto u : users[i])
                if (--pending[u] == 0) ready.insert(u);
        }
        if (order_.size() != endo_.size()) throw InputError("mechanism dependencies are cyclic");
    }

    std::vector<std::string> exo_;
    std::vector<std::string> endo_;
    std::vector<BoolExpr> mech_;
    std::vector<Rational> table_;
    std::vector<std::vector<std::size_t>> deps_;
    std::vector<std::size_t> order_;
    std::vector<Program> programs_;
};

namespace detail {

struct Forced {
    std::vector<std::int8_t> value; // -1 = not intervened
};

inline Forced resolve(const ExactScm& scm, const Intervention& iv) {
    Forced f{std::vector<std::int8_t>(scm.endogenous().size(), -1)};
    for (const auto& [name, val] : iv.assignments) {
        auto i = scm.endogenous_index(name);
        if (!i) throw InputError("intervention on non-endogenous variable " + name);
        f.value[*i] = val ? 1 : 0;
    }
    return f;
}

// Fills the endogenous slots of the mutilated system for one exogenous row.
inline void solve(const ExactScm& scm, const Forced& f, std::vector<std::uint8_t>& slots,
                  std::vector<std::uint8_t>& stack) {
    const std::size_t n = scm.exogenous().size();
    for (std::size_t i : scm.order())
        slots[n + i] = f.value[i] >= 0 ? static_cast<std::uint8_t>(f.value[i])
                                       : static_cast<std::uint8_t>(scm.program(i).run(slots, stack));
}

// Calls fn(row, slots) for every exogenous row.
template <class Fn>
void enumerate(const ExactScm& scm, const Intervention& iv, Fn&& fn) {
    if (scm.exogenous().size() > 30)
        throw TractabilityError(std::to_string(scm.exogenous().size()) +
                                " exogenous variables are too many to enumerate");
    const auto forced = resolve(scm, iv);
    const std::size_t n = scm.exogenous().size();
    std::vector<std::uint8_t> slots(n + scm.endogenous().size());
    std::vector<std::uint8_t> stack;
    stack.reserve(64);
    for (std::uint64_t row = 0; row < scm.num_rows(); ++row) {
        for (std::size_t b = 0; b < n; ++b) slots[b] = static_cast<std::uint8_t>((row >> b) & 1u);
        solve(scm, forced, slots, stack);
        fn(row, slots);
    }
}

// Probability mass of rows satisfying each predicate, summed exactly.
class MassCounter {
public:
    explicit MassCounter(const ExactScm& scm) : scm_(scm) {}
    void add(std::uint64_t row) {
        if (scm_.uniform()) ++count_;
        else mass_ += scm_.table()[row];
    }
    Rational total() const {
        if (scm_.uniform())
            return Rational(boost::multiprecision::cpp_int(count_),
                            boost::multiprecision::cpp_int(1) << scm_.exogenous().size());
        return mass_;
    }

private:
    const ExactScm& scm_;
    std::uint64_t count_ = 0;
    Rational mass_ = 0;
};

} // namespace detail

// Row encoding: bit i of the row index is the value of exogenous variable i.
inline std::uint64_t row_of(const ExactScm& scm, const std::map<std::string, bool>& u) {
    std::uint64_t row = 0;
    for (const auto& [name, val] : u)
        if (!scm.exogenous_index(name)) throw InputError("unknown exogenous variable " + name);
    for (std::size_t i = 0; i < scm.exogenous().size(); ++i) {
        auto it = u.find(scm.exogenous()[i]);
        if (it == u.end()) throw InputError("missing value for exogenous variable " + scm.exogenous()[i]);
        if (it->second) row |= std::uint64_t{1} << i;
    }
    return row;
}

inline std::map<std::string, bool> evaluate(const ExactScm& scm, const std::map<std::string, bool>& u,
                                            const Intervention& iv = {}) {
    const auto row = row_of(scm, u);
    const auto forced = detail::resolve(scm, iv);
    const std::size_t n = scm.exogenous().size();
    std::vector<std::uint8_t> slots(n + scm.endogenous().size()), stack;
    for (std::size_t b = 0; b < n; ++b) slots[b] = static_cast<std::uint8_t>((row >> b) & 1u);
    detail::solve(scm, forced, slots, stack);
    std::map<std::string, bool> out;
    for (std::size_t i = 0; i < scm.endogenous().size(); ++i) out[scm.endogenous()[i]] = slots[n + i] != 0;
    return out;
}

inline Rational interventional_probability(const ExactScm& scm, const BoolExpr& event,
                                           const Intervention& iv = {}) {
    const Program ev = scm.compile(event);
    detail::MassCounter hit(scm);
    std::vector<std::uint8_t> stack;
    detail::enumerate(scm, iv, [&](std::uint64_t row, const std::vector<std::uint8_t>& slots) {
        if (ev.run(slots, stack)) hit.add(row);
    });
    return hit.total();
}

inline Rational probability(const ExactScm& scm, const BoolExpr& event) {
    return interventional_probability(scm, event, {});
}

// P(event | given), optionally inside the mutilated system of iv.
inline Rational conditional_probability(const ExactScm& scm, const BoolExpr& event, const BoolExpr& given,
                                        const Intervention& iv = {}) {
    const Program ev = scm.compile(event), gv = scm.compile(given);
    detail::MassCounter joint(scm), cond(scm);
    std::vector<std::uint8_t> stack;
    detail::enumerate(scm, iv, [&](std::uint64_t row, const std::vector<std::uint8_t>& slots) {
        if (!gv.run(slots, stack)) return;
        cond.add(row);
        if (ev.run(slots, stack)) joint.add(row);
    });
    const Rational pg = cond.total();
    if (pg == 0) throw UndefinedConditionalError("conditioning event " + given.str() + " has probability zero");
    return joint.total() / pg;
}

// Reference mechanism ((!(x1 & ... & xm) ^ u_v1) | u_v,x1 | ... | u_v,xm) ^ u_v2 over the
// one-hop neighbours x; neighbours carry !u_x & !u_v,x (one hop) or !u_x (further out).
namespace detail {

struct ScmNames {
    std::string ref, state1, state2;
    std::vector<std::string> nodes, node_effects;
    std::vector<std::optional<std::string>> edge_effects;
};

inline ExactScm assemble(const ScmNames& nm) {
    using E = BoolExpr;
    std::vector<std::string> exo{nm.state1, nm.state2};
    for (const auto& e : nm.edge_effects)
        if (e) exo.push_back(*e);
    exo.insert(exo.end(), nm.node_effects.begin(), nm.node_effects.end());

    std::vector<E> adjacent, edges;
    for (std::size_t i = 0; i < nm.nodes.size(); ++i)
        if (nm.edge_effects[i]) {
            adjacent.push_back(E::var(nm.nodes[i]));
            edges.push_back(E::var(*nm.edge_effects[i]));
        }
    E inner = !conjunction(adjacent) ^ E::var(nm.state1);
    for (const auto& e : edges) inner = inner | e;
    E f_ref = inner ^ E::var(nm.state2);

    std::vector<std::string> endo{nm.ref};
    std::vector<E> mech{f_ref};
    for (std::size_t i = 0; i < nm.nodes.size(); ++i) {
        endo.push_back(nm.nodes[i]);
        E f = !E::var(nm.node_effects[i]);
        if (nm.edge_effects[i]) f = f & !E::var(*nm.edge_effects[i]);
        mech.push_back(f);
    }
    return ExactScm(std::move(exo), std::move(endo), std::move(mech));
}

} // namespace detail

inline ExactScm scm_from_causal_structure(const CausalStructure& cs, const Graph& g, std::size_t latent_budget = 20) {
    if (!g.has_node(cs.reference)) throw InputError("structure reference is not a node of the graph");
    const std::size_t count = 2 + cs.num_latents();
    if (count > latent_budget)
        throw TractabilityError("structure needs " + std::to_string(count) + " binary latents, budget is " +
                                std::to_string(latent_budget));
    detail::ScmNames nm;
    nm.ref = node_name(cs.reference);
    nm.state1 = "u_" + nm.ref + "1";
    nm.state2 = "u_" + nm.ref + "2";
    for (NodeId x : cs.neighborhood) {
        auto name = node_name(x);
        nm.nodes.push_back(name);
        nm.node_effects.push_back("u_" + name);
        nm.edge_effects.push_back(cs.edge_effect_of(x) ? std::optional("u_" + nm.ref + "," + name) : std::nullopt);
    }
    return detail::assemble(nm);
}

// Four-node example: A adjacent to B and C, B adjacent to D.
inline Graph toy_graph() {
    return Graph(4, {1, 1, 1, 0}, {Edge(NodeId{0}, NodeId{1}), Edge(NodeId{0}, NodeId{2}), Edge(NodeId{1}, NodeId{3})});
}

inline ExactScm build_toy_example() {
    using E = BoolExpr;
    const E B = E::var("B"), C = E::var("C");
    const E uA1 = E::var("u_A1"), uA2 = E::var("u_A2"), uAB = E::var("u_A,B"), uAC = E::var("u_A,C");
    const E uB = E::var("u_B"), uC = E::var("u_C"), uD = E::var("u_D");
    return ExactScm({"u_A1", "u_A2", "u_A,B", "u_A,C", "u_B", "u_C", "u_D"}, {"A", "B", "C", "D"},
                    {
                        (((!(B & C) ^ uA1) | uAB) | uAC) ^ uA2,
                        (!uB) & (!uAB),
                        (!uC) & (!uAC),
                        !uD,
                    });
}

} // namespace cxgnn
