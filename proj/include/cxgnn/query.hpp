#pragma once

#include <cctype>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cxgnn/error.hpp"
#include "cxgnn/scm.hpp"

namespace cxgnn {

// P(event | given, do(...)). Event and given are conjunctions of X=0/1 terms.
struct Query {
    BoolExpr event;
    std::optional<BoolExpr> given;
    Intervention iv;
};

namespace detail {

class QueryParser {
public:
    explicit QueryParser(std::string_view text) {
        for (char c : text)
            if (!std::isspace(static_cast<unsigned char>(c))) s_.push_back(c);
    }

    Query parse() {
        Query q;
        expect("P(");
        q.event = conjunction(assignments());
        if (accept('|')) {
            std::vector<BoolExpr> given;
            do {
                if (accept_word("do(")) {
                    auto terms = raw_assignments();
                    for (auto& [name, val] : terms)
                        if (!q.iv.assignments.emplace(name, val).second)
                            fail("variable " + name + " intervened twice");
                    expect(")");
                } else {
                    auto [name, val] = assignment();
                    given.push_back(is(name, val));
                }
            } while (accept(','));
            if (!given.empty()) q.given = conjunction(given);
        }
        expect(")");
        if (pos_ != s_.size()) fail("trailing input");
        return q;
    }

private:
    std::vector<BoolExpr> assignments() {
        std::vector<BoolExpr> out;
        for (auto& [name, val] : raw_assignments()) out.push_back(is(name, val));
        return out;
    }

    std::vector<std::pair<std::string, bool>> raw_assignments() {
        std::vector<std::pair<std::string, bool>> out{assignment()};
        while (peek(',') && !lookahead_do()) {
            ++pos_;
            out.push_back(assignment());
        }
        return out;
    }

    bool lookahead_do() const { return s_.compare(pos_ + 1, 3, "do(") == 0; }

    std::pair<std::string, bool> assignment() {
        std::string name;
        while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
            name.push_back(s_[pos_++]);
        if (name.empty() || std::isdigit(static_cast<unsigned char>(name[0]))) fail("expected a variable name");
        expect("=");
        if (accept('1')) return {name, true};
        if (accept('0')) return {name, false};
        fail("expected 0 or 1");
        return {};
    }

    bool peek(char c) const { return pos_ < s_.size() && s_[pos_] == c; }
    bool accept(char c) {
        if (!peek(c)) return false;
        ++pos_;
        return true;
    }
    bool accept_word(std::string_view w) {
        if (s_.compare(pos_, w.size(), w) != 0) return false;
        pos_ += w.size();
        return true;
    }
    void expect(std::string_view w) {
        if (!accept_word(w)) fail("expected '" + std::string(w) + "'");
    }
    [[noreturn]] void fail(const std::string& what) const {
        throw InputError("query parse error at position " + std::to_string(pos_) + ": " + what);
    }

    std::string s_;
    std::size_t pos_ = 0;
};

} // namespace detail

inline Query parse_query(std::string_view text) { return detail::QueryParser(text).parse(); }

inline Rational answer(const ExactScm& scm, const Query& q) {
    if (q.given) return conditional_probability(scm, q.event, *q.given, q.iv);
    return interventional_probability(scm, q.event, q.iv);
}

} // namespace cxgnn
