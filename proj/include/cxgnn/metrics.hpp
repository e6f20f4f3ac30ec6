#pragma once

#include <algorithm>
#include <iomanip>
#include <iterator>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cxgnn/error.hpp"
#include "cxgnn/graph.hpp"

namespace cxgnn {

using NodeSet = std::set<NodeId>;

inline std::size_t intersection_size(const NodeSet& a, const NodeSet& b) {
    std::size_t n = 0;
    for (NodeId v : a) n += b.count(v);
    return n;
}

inline double explanation_accuracy(const NodeSet& est, const NodeSet& gt) {
    if (gt.empty()) throw InputError("groundtruth set is empty");
    return static_cast<double>(intersection_size(est, gt)) / static_cast<double>(gt.size());
}

inline double explanation_recall(const NodeSet& est, const NodeSet& gt) {
    if (est.empty()) throw InputError("estimated set is empty");
    return static_cast<double>(intersection_size(est, gt)) / static_cast<double>(est.size());
}

inline bool groundtruth_match(const NodeSet& est, const NodeSet& gt) { return est == gt; }

inline bool approx_match(const NodeSet& est, const NodeSet& gt) {
    if (gt.empty()) throw InputError("groundtruth set is empty");
    const bool subset = std::includes(gt.begin(), gt.end(), est.begin(), est.end());
    // |est| >= 0.6 |gt|, in integers
    return subset && 5 * est.size() >= 3 * gt.size();
}

struct ScoreReport {
    double accuracy = 0.0;
    double recall = 0.0;
    bool exact_match = false;
    bool approx_match = false;
    std::size_t est_size = 0;
    std::size_t gt_size = 0;
    std::size_t intersection = 0;
};

inline ScoreReport score(const NodeSet& est, const NodeSet& gt) {
    return {explanation_accuracy(est, gt), explanation_recall(est, gt), groundtruth_match(est, gt),
            approx_match(est, gt),         est.size(),                  gt.size(),
            intersection_size(est, gt)};
}

struct Summary {
    std::size_t count = 0;
    double accuracy = 0.0;
    double recall = 0.0;
    double exact_match_rate = 0.0;
    double approx_match_rate = 0.0;
};

inline Summary aggregate(const std::vector<ScoreReport>& reports) {
    if (reports.empty()) throw InputError("cannot aggregate an empty report list");
    Summary s;
    s.count = reports.size();
    for (const auto& r : reports) {
        s.accuracy += r.accuracy;
        s.recall += r.recall;
        s.exact_match_rate += r.exact_match ? 1.0 : 0.0;
        s.approx_match_rate += r.approx_match ? 1.0 : 0.0;
    }
    const double n = static_cast<double>(s.count);
    s.accuracy /= n;
    s.recall /= n;
    s.exact_match_rate /= n;
    s.approx_match_rate /= n;
    return s;
}

// Method x dataset table, one column per metric, values in percent.
inline std::string summary_table(const std::string& method, const std::vector<std::pair<std::string, Summary>>& rows) {
    std::ostringstream os;
    os << std::left << std::setw(10) << "method" << std::setw(14) << "dataset" << std::right << std::setw(7) << "n"
       << std::setw(10) << "accuracy" << std::setw(10) << "recall" << std::setw(10) << "gt-match" << std::setw(14)
       << "approx-match" << "\n";
    os << std::fixed << std::setprecision(1);
    for (const auto& [name, s] : rows)
        os << std::left << std::setw(10) << method << std::setw(14) << name << std::right << std::setw(7) << s.count
           << std::setw(10) << 100 * s.accuracy << std::setw(10) << 100 * s.recall << std::setw(10)
           << 100 * s.exact_match_rate << std::setw(14) << 100 * s.approx_match_rate << "\n";
    return os.str();
}

} // namespace cxgnn
