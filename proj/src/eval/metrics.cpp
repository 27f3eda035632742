#include "eval/metrics.hpp"

#include <algorithm>
#include <numeric>

#include "util/error.hpp"

namespace engage::eval {

BinaryMetrics binary_metrics(std::int64_t tp, std::int64_t fp, std::int64_t fn, std::int64_t tn) {
    require(tp >= 0 && fp >= 0 && fn >= 0 && tn >= 0, ErrorCode::usage,
            "counts must be non-negative");
    BinaryMetrics m;
    m.precision = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    m.recall = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    m.f1 = m.precision + m.recall > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
                                        : 0.0;
    std::int64_t total = tp + fp + fn + tn;
    m.accuracy = total > 0 ? static_cast<double>(tp + tn) / static_cast<double>(total) : 0.0;
    return m;
}

CountedMetrics always_positive_baseline(std::span<const int> labels) {
    CountedMetrics c;
    for (int y : labels) {
        require(y == 0 || y == 1, ErrorCode::data, "labels must be 0/1");
        y ? ++c.tp : ++c.fp;
    }
    c.metrics = binary_metrics(c.tp, c.fp, c.fn, c.tn);
    return c;
}

CountedMetrics threshold_metrics(std::span<const double> scores, std::span<const int> labels,
                                 double threshold) {
    require(scores.size() == labels.size(), ErrorCode::usage, "scores/labels size mismatch");
    CountedMetrics c;
    for (size_t i = 0; i < scores.size(); ++i) {
        bool pred = scores[i] >= threshold;
        bool truth = labels[i] == 1;
        if (pred && truth) ++c.tp;
        else if (pred) ++c.fp;
        else if (truth) ++c.fn;
        else ++c.tn;
    }
    c.metrics = binary_metrics(c.tp, c.fp, c.fn, c.tn);
    return c;
}

double pr_auc(std::span<const double> scores, std::span<const int> labels) {
    require(scores.size() == labels.size(), ErrorCode::usage, "scores/labels size mismatch");
    std::int64_t n_pos = 0;
    for (int y : labels) {
        require(y == 0 || y == 1, ErrorCode::data, "labels must be 0/1");
        n_pos += y;
    }
    require(n_pos > 0, ErrorCode::data, "pr_auc needs at least one positive label");

    std::vector<size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return scores[a] > scores[b]; });

    double auc = 0.0;
    std::int64_t tp = 0, fp = 0;
    double prev_recall = 0.0;
    size_t i = 0;
    while (i < order.size()) {
        size_t j = i;
        // Group tied scores: one threshold step per distinct value.
        while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
        for (size_t k = i; k <= j; ++k) labels[order[k]] ? ++tp : ++fp;
        double recall = static_cast<double>(tp) / static_cast<double>(n_pos);
        double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
        auc += (recall - prev_recall) * precision;
        prev_recall = recall;
        i = j + 1;
    }
    return auc;
}

}  // namespace engage::eval
