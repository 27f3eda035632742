#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace engage::eval {

struct BinaryMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double accuracy = 0.0;
};

// Standard definitions with 0/0 conventions: precision 0 when tp+fp=0,
// recall 0 when tp+fn=0, f1 0 when p+r=0.
BinaryMetrics binary_metrics(std::int64_t tp, std::int64_t fp, std::int64_t fn, std::int64_t tn);

struct CountedMetrics {
    std::int64_t tp = 0, fp = 0, fn = 0, tn = 0;
    BinaryMetrics metrics;
};

// The classifier that always answers positive.
CountedMetrics always_positive_baseline(std::span<const int> labels);

CountedMetrics threshold_metrics(std::span<const double> scores, std::span<const int> labels,
                                 double threshold);

// Average precision: step integral of precision over recall, descending score
// order with ties grouped. Requires at least one positive label.
double pr_auc(std::span<const double> scores, std::span<const int> labels);

}  // namespace engage::eval
