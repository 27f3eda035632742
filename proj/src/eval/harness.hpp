#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "core/types.hpp"
#include "eval/metrics.hpp"
#include "learn/lstm.hpp"
#include "nod/nod.hpp"

namespace engage::eval {

// Session-level cross-validation folds. The spec string is
// "folds:test:valid" (e.g. "10:2:2") or "loso" for leave-one-session-out.
struct FoldsSpec {
    int n_folds = 0;
    int test_per_fold = 0;
    int valid_per_fold = 0;
    bool loso = false;

    static FoldsSpec parse(const std::string& spec);
};

struct FoldSplit {
    std::vector<int> train, valid, test;
};

// Deterministic partition in session order: fold i takes the next chunk of
// test sessions; a short remainder fold scales its validation set down
// proportionally. Every session lands in exactly one test fold.
std::vector<FoldSplit> make_folds(int n_sessions, const FoldsSpec& spec);

struct NodEvalCounts {
    CountedMetrics frame;     // window-level, threshold applied per frame
    nod::MatchCounts event;   // event-level after run extraction + matching
    CountedMetrics baseline;  // always-positive on the window labels
};

NodEvalCounts nod_eval(const learn::LstmModel& model,
                       std::span<const core::Session* const> sessions,
                       const nod::NodEventConfig& cfg, double threshold);

// Report with pooled rows plus optional per-fold blocks; prints a table in
// the usual "Prec. Rec. F1 Acc." layout.
struct EvalReport {
    struct Row {
        std::string name;
        std::int64_t tp = 0, fp = 0, fn = 0, tn = 0;
        BinaryMetrics metrics;
        bool with_accuracy = true;
        bool with_pr_auc = false;
        double pr_auc = 0.0;
    };

    std::string task;
    std::vector<Row> rows;
    nlohmann::ordered_json folds = nlohmann::ordered_json::array();

    static Row make_row(const std::string& name, const CountedMetrics& c, bool with_accuracy);
    nlohmann::ordered_json to_json() const;
    void print(std::ostream& os) const;
    void save(const std::filesystem::path& file) const;
};

}  // namespace engage::eval
