#include "eval/harness.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "util/error.hpp"

namespace engage::eval {

using nlohmann::ordered_json;

FoldsSpec FoldsSpec::parse(const std::string& spec) {
    FoldsSpec out;
    if (spec == "loso") {
        out.loso = true;
        out.test_per_fold = 1;
        out.valid_per_fold = 1;
        return out;
    }
    int f = 0, t = 0, v = 0;
    char c1 = 0, c2 = 0;
    std::istringstream ss(spec);
    ss >> f >> c1 >> t >> c2 >> v;
    require(ss && ss.eof() && c1 == ':' && c2 == ':', ErrorCode::usage,
            "folds spec must be 'folds:test:valid' (e.g. 10:2:2) or 'loso', got '" + spec + "'");
    require(f >= 1 && t >= 1 && v >= 0, ErrorCode::usage, "folds spec values out of range");
    out.n_folds = f;
    out.test_per_fold = t;
    out.valid_per_fold = v;
    return out;
}

std::vector<FoldSplit> make_folds(int n_sessions, const FoldsSpec& spec_in) {
    FoldsSpec spec = spec_in;
    if (spec.loso) spec.n_folds = n_sessions;
    require(n_sessions >= 2, ErrorCode::usage, "need at least 2 sessions");
    require(spec.n_folds >= 1, ErrorCode::usage, "need at least 1 fold");
    require(spec.n_folds * spec.test_per_fold >= n_sessions, ErrorCode::usage,
            "folds spec infeasible: test chunks cannot cover all sessions");
    require(spec.n_folds <= n_sessions, ErrorCode::usage,
            "folds spec infeasible: more folds than sessions");

    std::vector<FoldSplit> folds;
    int next = 0;
    for (int f = 0; f < spec.n_folds; ++f) {
        int remaining_sessions = n_sessions - next;
        int remaining_folds = spec.n_folds - f;
        require(remaining_sessions >= remaining_folds, ErrorCode::usage,
                "folds spec infeasible: ran out of sessions");
        int take = std::min(spec.test_per_fold, remaining_sessions - (remaining_folds - 1));
        FoldSplit split;
        for (int i = 0; i < take; ++i) split.test.push_back(next + i);

        // A remainder fold shrinks its validation set in proportion.
        int want_valid = spec.valid_per_fold;
        if (take < spec.test_per_fold && spec.valid_per_fold > 0)
            want_valid = static_cast<int>(
                std::ceil(static_cast<double>(spec.valid_per_fold) * take / spec.test_per_fold));
        require(n_sessions - take - want_valid >= 1, ErrorCode::usage,
                "folds spec infeasible: no training sessions left");
        for (int i = 0; i < want_valid; ++i)
            split.valid.push_back((next + take + i) % n_sessions);
        for (int s = 0; s < n_sessions; ++s) {
            bool used = false;
            for (int t : split.test) used |= t == s;
            for (int v : split.valid) used |= v == s;
            if (!used) split.train.push_back(s);
        }
        folds.push_back(std::move(split));
        next += take;
    }
    require(next == n_sessions, ErrorCode::usage,
            "folds spec infeasible: test chunks do not partition the session set");
    return folds;
}

NodEvalCounts nod_eval(const learn::LstmModel& model,
                       std::span<const core::Session* const> sessions,
                       const nod::NodEventConfig& cfg, double threshold) {
    NodEvalCounts out;
    std::vector<double> scores;
    std::vector<int> labels;
    for (const core::Session* s : sessions) {
        auto features = nod::extract_nod_features(s->frames);
        auto windows = nod::make_windows(features, s->nod_truth, cfg.window_len);
        auto frame_scores = nod::score_frames(model, features, cfg.window_len);
        for (size_t i = 0; i < frame_scores.scores.size(); ++i) {
            scores.push_back(frame_scores.scores[i]);
            labels.push_back(windows.y[i]);
        }
        auto events = nod::extract_nod_events(frame_scores, cfg, threshold);
        auto counts = nod::match_events(events, s->nod_truth);
        out.event.tp += counts.tp;
        out.event.fp += counts.fp;
        out.event.fn += counts.fn;
    }
    out.frame = threshold_metrics(scores, labels, threshold);
    out.baseline = always_positive_baseline(labels);
    return out;
}

EvalReport::Row EvalReport::make_row(const std::string& name, const CountedMetrics& c,
                                     bool with_accuracy) {
    Row r;
    r.name = name;
    r.tp = c.tp;
    r.fp = c.fp;
    r.fn = c.fn;
    r.tn = c.tn;
    r.metrics = c.metrics;
    r.with_accuracy = with_accuracy;
    return r;
}

ordered_json EvalReport::to_json() const {
    ordered_json j;
    j["task"] = task;
    ordered_json pooled = ordered_json::array();
    for (const Row& r : rows) {
        ordered_json row;
        row["name"] = r.name;
        row["tp"] = r.tp;
        row["fp"] = r.fp;
        row["fn"] = r.fn;
        row["tn"] = r.tn;
        row["precision"] = r.metrics.precision;
        row["recall"] = r.metrics.recall;
        row["f1"] = r.metrics.f1;
        if (r.with_accuracy) row["accuracy"] = r.metrics.accuracy;
        if (r.with_pr_auc) row["pr_auc"] = r.pr_auc;
        pooled.push_back(std::move(row));
    }
    j["pooled"] = std::move(pooled);
    j["folds"] = folds;
    return j;
}

void EvalReport::print(std::ostream& os) const {
    os << "Task: " << task << '\n';
    size_t width = 20;
    for (const Row& r : rows) width = std::max(width, r.name.size() + 2);
    os << std::left << std::setw(static_cast<int>(width)) << "Model"
       << "Prec.  Rec.   F1     Acc.\n";
    os << std::setprecision(3) << std::fixed;
    for (const Row& r : rows) {
        os << std::left << std::setw(static_cast<int>(width)) << r.name << r.metrics.precision
           << "  " << r.metrics.recall << "  " << r.metrics.f1 << "  ";
        if (r.with_accuracy) os << r.metrics.accuracy;
        else os << "-";
        if (r.with_pr_auc) os << "  (PR-AUC " << r.pr_auc << ")";
        os << '\n';
    }
    os.unsetf(std::ios::fixed);
}

void EvalReport::save(const std::filesystem::path& file) const {
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) fail_io("cannot open " + file.string() + " for writing");
    out << to_json().dump(2) << '\n';
    if (!out) fail_io("write failure on " + file.string());
}

}  // namespace engage::eval
