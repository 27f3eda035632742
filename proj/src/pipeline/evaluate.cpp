#include "pipeline/evaluate.hpp"

#include <algorithm>
#include <map>

#include "synth/generator.hpp"
#include "util/error.hpp"
#include "util/log.hpp"

namespace engage::pipeline {

using eval::EvalReport;
using nlohmann::ordered_json;

namespace {

std::vector<const core::Session*> pick(const std::vector<core::Session>& sessions,
                                       const std::vector<int>& idx) {
    std::vector<const core::Session*> out;
    out.reserve(idx.size());
    for (int i : idx) out.push_back(&sessions[i]);
    return out;
}

ordered_json fold_header(size_t fold, const eval::FoldSplit& split,
                         const std::vector<core::Session>& sessions) {
    ordered_json j;
    j["fold"] = fold;
    std::vector<std::string> test_ids;
    for (int i : split.test) test_ids.push_back(sessions[i].session_id);
    j["test_sessions"] = test_ids;
    return j;
}

ordered_json counts_block(const eval::CountedMetrics& c, bool with_accuracy) {
    ordered_json j;
    j["tp"] = c.tp;
    j["fp"] = c.fp;
    j["fn"] = c.fn;
    j["tn"] = c.tn;
    j["precision"] = c.metrics.precision;
    j["recall"] = c.metrics.recall;
    j["f1"] = c.metrics.f1;
    if (with_accuracy) j["accuracy"] = c.metrics.accuracy;
    return j;
}

}  // namespace

EvalReport evaluate_nod(const Corpus& corpus, const eval::FoldsSpec& spec,
                        const EvalOptions& opts) {
    auto folds = eval::make_folds(static_cast<int>(corpus.sessions.size()), spec);
    EvalReport report;
    report.task = "nod";
    nod::NodEventConfig cfg;

    eval::CountedMetrics frame_total, baseline_total;
    nod::MatchCounts event_total;
    for (size_t f = 0; f < folds.size(); ++f) {
        NodTrainOptions topts;
        topts.train.seed = opts.seed + f;
        if (opts.max_epochs > 0) topts.train.max_epochs = opts.max_epochs;
        auto train_set = pick(corpus.sessions, folds[f].train);
        auto valid_set = pick(corpus.sessions, folds[f].valid);
        auto test_set = pick(corpus.sessions, folds[f].test);
        learn::LstmModel model = train_nod(train_set, valid_set, topts);
        auto counts = eval::nod_eval(model, test_set, cfg, opts.threshold);

        frame_total.tp += counts.frame.tp;
        frame_total.fp += counts.frame.fp;
        frame_total.fn += counts.frame.fn;
        frame_total.tn += counts.frame.tn;
        baseline_total.tp += counts.baseline.tp;
        baseline_total.fp += counts.baseline.fp;
        baseline_total.fn += counts.baseline.fn;
        baseline_total.tn += counts.baseline.tn;
        event_total.tp += counts.event.tp;
        event_total.fp += counts.event.fp;
        event_total.fn += counts.event.fn;

        ordered_json fj = fold_header(f, folds[f], corpus.sessions);
        fj["frame"] = counts_block(counts.frame, true);
        eval::CountedMetrics ev;
        ev.tp = counts.event.tp;
        ev.fp = counts.event.fp;
        ev.fn = counts.event.fn;
        ev.metrics = eval::binary_metrics(ev.tp, ev.fp, ev.fn, 0);
        fj["event"] = counts_block(ev, false);
        report.folds.push_back(std::move(fj));
        log_info("nod fold " + std::to_string(f) + " done");
    }
    frame_total.metrics =
        eval::binary_metrics(frame_total.tp, frame_total.fp, frame_total.fn, frame_total.tn);
    baseline_total.metrics = eval::binary_metrics(baseline_total.tp, baseline_total.fp,
                                                  baseline_total.fn, baseline_total.tn);
    eval::CountedMetrics event_pooled;
    event_pooled.tp = event_total.tp;
    event_pooled.fp = event_total.fp;
    event_pooled.fn = event_total.fn;
    event_pooled.metrics = eval::binary_metrics(event_total.tp, event_total.fp, event_total.fn, 0);

    report.rows.push_back(EvalReport::make_row("Baseline (always positive)", baseline_total, true));
    report.rows.push_back(EvalReport::make_row("LSTM (frame-wise)", frame_total, true));
    report.rows.push_back(EvalReport::make_row("LSTM (event-wise)", event_pooled, false));
    return report;
}

EvalReport evaluate_ipu(const Corpus& corpus, ipu::Task task, const eval::FoldsSpec& spec,
                        const EvalOptions& opts) {
    require(opts.feature_mode == ipu::FeatureMode::prosody_only || corpus.lexicon.has_value(),
            ErrorCode::model, "corpus has no lexicon; use prosody-only features");
    auto folds = eval::make_folds(static_cast<int>(corpus.sessions.size()), spec);
    EvalReport report;
    report.task = ipu::to_string(task);

    std::vector<double> pooled_scores;
    std::vector<int> pooled_labels;
    for (size_t f = 0; f < folds.size(); ++f) {
        ipu::IpuTrainOptions topts;
        topts.train.seed = opts.seed + f;
        if (opts.max_epochs > 0) topts.train.max_epochs = opts.max_epochs;
        else topts.train.max_epochs = 60;
        topts.rf_trees = opts.rf_trees;
        // The bundle trainer holds out its own validation sessions.
        std::vector<const core::Session*> train_set = pick(corpus.sessions, folds[f].train);
        for (const core::Session* s : pick(corpus.sessions, folds[f].valid))
            train_set.push_back(s);
        auto bundle = ipu::train_ipu_classifier(train_set, task, opts.feature_mode, topts,
                                           corpus.lexicon_ptr());

        std::vector<double> scores;
        std::vector<int> labels;
        for (const core::Session* s : pick(corpus.sessions, folds[f].test)) {
            auto probs = ipu::classify_session(bundle, s->ipus, corpus.lexicon_ptr());
            for (size_t i = 0; i < probs.size(); ++i) {
                if (!s->ipus[i].label) continue;
                bool pos = task == ipu::Task::laughter
                               ? *s->ipus[i].label == core::IpuLabel::laughter
                               : *s->ipus[i].label == core::IpuLabel::backchannel;
                scores.push_back(probs[i]);
                labels.push_back(pos ? 1 : 0);
            }
        }
        auto counts = eval::threshold_metrics(scores, labels, opts.threshold);
        ordered_json fj = fold_header(f, folds[f], corpus.sessions);
        fj["counts"] = counts_block(counts, true);
        report.folds.push_back(std::move(fj));
        pooled_scores.insert(pooled_scores.end(), scores.begin(), scores.end());
        pooled_labels.insert(pooled_labels.end(), labels.begin(), labels.end());
        log_info(std::string(ipu::to_string(task)) + " fold " + std::to_string(f) + " done");
    }

    auto pooled = eval::threshold_metrics(pooled_scores, pooled_labels, opts.threshold);
    auto baseline = eval::always_positive_baseline(pooled_labels);
    report.rows.push_back(EvalReport::make_row("Baseline (always positive)", baseline, true));
    std::string name = opts.feature_mode == ipu::FeatureMode::prosody_only
                           ? "Prosody only"
                           : "Prosody + linguistic";
    auto row = EvalReport::make_row(name, pooled, true);
    row.with_pr_auc = true;
    row.pr_auc = eval::pr_auc(pooled_scores, pooled_labels);
    report.rows.push_back(row);
    return report;
}

EvalReport evaluate_gaze(const Corpus& corpus) {
    EvalReport report;
    report.task = "gaze";
    std::vector<int> truth_labels;
    std::vector<double> detector_scores;
    for (const core::Session& s : corpus.sessions) {
        require(s.gaze_truth.has_value(), ErrorCode::data,
                "session " + s.session_id + " has no gaze.csv ground truth");
        std::vector<std::int64_t> ts;
        ts.reserve(s.frames.size());
        for (const core::PoseFrame& f : s.frames) ts.push_back(f.timestamp_ms);
        for (const core::Turn& turn : core::robot_turns(s)) {
            bool truth = gaze::gaze_label_from_flags(ts, *s.gaze_truth, turn, corpus.geometry);
            bool detected = gaze::gaze_label_turn(s.frames, turn, corpus.geometry);
            truth_labels.push_back(truth ? 1 : 0);
            detector_scores.push_back(detected ? 1.0 : 0.0);
        }
    }
    auto counts = eval::threshold_metrics(detector_scores, truth_labels, 0.5);
    auto baseline = eval::always_positive_baseline(truth_labels);
    report.rows.push_back(EvalReport::make_row("Baseline (always positive)", baseline, true));
    report.rows.push_back(EvalReport::make_row("Gaze model", counts, true));
    return report;
}

EvalReport evaluate_engagement(const Corpus& corpus, const eval::FoldsSpec& spec,
                               const EvalOptions& opts) {
    auto folds = eval::make_folds(static_cast<int>(corpus.sessions.size()), spec);
    EvalReport report;
    report.task = opts.context ? "engagement (context)" : "engagement";

    std::vector<double> pooled_scores;
    std::vector<int> pooled_labels;
    for (size_t f = 0; f < folds.size(); ++f) {
        std::vector<const core::Session*> train_set = pick(corpus.sessions, folds[f].train);
        for (const core::Session* s : pick(corpus.sessions, folds[f].valid))
            train_set.push_back(s);
        auto records = annotation_records(train_set, corpus.geometry, opts.context);
        engagement::EmConfig em;
        em.K = opts.k;
        em.seed = opts.seed + f;
        em.restarts = opts.restarts;
        auto model = engagement::fit_em(records, opts.context, em);

        for (const core::Session* s : pick(corpus.sessions, folds[f].test)) {
            auto turns = core::robot_turns(*s);
            std::vector<core::BehaviorState> states;
            states.reserve(turns.size());
            for (const core::Turn& t : turns)
                states.push_back(synth::turn_truth_state(*s, t, corpus.geometry));
            std::vector<double> turn_scores;
            if (opts.context) {
                turn_scores = engagement::predict_session_with_context(model, states);
            } else {
                for (const core::BehaviorState& st : states) {
                    engagement::PartialState obs;
                    obs.nod = st.nod;
                    obs.laughter = st.laughter;
                    obs.backchannel = st.backchannel;
                    obs.gaze = st.gaze;
                    turn_scores.push_back(engagement::predict_live(model, obs));
                }
            }
            std::map<std::string, size_t> turn_pos;
            for (size_t t = 0; t < turns.size(); ++t) turn_pos[turns[t].turn_id] = t;
            for (const core::Annotation& a : s->annotations) {
                auto it = turn_pos.find(a.turn_id);
                if (it == turn_pos.end()) continue;
                pooled_scores.push_back(turn_scores[it->second]);
                pooled_labels.push_back(a.engaged);
            }
        }
        ordered_json fj = fold_header(f, folds[f], corpus.sessions);
        fj["records"] = records.size();
        report.folds.push_back(std::move(fj));
        log_info("engagement fold " + std::to_string(f) + " done");
    }

    auto baseline = eval::always_positive_baseline(pooled_labels);
    report.rows.push_back(EvalReport::make_row("Baseline (always positive)", baseline, true));
    auto counts = eval::threshold_metrics(pooled_scores, pooled_labels, 0.5);
    auto row = EvalReport::make_row(opts.context ? "Latent character (context)" : "Latent character",
                                    counts, true);
    row.with_pr_auc = true;
    row.pr_auc = eval::pr_auc(pooled_scores, pooled_labels);
    report.rows.push_back(row);
    return report;
}

}  // namespace engage::pipeline
