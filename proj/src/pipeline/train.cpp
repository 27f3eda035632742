#include "pipeline/train.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <random>

#include "core/session_io.hpp"
#include "nod/nod.hpp"
#include "synth/generator.hpp"
#include "util/error.hpp"
#include "util/log.hpp"

namespace engage::pipeline {

namespace fs = std::filesystem;

Corpus load_corpus(const fs::path& dir) {
    Corpus c;
    c.root = dir;
    for (const fs::path& sdir : synth::list_session_dirs(dir))
        c.sessions.push_back(core::load_session(sdir));
    if (fs::exists(dir / "lexicon.jsonl") && fs::exists(dir / "pos_tags.txt"))
        c.lexicon = core::load_lexicon(dir / "lexicon.jsonl", dir / "pos_tags.txt");
    if (fs::exists(dir / "geometry.json")) c.geometry = gaze::load_geometry(dir / "geometry.json");
    else c.geometry = synth::default_geometry();
    log_info("corpus " + dir.string() + ": " + std::to_string(c.sessions.size()) + " sessions");
    return c;
}

namespace {

learn::SequenceDataset pool_windows(std::span<const core::Session* const> sessions,
                                    size_t cap, std::uint64_t seed) {
    learn::SequenceDataset pooled;
    pooled.seq_len = nod::kWindowLen;
    pooled.input_dim = nod::kFeatureDim;
    for (const core::Session* s : sessions) {
        auto features = nod::extract_nod_features(s->frames);
        auto windows = nod::make_windows(features, s->nod_truth);
        for (size_t i = 0; i < windows.x.size(); ++i) {
            pooled.x.push_back(std::move(windows.x[i]));
            pooled.y.push_back(windows.y[i]);
        }
    }
    if (cap > 0 && pooled.x.size() > cap) {
        std::vector<size_t> order(pooled.x.size());
        std::iota(order.begin(), order.end(), 0);
        std::mt19937_64 rng(seed ^ 0xa5a5a5a55a5a5a5aULL);
        std::shuffle(order.begin(), order.end(), rng);
        order.resize(cap);
        std::sort(order.begin(), order.end());
        learn::SequenceDataset sub;
        sub.seq_len = pooled.seq_len;
        sub.input_dim = pooled.input_dim;
        for (size_t idx : order) {
            sub.x.push_back(std::move(pooled.x[idx]));
            sub.y.push_back(pooled.y[idx]);
        }
        return sub;
    }
    return pooled;
}

}  // namespace

learn::LstmModel train_nod(std::span<const core::Session* const> train_sessions,
                           std::span<const core::Session* const> valid_sessions,
                           const NodTrainOptions& opts) {
    require(!train_sessions.empty() && !valid_sessions.empty(), ErrorCode::data,
            "nod training needs non-empty train and valid session sets");
    learn::TrainConfig cfg = opts.train;
    if (cfg.max_epochs <= 0) cfg.max_epochs = opts.max_epochs_default;

    auto train = pool_windows(train_sessions, opts.max_train_windows, cfg.seed);
    auto valid = pool_windows(valid_sessions, opts.max_valid_windows, cfg.seed + 1);
    log_info("nod training: " + std::to_string(train.size()) + " train / " +
             std::to_string(valid.size()) + " valid windows");
    auto result = learn::lstm_train(train, valid, cfg, opts.hidden_dim);
    log_info("nod model: best epoch " + std::to_string(result.history.best_epoch));
    return std::move(result.model);
}

std::vector<engagement::AnnotationRecord> annotation_records(
    std::span<const core::Session* const> sessions, const gaze::GazeGeometry& geom,
    bool context_enabled) {
    std::vector<engagement::AnnotationRecord> records;
    for (const core::Session* s : sessions) {
        auto turns = core::robot_turns(*s);
        // turn_id -> position in time order
        std::map<std::string, size_t> turn_pos;
        std::vector<int> states16(turns.size());
        for (size_t t = 0; t < turns.size(); ++t) {
            turn_pos[turns[t].turn_id] = t;
            states16[t] = core::encode_state(synth::turn_truth_state(*s, turns[t], geom), false);
        }
        if (!context_enabled) {
            for (const core::Annotation& a : *&s->annotations) {
                auto it = turn_pos.find(a.turn_id);
                if (it == turn_pos.end()) continue;  // annotation on a user turn
                records.push_back(synth::make_record(s->session_id, a, states16[it->second]));
            }
        } else {
            // Group annotations per annotator in turn order; the context bit is
            // that annotator's previous gold label.
            std::map<std::string, std::vector<std::pair<size_t, const core::Annotation*>>> per;
            for (const core::Annotation& a : s->annotations) {
                auto it = turn_pos.find(a.turn_id);
                if (it == turn_pos.end()) continue;
                per[a.annotator_id].push_back({it->second, &a});
            }
            for (auto& [id, anns] : per) {
                std::sort(anns.begin(), anns.end(),
                          [](const auto& x, const auto& y) { return x.first < y.first; });
                int prev = 0;
                for (auto& [pos, a] : anns) {
                    int state = states16[pos] + (prev ? 16 : 0);
                    records.push_back(synth::make_record(s->session_id, *a, state));
                    prev = a->engaged;
                }
            }
        }
    }
    return records;
}

std::pair<std::vector<const core::Session*>, std::vector<const core::Session*>> split_sessions(
    const std::vector<core::Session>& sessions, double valid_fraction, std::uint64_t seed) {
    require(sessions.size() >= 2, ErrorCode::data, "need at least 2 sessions to split");
    std::vector<size_t> order(sessions.size());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(seed ^ 0x1234abcd5678ef90ULL);
    std::shuffle(order.begin(), order.end(), rng);
    size_t n_valid = std::max<size_t>(
        1, static_cast<size_t>(std::floor(valid_fraction * static_cast<double>(sessions.size()))));
    std::vector<const core::Session*> train, valid;
    for (size_t i = 0; i < order.size(); ++i)
        (i < n_valid ? valid : train).push_back(&sessions[order[i]]);
    return {train, valid};
}

}  // namespace engage::pipeline
