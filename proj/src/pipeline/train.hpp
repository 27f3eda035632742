#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "core/lexicon.hpp"
#include "core/types.hpp"
#include "engagement/model.hpp"
#include "gaze/gaze.hpp"
#include "ipu/classifier.hpp"
#include "learn/lstm.hpp"

namespace engage::pipeline {

// A corpus directory: sessions/<id>/..., lexicon.jsonl + pos_tags.txt and
// geometry.json at the root (lexicon and geometry optional for user corpora).
struct Corpus {
    std::filesystem::path root;
    std::vector<core::Session> sessions;
    std::optional<core::Lexicon> lexicon;
    gaze::GazeGeometry geometry;  // defaults when geometry.json is absent

    const core::Lexicon* lexicon_ptr() const { return lexicon ? &*lexicon : nullptr; }
};

Corpus load_corpus(const std::filesystem::path& dir);

struct NodTrainOptions {
    learn::TrainConfig train;       // defaults: lr 0.001, batch 32
    int hidden_dim = 16;
    int max_epochs_default = 40;    // applied when train.max_epochs is 0
    size_t max_train_windows = 24000;  // seeded uniform subsample above this
    size_t max_valid_windows = 6000;
};

// Windows are pooled over sessions with stride 1, then subsampled to the
// configured caps with the training seed.
learn::LstmModel train_nod(std::span<const core::Session* const> train_sessions,
                           std::span<const core::Session* const> valid_sessions,
                           const NodTrainOptions& opts);

// Per-annotator records over robot turns, states fused from ground truth.
// In context mode the state carries the annotator's own previous gold label
// (0 for a session's first turn).
std::vector<engagement::AnnotationRecord> annotation_records(
    std::span<const core::Session* const> sessions, const gaze::GazeGeometry& geom,
    bool context_enabled);

// Seeded 80/20 session split used by coarse-grained training entry points.
std::pair<std::vector<const core::Session*>, std::vector<const core::Session*>> split_sessions(
    const std::vector<core::Session>& sessions, double valid_fraction, std::uint64_t seed);

}  // namespace engage::pipeline
