#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "core/types.hpp"
#include "learn/lstm.hpp"

namespace engage::nod {

inline constexpr int kFeatureDim = 7;
inline constexpr int kHistoryLen = 15;  // frames of pitch history behind each feature frame
inline constexpr int kWindowLen = 30;   // feature frames per classified sequence

struct NodEventConfig {
    int min_event_ms = 300;  // runs shorter than this are rejected
    int window_len = kWindowLen;
    int history_len = kHistoryLen;
};

// Feature frames start at raw index 15: instantaneous |yaw|/|roll|/|pitch|
// speeds (deg/s), then pitch mean speed, mean signed velocity, endpoint
// acceleration and range over the previous 15 frames.
struct FeatureSeq {
    std::vector<std::array<double, kFeatureDim>> feats;
    std::vector<std::int64_t> timestamps;  // of the underlying raw frames

    size_t size() const { return feats.size(); }
};

FeatureSeq extract_nod_features(std::span<const core::PoseFrame> frames);

// One window per feature index >= 29, stride 1; label 1 iff the final frame's
// timestamp falls inside a ground-truth nod interval (inclusive bounds).
learn::SequenceDataset make_windows(const FeatureSeq& features,
                                    std::span<const core::NodInterval> truth,
                                    int window_len = kWindowLen);

// Probability per window-final frame; feature frames before index
// window_len-1 carry no score.
struct FrameScores {
    std::vector<std::int64_t> timestamps;
    std::vector<double> scores;
};

FrameScores score_frames(const learn::LstmModel& m, const FeatureSeq& features,
                         int window_len = kWindowLen);

// Maximal runs of scores >= threshold. A run of frames covers one frame
// period past its last frame, so an n-frame run lasts about n*period;
// runs shorter than min_event_ms are discarded.
std::vector<core::NodInterval> extract_nod_events(const FrameScores& scores,
                                                  const NodEventConfig& cfg, double threshold);

struct MatchCounts {
    int tp = 0;
    int fp = 0;
    int fn = 0;
};

// Greedy one-to-one matching in time order: a detection is a true positive if
// it overlaps a not-yet-matched truth interval. Both lists must be ordered and
// internally non-overlapping.
MatchCounts match_events(std::span<const core::NodInterval> detected,
                         std::span<const core::NodInterval> truth);

}  // namespace engage::nod
