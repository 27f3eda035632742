#pragma once

#include <deque>
#include <string>
#include <vector>

#include "core/types.hpp"
#include "pipeline/models.hpp"

namespace engage::pipeline {

struct TurnOutput {
    std::string turn_id;
    core::BehaviorState state;  // the four detected signals, no context bit
    double engagement = 0.0;
};

std::string to_states_line(const TurnOutput& out);
std::string to_states_jsonl(const std::vector<TurnOutput>& outs);

// Streaming per-turn fusion. Feed events in timestamp order: frames as they
// arrive, IPUs at their end time, turns at their end time. Each completed
// robot turn yields one TurnOutput. Both batch detection and paced replay run
// through this class, so their outputs are identical by construction.
class Recognizer {
public:
    explicit Recognizer(const ModelSet& models);

    void push_frame(const core::PoseFrame& frame);
    void push_ipu(const core::IpuRecord& ipu);
    void push_turn(const core::Turn& turn);

    // Pending outputs, oldest first; clears the queue.
    std::vector<TurnOutput> drain();

private:
    void score_latest_frame();
    bool nod_bit_for(const core::Turn& turn) const;

    const ModelSet& models_;

    // Raw-frame ring for feature extraction (last history_len+1 frames).
    std::deque<core::PoseFrame> frame_ring_;
    // Feature ring for the scoring window (last window_len feature frames).
    std::deque<std::array<double, nod::kFeatureDim>> feature_ring_;
    std::deque<std::int64_t> feature_ts_;

    // Completed above-threshold runs plus the currently open one.
    struct Run {
        std::int64_t start = 0;
        std::int64_t last = 0;
    };
    std::vector<core::NodInterval> nod_events_;
    Run open_run_;
    bool run_open_ = false;
    std::vector<std::int64_t> gap_samples_;  // first few score gaps, for the frame period
    std::int64_t prev_score_ts_ = -1;

    // Per-frame gaze flags.
    std::vector<std::int64_t> gaze_ts_;
    std::vector<bool> gaze_flags_;

    // Classified IPUs (interval + thresholded bits) and the 5-deep history.
    struct ClassifiedIpu {
        std::int64_t t_start = 0;
        std::int64_t t_end = 0;
        bool laughter = false;
        bool backchannel = false;
    };
    std::vector<ClassifiedIpu> ipus_;
    std::deque<double> laugh_history_;
    std::deque<double> bc_history_;

    std::int64_t last_event_ts_ = -1;
    bool prev_engaged_ = false;  // context filtering state
    std::vector<TurnOutput> pending_;
};

// Batch detection: feeds the whole session through a Recognizer.
std::vector<TurnOutput> detect_session(const core::Session& s, const ModelSet& models);

}  // namespace engage::pipeline
