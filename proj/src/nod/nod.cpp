#include "nod/nod.hpp"

#include <algorithm>
#include <cmath>

#include "util/error.hpp"
#include "util/num.hpp"

namespace engage::nod {

FeatureSeq extract_nod_features(std::span<const core::PoseFrame> frames) {
    require(frames.size() >= kHistoryLen + 1, ErrorCode::data,
            "need at least " + std::to_string(kHistoryLen + 1) + " frames, got " +
                std::to_string(frames.size()));

    size_t n = frames.size();
    // Per-frame instantaneous quantities (defined from index 1).
    std::vector<double> yaw_speed(n, 0.0), roll_speed(n, 0.0), pitch_speed(n, 0.0),
        pitch_vel(n, 0.0);
    for (size_t i = 1; i < n; ++i) {
        double dt = static_cast<double>(frames[i].timestamp_ms - frames[i - 1].timestamp_ms) / 1000.0;
        yaw_speed[i] = std::abs(frames[i].yaw_deg - frames[i - 1].yaw_deg) / dt;
        roll_speed[i] = std::abs(frames[i].roll_deg - frames[i - 1].roll_deg) / dt;
        pitch_vel[i] = (frames[i].pitch_deg - frames[i - 1].pitch_deg) / dt;
        pitch_speed[i] = std::abs(pitch_vel[i]);
    }

    FeatureSeq out;
    out.feats.reserve(n - kHistoryLen);
    out.timestamps.reserve(n - kHistoryLen);
    for (size_t t = kHistoryLen; t < n; ++t) {
        size_t lo = t - (kHistoryLen - 1);  // window [t-14, t]
        double mean_speed = 0.0, mean_vel = 0.0;
        double pmin = frames[lo].pitch_deg, pmax = frames[lo].pitch_deg;
        for (size_t j = lo; j <= t; ++j) {
            mean_speed += pitch_speed[j];
            mean_vel += pitch_vel[j];
            pmin = std::min(pmin, frames[j].pitch_deg);
            pmax = std::max(pmax, frames[j].pitch_deg);
        }
        mean_speed /= kHistoryLen;
        mean_vel /= kHistoryLen;
        double span_s =
            static_cast<double>(frames[t].timestamp_ms - frames[lo].timestamp_ms) / 1000.0;
        double accel = span_s > 0.0 ? (pitch_vel[t] - pitch_vel[lo]) / span_s : 0.0;
        out.feats.push_back({yaw_speed[t], roll_speed[t], pitch_speed[t], mean_speed, mean_vel,
                             accel, pmax - pmin});
        out.timestamps.push_back(frames[t].timestamp_ms);
    }
    return out;
}

learn::SequenceDataset make_windows(const FeatureSeq& features,
                                    std::span<const core::NodInterval> truth, int window_len) {
    require(static_cast<int>(features.size()) >= window_len, ErrorCode::data,
            "need at least " + std::to_string(window_len) + " feature frames, got " +
                std::to_string(features.size()));
    learn::SequenceDataset d;
    d.seq_len = window_len;
    d.input_dim = kFeatureDim;
    size_t n_windows = features.size() - window_len + 1;
    d.x.reserve(n_windows);
    d.y.reserve(n_windows);
    for (size_t w = 0; w < n_windows; ++w) {
        std::vector<double> seq;
        seq.reserve(static_cast<size_t>(window_len) * kFeatureDim);
        for (int t = 0; t < window_len; ++t)
            for (int f = 0; f < kFeatureDim; ++f) seq.push_back(features.feats[w + t][f]);
        std::int64_t final_ts = features.timestamps[w + window_len - 1];
        int label = 0;
        for (const core::NodInterval& nd : truth)
            if (final_ts >= nd.t_start_ms && final_ts <= nd.t_end_ms) {
                label = 1;
                break;
            }
        d.x.push_back(std::move(seq));
        d.y.push_back(label);
    }
    return d;
}

FrameScores score_frames(const learn::LstmModel& m, const FeatureSeq& features, int window_len) {
    require(m.input_dim == kFeatureDim, ErrorCode::model,
            "nod model input dim must be " + std::to_string(kFeatureDim));
    FrameScores out;
    if (static_cast<int>(features.size()) < window_len) return out;
    size_t n_windows = features.size() - window_len + 1;
    std::vector<double> seq(static_cast<size_t>(window_len) * kFeatureDim);
    for (size_t w = 0; w < n_windows; ++w) {
        for (int t = 0; t < window_len; ++t)
            for (int f = 0; f < kFeatureDim; ++f)
                seq[static_cast<size_t>(t) * kFeatureDim + f] = features.feats[w + t][f];
        out.timestamps.push_back(features.timestamps[w + window_len - 1]);
        out.scores.push_back(learn::lstm_predict(m, seq, window_len, kFeatureDim));
    }
    return out;
}

std::vector<core::NodInterval> extract_nod_events(const FrameScores& scores,
                                                  const NodEventConfig& cfg, double threshold) {
    std::vector<core::NodInterval> events;
    size_t n = scores.scores.size();
    if (n < 2) return events;
    std::vector<std::int64_t> gaps;
    gaps.reserve(n - 1);
    for (size_t i = 1; i < n; ++i) gaps.push_back(scores.timestamps[i] - scores.timestamps[i - 1]);
    std::int64_t period = static_cast<std::int64_t>(std::llround(median_of(gaps)));

    size_t i = 0;
    while (i < n) {
        if (scores.scores[i] < threshold) {
            ++i;
            continue;
        }
        size_t j = i;
        while (j + 1 < n && scores.scores[j + 1] >= threshold) ++j;
        std::int64_t t_start = scores.timestamps[i];
        std::int64_t t_end = scores.timestamps[j] + period;
        if (j + 1 < n) t_end = std::min(t_end, scores.timestamps[j + 1]);
        if (t_end - t_start >= cfg.min_event_ms) events.push_back({t_start, t_end});
        i = j + 1;
    }
    return events;
}

namespace {

void check_ordered(std::span<const core::NodInterval> list, const char* what) {
    for (size_t i = 0; i < list.size(); ++i) {
        require(list[i].t_end_ms > list[i].t_start_ms, ErrorCode::data,
                std::string(what) + " interval with non-positive duration");
        if (i > 0)
            require(list[i].t_start_ms >= list[i - 1].t_end_ms, ErrorCode::data,
                    std::string(what) + " intervals overlap or are unordered");
    }
}

bool overlaps(const core::NodInterval& a, const core::NodInterval& b) {
    return std::max(a.t_start_ms, b.t_start_ms) < std::min(a.t_end_ms, b.t_end_ms);
}

}  // namespace

MatchCounts match_events(std::span<const core::NodInterval> detected,
                         std::span<const core::NodInterval> truth) {
    check_ordered(detected, "detected");
    check_ordered(truth, "truth");
    std::vector<bool> matched(truth.size(), false);
    MatchCounts counts;
    for (const core::NodInterval& d : detected) {
        bool hit = false;
        for (size_t t = 0; t < truth.size(); ++t) {
            if (matched[t] || !overlaps(d, truth[t])) continue;
            matched[t] = true;
            hit = true;
            break;
        }
        hit ? ++counts.tp : ++counts.fp;
    }
    for (bool m : matched)
        if (!m) ++counts.fn;
    return counts;
}

}  // namespace engage::nod
