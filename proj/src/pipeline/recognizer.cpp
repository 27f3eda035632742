#include "pipeline/recognizer.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "util/error.hpp"
#include "util/num.hpp"

namespace engage::pipeline {

using nlohmann::ordered_json;

std::string to_states_line(const TurnOutput& out) {
    ordered_json j;
    j["turn_id"] = out.turn_id;
    j["nod"] = out.state.nod;
    j["laughter"] = out.state.laughter;
    j["backchannel"] = out.state.backchannel;
    j["gaze"] = out.state.gaze;
    j["engagement"] = out.engagement;
    return j.dump();
}

std::string to_states_jsonl(const std::vector<TurnOutput>& outs) {
    std::string s;
    for (const TurnOutput& o : outs) {
        s += to_states_line(o);
        s.push_back('\n');
    }
    return s;
}

Recognizer::Recognizer(const ModelSet& models) : models_(models) {}

void Recognizer::push_frame(const core::PoseFrame& frame) {
    require(frame_ring_.empty() || frame.timestamp_ms > frame_ring_.back().timestamp_ms,
            ErrorCode::data, "out-of-order frame at t=" + std::to_string(frame.timestamp_ms));
    require(frame.timestamp_ms >= last_event_ts_, ErrorCode::data,
            "frame arrived before an already-processed event");
    last_event_ts_ = frame.timestamp_ms;

    frame_ring_.push_back(frame);
    if (frame_ring_.size() > nod::kHistoryLen + 1) frame_ring_.pop_front();

    gaze_ts_.push_back(frame.timestamp_ms);
    gaze_flags_.push_back(gaze::looking_at_target(frame, models_.geometry));

    if (frame_ring_.size() == nod::kHistoryLen + 1) score_latest_frame();
}

// Mirrors nod::extract_nod_features for the newest frame: the ring holds the
// 16 frames [t-15, t]; window statistics run over [t-14, t].
void Recognizer::score_latest_frame() {
    const size_t n = frame_ring_.size();  // kHistoryLen + 1
    double yaw_speed = 0.0, roll_speed = 0.0;
    std::array<double, nod::kHistoryLen + 1> pv{};  // signed pitch velocity per ring index
    for (size_t i = 1; i < n; ++i) {
        double dt = static_cast<double>(frame_ring_[i].timestamp_ms -
                                        frame_ring_[i - 1].timestamp_ms) /
                    1000.0;
        pv[i] = (frame_ring_[i].pitch_deg - frame_ring_[i - 1].pitch_deg) / dt;
        if (i == n - 1) {
            yaw_speed = std::abs(frame_ring_[i].yaw_deg - frame_ring_[i - 1].yaw_deg) / dt;
            roll_speed = std::abs(frame_ring_[i].roll_deg - frame_ring_[i - 1].roll_deg) / dt;
        }
    }
    double mean_speed = 0.0, mean_vel = 0.0;
    double pmin = frame_ring_[1].pitch_deg, pmax = frame_ring_[1].pitch_deg;
    for (size_t j = 1; j < n; ++j) {
        mean_speed += std::abs(pv[j]);
        mean_vel += pv[j];
        pmin = std::min(pmin, frame_ring_[j].pitch_deg);
        pmax = std::max(pmax, frame_ring_[j].pitch_deg);
    }
    mean_speed /= nod::kHistoryLen;
    mean_vel /= nod::kHistoryLen;
    double span_s = static_cast<double>(frame_ring_.back().timestamp_ms -
                                        frame_ring_[1].timestamp_ms) /
                    1000.0;
    double accel = span_s > 0.0 ? (pv[n - 1] - pv[1]) / span_s : 0.0;

    feature_ring_.push_back({yaw_speed, roll_speed, std::abs(pv[n - 1]), mean_speed, mean_vel,
                             accel, pmax - pmin});
    feature_ts_.push_back(frame_ring_.back().timestamp_ms);
    if (feature_ring_.size() > static_cast<size_t>(models_.nod_cfg.window_len)) {
        feature_ring_.pop_front();
        feature_ts_.pop_front();
    }
    if (feature_ring_.size() < static_cast<size_t>(models_.nod_cfg.window_len)) return;

    std::vector<double> seq;
    seq.reserve(feature_ring_.size() * nod::kFeatureDim);
    for (const auto& f : feature_ring_) seq.insert(seq.end(), f.begin(), f.end());
    double score = learn::lstm_predict(models_.nod_model, seq, models_.nod_cfg.window_len,
                                       nod::kFeatureDim);

    std::int64_t ts = feature_ts_.back();
    if (prev_score_ts_ >= 0 && gap_samples_.size() < 512)
        gap_samples_.push_back(ts - prev_score_ts_);

    if (score >= models_.nod_threshold) {
        if (!run_open_) {
            open_run_ = {ts, ts};
            run_open_ = true;
        } else {
            open_run_.last = ts;
        }
    } else if (run_open_) {
        std::int64_t period =
            gap_samples_.empty() ? 33 : static_cast<std::int64_t>(std::llround(median_of(gap_samples_)));
        std::int64_t t_end = std::min(open_run_.last + period, ts);
        if (t_end - open_run_.start >= models_.nod_cfg.min_event_ms)
            nod_events_.push_back({open_run_.start, t_end});
        run_open_ = false;
    }
    prev_score_ts_ = ts;
}

void Recognizer::push_ipu(const core::IpuRecord& ipu) {
    require(ipu.t_end_ms >= last_event_ts_, ErrorCode::data,
            "ipu arrived before an already-processed event");
    last_event_ts_ = ipu.t_end_ms;

    auto history = [](const std::deque<double>& h) {
        std::vector<double> v(ipu::kPrevLabelDim, 0.0);
        for (size_t i = 0; i < h.size(); ++i) v[i] = h[i];
        return v;
    };
    double p_laugh =
        ipu::classify_ipu(models_.laughter, ipu, history(laugh_history_), models_.lexicon_ptr());
    double p_bc =
        ipu::classify_ipu(models_.backchannel, ipu, history(bc_history_), models_.lexicon_ptr());

    laugh_history_.push_front(p_laugh >= models_.ipu_threshold ? 1.0 : 0.0);
    if (laugh_history_.size() > ipu::kPrevLabelDim) laugh_history_.pop_back();
    bc_history_.push_front(p_bc >= models_.ipu_threshold ? 1.0 : 0.0);
    if (bc_history_.size() > ipu::kPrevLabelDim) bc_history_.pop_back();

    ipus_.push_back({ipu.t_start_ms, ipu.t_end_ms, p_laugh >= models_.ipu_threshold,
                     p_bc >= models_.ipu_threshold});
}

bool Recognizer::nod_bit_for(const core::Turn& turn) const {
    auto overlap = [&](std::int64_t a, std::int64_t b) {
        return std::max(a, turn.t_start_ms) < std::min(b, turn.t_end_ms);
    };
    for (const core::NodInterval& e : nod_events_)
        if (overlap(e.t_start_ms, e.t_end_ms)) return true;
    if (run_open_) {
        std::int64_t period =
            gap_samples_.empty() ? 33 : static_cast<std::int64_t>(std::llround(median_of(gap_samples_)));
        std::int64_t t_end = open_run_.last + period;
        if (t_end - open_run_.start >= models_.nod_cfg.min_event_ms &&
            overlap(open_run_.start, t_end))
            return true;
    }
    return false;
}

void Recognizer::push_turn(const core::Turn& turn) {
    require(turn.t_end_ms >= last_event_ts_, ErrorCode::data,
            "turn arrived before an already-processed event");
    last_event_ts_ = turn.t_end_ms;
    if (turn.speaker != core::Speaker::robot) return;

    TurnOutput out;
    out.turn_id = turn.turn_id;
    out.state.nod = nod_bit_for(turn);
    for (const ClassifiedIpu& c : ipus_) {
        if (std::max(c.t_start, turn.t_start_ms) >= std::min(c.t_end, turn.t_end_ms)) continue;
        out.state.laughter = out.state.laughter || c.laughter;
        out.state.backchannel = out.state.backchannel || c.backchannel;
    }
    out.state.gaze = gaze::gaze_label_from_flags(gaze_ts_, gaze_flags_, turn, models_.geometry);

    engagement::PartialState obs;
    obs.nod = out.state.nod;
    obs.laughter = out.state.laughter;
    obs.backchannel = out.state.backchannel;
    obs.gaze = out.state.gaze;
    if (models_.engagement_model.context_enabled) obs.prev_engaged = prev_engaged_;
    out.engagement = engagement::predict_live(models_.engagement_model, obs);
    prev_engaged_ = out.engagement >= 0.5;

    pending_.push_back(std::move(out));
}

std::vector<TurnOutput> Recognizer::drain() {
    std::vector<TurnOutput> out;
    out.swap(pending_);
    return out;
}

std::vector<TurnOutput> detect_session(const core::Session& s, const ModelSet& models) {
    struct Event {
        std::int64_t time = 0;
        int kind = 0;  // 0 frame, 1 ipu end, 2 turn end
        size_t index = 0;
    };
    std::vector<Event> events;
    events.reserve(s.frames.size() + s.ipus.size() + s.turns.size());
    for (size_t i = 0; i < s.frames.size(); ++i) events.push_back({s.frames[i].timestamp_ms, 0, i});
    for (size_t i = 0; i < s.ipus.size(); ++i) events.push_back({s.ipus[i].t_end_ms, 1, i});
    for (size_t i = 0; i < s.turns.size(); ++i) events.push_back({s.turns[i].t_end_ms, 2, i});
    std::stable_sort(events.begin(), events.end(), [](const Event& a, const Event& b) {
        if (a.time != b.time) return a.time < b.time;
        return a.kind < b.kind;
    });

    Recognizer rec(models);
    std::vector<TurnOutput> out;
    for (const Event& e : events) {
        switch (e.kind) {
            case 0: rec.push_frame(s.frames[e.index]); break;
            case 1: rec.push_ipu(s.ipus[e.index]); break;
            default: rec.push_turn(s.turns[e.index]); break;
        }
        for (TurnOutput& t : rec.drain()) out.push_back(std::move(t));
    }
    return out;
}

}  // namespace engage::pipeline
