#include "core/types.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "util/error.hpp"
#include "util/num.hpp"

namespace engage::core {

namespace {

void validate_frames(const std::vector<PoseFrame>& frames) {
    require(!frames.empty(), ErrorCode::data, "empty frame stream");
    std::vector<std::int64_t> gaps;
    gaps.reserve(frames.size());
    for (size_t i = 0; i < frames.size(); ++i) {
        const PoseFrame& f = frames[i];
        require(f.timestamp_ms >= 0, ErrorCode::data,
                "negative timestamp at frame index " + std::to_string(i));
        bool finite = std::isfinite(f.yaw_deg) && std::isfinite(f.roll_deg) &&
                      std::isfinite(f.pitch_deg) && std::isfinite(f.head_pos[0]) &&
                      std::isfinite(f.head_pos[1]) && std::isfinite(f.head_pos[2]);
        require(finite, ErrorCode::data,
                "non-finite pose value at frame index " + std::to_string(i));
        for (double a : {f.yaw_deg, f.roll_deg, f.pitch_deg})
            require(std::abs(a) <= 180.0, ErrorCode::data,
                    "angle out of [-180,180] at frame index " + std::to_string(i));
        if (i > 0) {
            const PoseFrame& p = frames[i - 1];
            require(f.timestamp_ms > p.timestamp_ms, ErrorCode::data,
                    "non-increasing timestamp at frame index " + std::to_string(i));
            // A jump past +-180 between consecutive 30 Hz frames is an angle wrap.
            bool wrap = std::abs(f.yaw_deg - p.yaw_deg) > 180.0 ||
                        std::abs(f.roll_deg - p.roll_deg) > 180.0 ||
                        std::abs(f.pitch_deg - p.pitch_deg) > 180.0;
            require(!wrap, ErrorCode::data,
                    "angle wrap across +-180 deg at frame index " + std::to_string(i));
            gaps.push_back(f.timestamp_ms - p.timestamp_ms);
        }
    }
    if (!gaps.empty()) {
        double med = median_of(gaps);
        require(med >= 30.0 && med <= 37.0, ErrorCode::data,
                "median inter-frame gap " + fmt_double(med) +
                    " ms outside [30,37] (stream is not ~30 Hz)");
    }
}

void validate_ipu(const IpuRecord& ipu, const std::string& where) {
    require(ipu.t_end_ms > ipu.t_start_ms, ErrorCode::data, where + ": t_end_ms <= t_start_ms");
    require(ipu.t_start_ms >= 0, ErrorCode::data, where + ": negative t_start_ms");
    require(ipu.hop_ms == 10, ErrorCode::data, where + ": hop_ms must be 10");
    require(ipu.f0_hz.size() == ipu.intensity_db.size(), ErrorCode::data,
            where + ": f0 and intensity track lengths differ");
    double expected = static_cast<double>(ipu.t_end_ms - ipu.t_start_ms) / ipu.hop_ms;
    double len = static_cast<double>(ipu.f0_hz.size());
    require(std::abs(len - expected) <= 1.0 + 1e-9, ErrorCode::data,
            where + ": track length " + std::to_string(ipu.f0_hz.size()) +
                " inconsistent with duration/hop " + fmt_double(expected));
    for (double f : ipu.f0_hz)
        require(std::isfinite(f) && f >= 0.0, ErrorCode::data, where + ": f0 entry < 0 or non-finite");
    require(all_finite(ipu.intensity_db), ErrorCode::data, where + ": non-finite intensity entry");
}

}  // namespace

void validate(const Session& s) {
    validate_frames(s.frames);

    std::int64_t prev_start = -1;
    for (const IpuRecord& ipu : s.ipus) {
        validate_ipu(ipu, "ipu '" + ipu.ipu_id + "'");
        require(ipu.t_start_ms >= prev_start, ErrorCode::data,
                "ipu '" + ipu.ipu_id + "': ipus not ordered by t_start_ms");
        prev_start = ipu.t_start_ms;
    }

    std::unordered_set<std::string> turn_ids;
    for (const Turn& t : s.turns) {
        require(t.t_end_ms > t.t_start_ms, ErrorCode::data,
                "turn '" + t.turn_id + "': t_end_ms <= t_start_ms");
        require(t.t_start_ms >= 0, ErrorCode::data, "turn '" + t.turn_id + "': negative t_start_ms");
        require(turn_ids.insert(t.turn_id).second, ErrorCode::data,
                "duplicate turn_id '" + t.turn_id + "'");
    }
    for (Speaker sp : {Speaker::robot, Speaker::user}) {
        std::vector<const Turn*> same;
        for (const Turn& t : s.turns)
            if (t.speaker == sp) same.push_back(&t);
        std::sort(same.begin(), same.end(),
                  [](const Turn* a, const Turn* b) { return a->t_start_ms < b->t_start_ms; });
        for (size_t i = 1; i < same.size(); ++i)
            require(same[i]->t_start_ms >= same[i - 1]->t_end_ms, ErrorCode::data,
                    "overlapping turns '" + same[i - 1]->turn_id + "' and '" +
                        same[i]->turn_id + "' for one speaker");
    }

    for (size_t i = 0; i < s.nod_truth.size(); ++i) {
        const NodInterval& n = s.nod_truth[i];
        require(n.t_end_ms > n.t_start_ms, ErrorCode::data,
                "nod interval " + std::to_string(i) + ": t_end_ms <= t_start_ms");
        require(n.t_start_ms >= 0, ErrorCode::data,
                "nod interval " + std::to_string(i) + ": negative t_start_ms");
        if (i > 0)
            require(n.t_start_ms >= s.nod_truth[i - 1].t_end_ms, ErrorCode::data,
                    "nod intervals overlap at index " + std::to_string(i));
    }

    if (s.gaze_truth)
        require(s.gaze_truth->size() == s.frames.size(), ErrorCode::data,
                "gaze_truth length differs from frame count");

    for (const Annotation& a : s.annotations) {
        require(a.engaged == 0 || a.engaged == 1, ErrorCode::data,
                "annotation for turn '" + a.turn_id + "': engaged must be 0 or 1");
        require(!a.annotator_id.empty(), ErrorCode::data, "annotation with empty annotator_id");
        require(turn_ids.count(a.turn_id) > 0, ErrorCode::data,
                "annotation references unknown turn '" + a.turn_id + "'");
    }
}

std::vector<Turn> robot_turns(const Session& s) {
    std::vector<Turn> out;
    for (const Turn& t : s.turns)
        if (t.speaker == Speaker::robot) out.push_back(t);
    std::sort(out.begin(), out.end(),
              [](const Turn& a, const Turn& b) { return a.t_start_ms < b.t_start_ms; });
    return out;
}

int encode_state(const BehaviorState& b, bool context_enabled) {
    require(b.prev_engaged.has_value() == context_enabled, ErrorCode::model,
            context_enabled ? "context mode requires prev_engaged"
                            : "prev_engaged set but context mode is off");
    int idx = (b.nod ? 1 : 0) + (b.laughter ? 2 : 0) + (b.backchannel ? 4 : 0) + (b.gaze ? 8 : 0);
    if (context_enabled && *b.prev_engaged) idx += 16;
    return idx;
}

BehaviorState decode_state(int index, bool context_enabled) {
    require(index >= 0 && index < state_count(context_enabled), ErrorCode::model,
            "state index " + std::to_string(index) + " out of range");
    BehaviorState b;
    b.nod = (index & 1) != 0;
    b.laughter = (index & 2) != 0;
    b.backchannel = (index & 4) != 0;
    b.gaze = (index & 8) != 0;
    if (context_enabled) b.prev_engaged = (index & 16) != 0;
    return b;
}

const char* to_string(IpuLabel label) {
    switch (label) {
        case IpuLabel::laughter: return "laughter";
        case IpuLabel::backchannel: return "backchannel";
        case IpuLabel::other: return "other";
    }
    return "other";
}

IpuLabel ipu_label_from_string(const std::string& s) {
    if (s == "laughter") return IpuLabel::laughter;
    if (s == "backchannel") return IpuLabel::backchannel;
    if (s == "other") return IpuLabel::other;
    fail_data("unknown ipu label '" + s + "'");
}

const char* to_string(Speaker sp) {
    return sp == Speaker::robot ? "robot" : "user";
}

Speaker speaker_from_string(const std::string& s) {
    if (s == "robot") return Speaker::robot;
    if (s == "user") return Speaker::user;
    fail_data("unknown speaker '" + s + "'");
}

}  // namespace engage::core
