#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace engage::core {

// One head-pose sample from the depth sensor, nominally 30 Hz.
// Angles are sensor-relative, in degrees; position is meters in sensor coordinates.
struct PoseFrame {
    std::int64_t timestamp_ms = 0;
    std::array<double, 3> head_pos{};
    double yaw_deg = 0.0;
    double roll_deg = 0.0;
    double pitch_deg = 0.0;

    bool operator==(const PoseFrame&) const = default;
};

enum class IpuLabel { laughter, backchannel, other };

struct Token {
    std::string surface;
    std::string pos;
    std::string embedding_id;

    bool operator==(const Token&) const = default;
};

// One inter-pausal unit of user speech with precomputed prosody tracks.
// f0_hz uses 0.0 to mark unvoiced frames; tracks are sampled every hop_ms.
struct IpuRecord {
    std::string ipu_id;
    std::int64_t t_start_ms = 0;
    std::int64_t t_end_ms = 0;
    std::vector<Token> tokens;
    std::vector<double> f0_hz;
    std::vector<double> intensity_db;
    int hop_ms = 10;
    std::optional<IpuLabel> label;

    bool operator==(const IpuRecord&) const = default;
};

enum class Speaker { robot, user };

struct Turn {
    std::string turn_id;
    Speaker speaker = Speaker::robot;
    std::int64_t t_start_ms = 0;
    std::int64_t t_end_ms = 0;

    bool operator==(const Turn&) const = default;
};

struct NodInterval {
    std::int64_t t_start_ms = 0;
    std::int64_t t_end_ms = 0;

    bool operator==(const NodInterval&) const = default;
};

struct Annotation {
    std::string annotator_id;
    std::string turn_id;
    int engaged = 0;  // {0,1}

    bool operator==(const Annotation&) const = default;
};

// All streams of one conversation. Immutable after load; safe to share
// read-only across threads.
struct Session {
    std::string session_id;
    std::vector<PoseFrame> frames;
    std::vector<IpuRecord> ipus;
    std::vector<Turn> turns;
    std::vector<NodInterval> nod_truth;
    std::optional<std::vector<bool>> gaze_truth;  // per-frame, aligned with frames
    std::vector<Annotation> annotations;

    bool operator==(const Session&) const = default;
};

// Throws Error(data) naming the violated invariant. load_session calls this
// after per-line checks, so in-memory constructed sessions get the same rules.
void validate(const Session& s);

// Robot-speaker turns in time order.
std::vector<Turn> robot_turns(const Session& s);

// The per-turn combination of detected signals. prev_engaged is present only
// when the engagement model runs in context mode.
struct BehaviorState {
    bool nod = false;
    bool laughter = false;
    bool backchannel = false;
    bool gaze = false;
    std::optional<bool> prev_engaged;

    bool operator==(const BehaviorState&) const = default;
};

inline int state_count(bool context_enabled) { return context_enabled ? 32 : 16; }

// index = nod + 2*laughter + 4*backchannel + 8*gaze (+16*prev_engaged).
// Throws Error(model) when prev_engaged presence disagrees with context_enabled.
int encode_state(const BehaviorState& b, bool context_enabled);
BehaviorState decode_state(int index, bool context_enabled);

const char* to_string(IpuLabel label);
IpuLabel ipu_label_from_string(const std::string& s);
const char* to_string(Speaker sp);
Speaker speaker_from_string(const std::string& s);

}  // namespace engage::core
