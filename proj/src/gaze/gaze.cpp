#include "gaze/gaze.hpp"

#include <cmath>
#include <fstream>
#include <vector>

#include <json.hpp>

#include "util/error.hpp"
#include "util/num.hpp"

namespace engage::gaze {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr double kDegToRad = 3.14159265358979323846 / 180.0;

Vec3 mat_apply(const Mat3& m, const Vec3& v) {
    return {m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
            m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
            m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2]};
}

double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

double norm(const Vec3& v) { return std::sqrt(dot(v, v)); }

}  // namespace

void validate(const GazeGeometry& g) {
    require(g.target_radius > 0.0, ErrorCode::data, "target_radius must be > 0");
    require(g.min_gaze_ms > 0, ErrorCode::data, "min_gaze_ms must be > 0");
    require(g.gap_tolerance_ms >= 0, ErrorCode::data, "gap_tolerance_ms must be >= 0");
    const Mat3& r = g.sensor_rotation;
    // Orthonormality: R^T R == I within 1e-9.
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double v = 0.0;
            for (int k = 0; k < 3; ++k) v += r[k][i] * r[k][j];
            double expect = i == j ? 1.0 : 0.0;
            require(std::abs(v - expect) <= 1e-9, ErrorCode::data,
                    "sensor_rotation is not orthonormal");
        }
    double det = r[0][0] * (r[1][1] * r[2][2] - r[1][2] * r[2][1]) -
                 r[0][1] * (r[1][0] * r[2][2] - r[1][2] * r[2][0]) +
                 r[0][2] * (r[1][0] * r[2][1] - r[1][1] * r[2][0]);
    require(std::abs(det - 1.0) <= 1e-9, ErrorCode::data,
            "sensor_rotation determinant must be +1");
    for (double v : g.sensor_position) require(std::isfinite(v), ErrorCode::data, "non-finite sensor_position");
    for (double v : g.target_center) require(std::isfinite(v), ErrorCode::data, "non-finite target_center");
}

GazeGeometry load_geometry(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) fail_io("cannot open " + file.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        fail_data(file.string() + ": " + e.what());
    }
    GazeGeometry g;
    try {
        auto pos = j.at("sensor_position").get<std::vector<double>>();
        require(pos.size() == 3, ErrorCode::data, "sensor_position must have 3 entries");
        g.sensor_position = {pos[0], pos[1], pos[2]};
        auto rot = j.at("sensor_rotation").get<std::vector<std::vector<double>>>();
        require(rot.size() == 3, ErrorCode::data, "sensor_rotation must be 3x3");
        for (int i = 0; i < 3; ++i) {
            require(rot[i].size() == 3, ErrorCode::data, "sensor_rotation must be 3x3");
            for (int k = 0; k < 3; ++k) g.sensor_rotation[i][k] = rot[i][k];
        }
        auto center = j.at("target_center").get<std::vector<double>>();
        require(center.size() == 3, ErrorCode::data, "target_center must have 3 entries");
        g.target_center = {center[0], center[1], center[2]};
        g.target_radius = j.value("target_radius", 0.30);
        g.gap_tolerance_ms = j.value("gap_tolerance_ms", std::int64_t{200});
        g.min_gaze_ms = j.value("min_gaze_ms", std::int64_t{10000});
    } catch (const json::exception& e) {
        fail_data(file.string() + ": " + e.what());
    }
    validate(g);
    return g;
}

void write_geometry(const GazeGeometry& g, const std::filesystem::path& file) {
    validate(g);
    ordered_json j;
    j["sensor_position"] = g.sensor_position;
    j["sensor_rotation"] = {g.sensor_rotation[0], g.sensor_rotation[1], g.sensor_rotation[2]};
    j["target_center"] = g.target_center;
    j["target_radius"] = g.target_radius;
    j["gap_tolerance_ms"] = g.gap_tolerance_ms;
    j["min_gaze_ms"] = g.min_gaze_ms;
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) fail_io("cannot open " + file.string() + " for writing");
    out << j.dump(2) << '\n';
}

Ray head_ray_world(const core::PoseFrame& frame, const GazeGeometry& geom) {
    for (double v : {frame.yaw_deg, frame.roll_deg, frame.pitch_deg, frame.head_pos[0],
                     frame.head_pos[1], frame.head_pos[2]})
        require(std::isfinite(v), ErrorCode::data, "non-finite pose input");

    double cy = std::cos(frame.yaw_deg * kDegToRad), sy = std::sin(frame.yaw_deg * kDegToRad);
    double cp = std::cos(frame.pitch_deg * kDegToRad), sp = std::sin(frame.pitch_deg * kDegToRad);
    double cr = std::cos(frame.roll_deg * kDegToRad), sr = std::sin(frame.roll_deg * kDegToRad);
    Mat3 ry{{{cy, 0, sy}, {0, 1, 0}, {-sy, 0, cy}}};
    Mat3 rx{{{1, 0, 0}, {0, cp, -sp}, {0, sp, cp}}};
    Mat3 rz{{{cr, -sr, 0}, {sr, cr, 0}, {0, 0, 1}}};

    Vec3 d = mat_apply(ry, Vec3{0.0, 0.0, 1.0});
    d = mat_apply(rx, d);
    d = mat_apply(rz, d);
    d = mat_apply(geom.sensor_rotation, d);
    double n = norm(d);
    for (double& v : d) v /= n;

    Vec3 o = mat_apply(geom.sensor_rotation, frame.head_pos);
    for (int i = 0; i < 3; ++i) o[i] += geom.sensor_position[i];
    return {o, d};
}

bool intersects_target(const Vec3& origin, const Vec3& direction, const GazeGeometry& geom) {
    double dn = norm(direction);
    require(dn > 0.0 && std::isfinite(dn), ErrorCode::data, "zero or non-finite ray direction");
    Vec3 d{direction[0] / dn, direction[1] / dn, direction[2] / dn};
    Vec3 m{origin[0] - geom.target_center[0], origin[1] - geom.target_center[1],
           origin[2] - geom.target_center[2]};
    double r2 = geom.target_radius * geom.target_radius;
    double mm = dot(m, m);
    if (mm <= r2) return true;  // origin inside or on the sphere
    double t_closest = -dot(m, d);
    if (t_closest < 0.0) return false;  // sphere behind the origin
    double closest2 = mm - t_closest * t_closest;
    return closest2 <= r2;
}

bool looking_at_target(const core::PoseFrame& frame, const GazeGeometry& geom) {
    Ray ray = head_ray_world(frame, geom);
    return intersects_target(ray.origin, ray.direction, geom);
}

bool gaze_label_from_flags(std::span<const std::int64_t> timestamps,
                           const std::vector<bool>& looking, const core::Turn& turn,
                           const GazeGeometry& geom) {
    require(timestamps.size() == looking.size(), ErrorCode::usage,
            "timestamps/looking size mismatch");
    if (turn.t_end_ms - turn.t_start_ms < geom.min_gaze_ms) return false;

    std::vector<std::int64_t> in_turn;
    std::vector<std::int64_t> look_ts;
    for (size_t i = 0; i < timestamps.size(); ++i) {
        if (timestamps[i] < turn.t_start_ms || timestamps[i] > turn.t_end_ms) continue;
        in_turn.push_back(timestamps[i]);
        if (looking[i]) look_ts.push_back(timestamps[i]);
    }
    if (look_ts.empty()) return false;

    std::vector<std::int64_t> gaps;
    for (size_t i = 1; i < in_turn.size(); ++i) gaps.push_back(in_turn[i] - in_turn[i - 1]);
    std::int64_t period = gaps.empty() ? 33 : static_cast<std::int64_t>(std::llround(median_of(gaps)));
    // Neighboring looking frames merge when the uncovered time between them
    // (spacing minus one frame period) is within the tolerance.
    std::int64_t merge_within = period + geom.gap_tolerance_ms;

    std::int64_t run_start = look_ts[0];
    std::int64_t prev = look_ts[0];
    for (size_t i = 1; i <= look_ts.size(); ++i) {
        bool flush = i == look_ts.size() || look_ts[i] - prev > merge_within;
        if (flush) {
            if (prev - run_start >= geom.min_gaze_ms) return true;
            if (i < look_ts.size()) run_start = look_ts[i];
        }
        if (i < look_ts.size()) prev = look_ts[i];
    }
    return false;
}

bool gaze_label_turn(std::span<const core::PoseFrame> frames, const core::Turn& turn,
                     const GazeGeometry& geom) {
    std::vector<std::int64_t> ts;
    std::vector<bool> flags;
    ts.reserve(frames.size());
    flags.reserve(frames.size());
    for (const core::PoseFrame& f : frames) {
        if (f.timestamp_ms < turn.t_start_ms || f.timestamp_ms > turn.t_end_ms) continue;
        ts.push_back(f.timestamp_ms);
        flags.push_back(looking_at_target(f, geom));
    }
    return gaze_label_from_flags(ts, flags, turn, geom);
}

}  // namespace engage::gaze
