#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <vector>

#include "core/types.hpp"

namespace engage::gaze {

using Vec3 = std::array<double, 3>;
using Mat3 = std::array<std::array<double, 3>, 3>;

// Rigid sensor-to-world transform, the gaze target sphere, and the
// turn-labeling rule parameters.
struct GazeGeometry {
    Vec3 sensor_position{0.0, 0.0, 0.0};
    Mat3 sensor_rotation{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
    Vec3 target_center{0.0, 0.0, 0.0};
    double target_radius = 0.30;
    std::int64_t gap_tolerance_ms = 200;  // 0 recovers the strict continuity rule
    std::int64_t min_gaze_ms = 10000;
};

// Rejects non-orthonormal rotations (det must be +1 within 1e-9) and
// non-positive radii.
void validate(const GazeGeometry& g);
GazeGeometry load_geometry(const std::filesystem::path& file);
void write_geometry(const GazeGeometry& g, const std::filesystem::path& file);

struct Ray {
    Vec3 origin;
    Vec3 direction;  // unit length
};

// Head frame: +z forward, +y up, +x left; angles in degrees. The head
// direction is R_z(roll) * R_x(pitch) * R_y(yaw) applied to (0,0,1), then
// taken to world coordinates by the sensor pose.
Ray head_ray_world(const core::PoseFrame& frame, const GazeGeometry& geom);

// True iff the ray (t >= 0, not the full line) passes within target_radius of
// target_center; tangential touch counts. direction need not be unit length.
bool intersects_target(const Vec3& origin, const Vec3& direction, const GazeGeometry& geom);

bool looking_at_target(const core::PoseFrame& frame, const GazeGeometry& geom);

// Turn rule over an already-computed looking flag stream: true iff some run of
// looking timestamps inside the turn — merging neighbors whose spacing is at
// most one frame period plus gap_tolerance_ms — spans min_gaze_ms. Turns
// shorter than min_gaze_ms are negative unconditionally.
bool gaze_label_from_flags(std::span<const std::int64_t> timestamps,
                           const std::vector<bool>& looking, const core::Turn& turn,
                           const GazeGeometry& geom);

bool gaze_label_turn(std::span<const core::PoseFrame> frames, const core::Turn& turn,
                     const GazeGeometry& geom);

}  // namespace engage::gaze
