#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "gaze/gaze.hpp"
#include "test_util.hpp"
#include "util/error.hpp"

using namespace engage;
using gaze::GazeGeometry;
using gaze::Mat3;
using gaze::Vec3;

namespace {

constexpr double kDeg = 3.14159265358979323846 / 180.0;

// Independent rotation composition for the oracle: build the full 3x3 product
// M = S * Rz(roll) * Rx(pitch) * Ry(yaw) and apply it to (0,0,1).
Mat3 matmul(const Mat3& a, const Mat3& b) {
    Mat3 m{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            m[i][j] = 0.0;
            for (int k = 0; k < 3; ++k) m[i][j] += a[i][k] * b[k][j];
        }
    return m;
}

Vec3 apply(const Mat3& m, const Vec3& v) {
    Vec3 out{};
    for (int i = 0; i < 3; ++i)
        for (int k = 0; k < 3; ++k) out[i] += m[i][k] * v[k];
    return out;
}

Mat3 rot_y(double deg) {
    double c = std::cos(deg * kDeg), s = std::sin(deg * kDeg);
    return {{{c, 0, s}, {0, 1, 0}, {-s, 0, c}}};
}
Mat3 rot_x(double deg) {
    double c = std::cos(deg * kDeg), s = std::sin(deg * kDeg);
    return {{{1, 0, 0}, {0, c, -s}, {0, s, c}}};
}
Mat3 rot_z(double deg) {
    double c = std::cos(deg * kDeg), s = std::sin(deg * kDeg);
    return {{{c, -s, 0}, {s, c, 0}, {0, 0, 1}}};
}

core::PoseFrame frame_at(Vec3 pos, double yaw, double roll, double pitch) {
    core::PoseFrame f;
    f.head_pos = {pos[0], pos[1], pos[2]};
    f.yaw_deg = yaw;
    f.roll_deg = roll;
    f.pitch_deg = pitch;
    return f;
}

// Dense sampling of the ray for the distance oracle.
bool sampled_intersects(const Vec3& o, const Vec3& d, const GazeGeometry& g) {
    Vec3 m{o[0] - g.target_center[0], o[1] - g.target_center[1], o[2] - g.target_center[2]};
    double reach = std::sqrt(m[0] * m[0] + m[1] * m[1] + m[2] * m[2]) + g.target_radius;
    double step = g.target_radius / 500.0;
    for (double t = 0.0; t <= reach; t += step) {
        double dx = o[0] + t * d[0] - g.target_center[0];
        double dy = o[1] + t * d[1] - g.target_center[1];
        double dz = o[2] + t * d[2] - g.target_center[2];
        if (std::sqrt(dx * dx + dy * dy + dz * dz) <= g.target_radius) return true;
    }
    return false;
}

GazeGeometry unit_geom() {
    GazeGeometry g;
    g.target_center = {0.0, 0.0, 2.0};
    g.target_radius = 0.3;
    return g;
}

}  // namespace

TEST_CASE("zero angles look straight down +z") {
    GazeGeometry g;
    auto ray = gaze::head_ray_world(frame_at({0, 0, 0}, 0, 0, 0), g);
    CHECK(ray.direction[0] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(ray.direction[1] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(ray.direction[2] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("ninety degree yaw points along +x") {
    GazeGeometry g;
    auto ray = gaze::head_ray_world(frame_at({0, 0, 0}, 90, 0, 0), g);
    CHECK(std::abs(ray.direction[0] - 1.0) < 1e-9);
    CHECK(std::abs(ray.direction[1]) < 1e-9);
    CHECK(std::abs(ray.direction[2]) < 1e-9);
}

TEST_CASE("head ray matches the matrix composition oracle") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> ang(-80.0, 80.0);
    std::uniform_real_distribution<double> pos(-1.0, 1.0);
    for (int round = 0; round < 200; ++round) {
        GazeGeometry g;
        double sy = ang(rng), sp = ang(rng), sr = ang(rng);
        g.sensor_rotation = matmul(rot_z(sr), matmul(rot_x(sp), rot_y(sy)));
        g.sensor_position = {pos(rng), pos(rng), pos(rng)};
        Vec3 head{pos(rng), pos(rng), 2.0 + pos(rng)};
        double yaw = ang(rng), roll = ang(rng), pitch = ang(rng);

        auto ray = gaze::head_ray_world(frame_at(head, yaw, roll, pitch), g);

        Mat3 full = matmul(g.sensor_rotation,
                           matmul(rot_z(roll), matmul(rot_x(pitch), rot_y(yaw))));
        Vec3 want_dir = apply(full, Vec3{0, 0, 1});
        Vec3 want_origin = apply(g.sensor_rotation, head);
        for (int i = 0; i < 3; ++i) want_origin[i] += g.sensor_position[i];
        for (int i = 0; i < 3; ++i) {
            CHECK(ray.direction[i] == doctest::Approx(want_dir[i]).epsilon(1e-9));
            CHECK(ray.origin[i] == doctest::Approx(want_origin[i]).epsilon(1e-9));
        }
    }
}

TEST_CASE("ray-sphere basics") {
    auto g = unit_geom();
    CHECK(gaze::intersects_target({0, 0, 0}, {0, 0, 1}, g));        // head-on
    CHECK_FALSE(gaze::intersects_target({0, 0, 0}, {0, 1, 0}, g));  // perpendicular
    CHECK_FALSE(gaze::intersects_target({0, 0, 0}, {0, 0, -1}, g)); // sphere behind
    CHECK(gaze::intersects_target({0.0, 0.1, 2.1}, {0, 1, 0}, g));  // origin inside

    GazeGeometry tangent;
    tangent.target_center = {3.0, 0.0, 5.0};
    tangent.target_radius = 3.0;
    CHECK(gaze::intersects_target({0, 0, 0}, {0, 0, 1}, tangent));  // exact touch counts
}

TEST_CASE("intersection invariant under positive direction scaling") {
    std::mt19937_64 rng(17);
    std::normal_distribution<double> n;
    std::uniform_real_distribution<double> scale(1e-3, 1e3);
    auto g = unit_geom();
    for (int i = 0; i < 500; ++i) {
        Vec3 o{n(rng), n(rng), n(rng)};
        Vec3 d{n(rng), n(rng), n(rng)};
        if (std::abs(d[0]) + std::abs(d[1]) + std::abs(d[2]) < 1e-6) continue;
        double c = scale(rng);
        Vec3 dc{d[0] * c, d[1] * c, d[2] * c};
        CHECK(gaze::intersects_target(o, d, g) == gaze::intersects_target(o, dc, g));
    }
}

TEST_CASE("rigid transforms preserve intersection") {
    std::mt19937_64 rng(23);
    std::normal_distribution<double> n;
    std::uniform_real_distribution<double> ang(-180.0, 180.0);
    for (int i = 0; i < 300; ++i) {
        Vec3 o{n(rng), n(rng), n(rng)};
        Vec3 d{n(rng), n(rng), n(rng)};
        if (std::abs(d[0]) + std::abs(d[1]) + std::abs(d[2]) < 1e-6) continue;
        GazeGeometry g = unit_geom();
        g.target_center = {n(rng), n(rng), n(rng)};
        bool before = gaze::intersects_target(o, d, g);

        Mat3 r = matmul(rot_z(ang(rng)), matmul(rot_x(ang(rng)), rot_y(ang(rng))));
        Vec3 t{n(rng), n(rng), n(rng)};
        Vec3 o2 = apply(r, o), d2 = apply(r, d), c2 = apply(r, g.target_center);
        for (int k = 0; k < 3; ++k) {
            o2[k] += t[k];
            c2[k] += t[k];
        }
        GazeGeometry g2 = g;
        g2.target_center = c2;
        CHECK(gaze::intersects_target(o2, d2, g2) == before);
    }
}

TEST_CASE("random rays agree with the dense sampling oracle") {
    std::mt19937_64 rng(31);
    std::normal_distribution<double> n;
    auto g = unit_geom();
    int checked = 0;
    for (int i = 0; i < 1000; ++i) {
        Vec3 o{2.0 * n(rng), 2.0 * n(rng), 2.0 * n(rng)};
        Vec3 d{n(rng), n(rng), n(rng)};
        double norm = std::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
        if (norm < 1e-9) continue;
        for (double& v : d) v /= norm;
        CHECK(gaze::intersects_target(o, d, g) == sampled_intersects(o, d, g));
        ++checked;
    }
    CHECK(checked > 900);
}

TEST_CASE("turn rule: the three quoted cases") {
    GazeGeometry g;  // defaults: 10 s rule, 200 ms tolerance

    auto flags_for = [](std::int64_t start, std::int64_t end,
                        const std::vector<std::pair<std::int64_t, std::int64_t>>& look_spans) {
        std::pair<std::vector<std::int64_t>, std::vector<bool>> out;
        for (std::int64_t ts = start; ts <= end; ts += 33) {
            bool look = false;
            for (auto [a, b] : look_spans) look |= ts >= a && ts <= b;
            out.first.push_back(ts);
            out.second.push_back(look);
        }
        return out;
    };

    // 9.9 s turn, all frames looking -> negative by the length rule
    core::Turn short_turn{"t", core::Speaker::robot, 0, 9900};
    auto [ts1, fl1] = flags_for(0, 9900, {{0, 9900}});
    CHECK_FALSE(gaze::gaze_label_from_flags(ts1, fl1, short_turn, g));

    // 12 s turn with a 10.5 s continuous run -> positive
    core::Turn turn{"t", core::Speaker::robot, 0, 12000};
    auto [ts2, fl2] = flags_for(0, 12000, {{500, 11000}});
    CHECK(gaze::gaze_label_from_flags(ts2, fl2, turn, g));

    // one 150 ms dropout inside a 12 s run -> still positive
    auto [ts3, fl3] = flags_for(0, 12000, {{0, 5000}, {5150 + 33, 12000}});
    CHECK(gaze::gaze_label_from_flags(ts3, fl3, turn, g));

    // a 500 ms dropout splits the run into 6 s + 5.5 s -> negative
    auto [ts4, fl4] = flags_for(0, 12000, {{0, 6000}, {6500 + 33, 12000}});
    CHECK_FALSE(gaze::gaze_label_from_flags(ts4, fl4, turn, g));
}

TEST_CASE("turn rule is monotone in looking frames") {
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    GazeGeometry g;
    core::Turn turn{"t", core::Speaker::robot, 0, 15000};
    for (int round = 0; round < 50; ++round) {
        std::vector<std::int64_t> ts;
        std::vector<bool> flags;
        for (std::int64_t t = 0; t <= 15000; t += 33) {
            ts.push_back(t);
            flags.push_back(u(rng) < 0.7);
        }
        bool before = gaze::gaze_label_from_flags(ts, flags, turn, g);
        auto more = flags;
        for (size_t i = 0; i < more.size(); ++i)
            if (u(rng) < 0.3) more[i] = true;
        bool after = gaze::gaze_label_from_flags(ts, more, turn, g);
        if (before) CHECK(after);
    }
}

TEST_CASE("geometry file round-trip and validation") {
    testutil::TempDir tmp("geom");
    GazeGeometry g = unit_geom();
    g.sensor_position = {0.5, -0.2, 0.1};
    gaze::write_geometry(g, tmp.path / "geometry.json");
    GazeGeometry back = gaze::load_geometry(tmp.path / "geometry.json");
    CHECK(back.target_center == g.target_center);
    CHECK(back.target_radius == g.target_radius);
    CHECK(back.min_gaze_ms == g.min_gaze_ms);

    GazeGeometry bad = g;
    bad.sensor_rotation[0][0] = 2.0;
    CHECK_THROWS_WITH_AS(gaze::validate(bad), doctest::Contains("orthonormal"), Error);
    GazeGeometry mirror = g;
    mirror.sensor_rotation = {{{-1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
    CHECK_THROWS_WITH_AS(gaze::validate(mirror), doctest::Contains("determinant"), Error);
}
