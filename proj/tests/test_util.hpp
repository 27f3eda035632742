#pragma once

#include <cstdlib>
#include <filesystem>
#include <random>
#include <string>

#include "core/types.hpp"

namespace testutil {

// Fresh scratch directory under the build tree, removed on destruction.
struct TempDir {
    std::filesystem::path path;

    explicit TempDir(const std::string& tag) {
        static std::atomic<int> counter{0};
        path = std::filesystem::temp_directory_path() /
               ("engage_test_" + tag + "_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter++));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
};

// 30 Hz pose frames; angles via the supplied callable (index) -> (yaw, roll, pitch).
template <typename Fn>
std::vector<engage::core::PoseFrame> frames_30hz(int n, Fn&& angles) {
    std::vector<engage::core::PoseFrame> out;
    out.reserve(n);
    for (int i = 0; i < n; ++i) {
        engage::core::PoseFrame f;
        f.timestamp_ms = static_cast<std::int64_t>(std::llround(i * 1000.0 / 30.0));
        f.head_pos = {0.0, 0.0, 2.0};
        auto [y, r, p] = angles(i);
        f.yaw_deg = y;
        f.roll_deg = r;
        f.pitch_deg = p;
        out.push_back(f);
    }
    return out;
}

inline std::vector<engage::core::PoseFrame> still_frames(int n) {
    return frames_30hz(n, [](int) { return std::tuple{0.0, 0.0, 0.0}; });
}

// Small but structurally complete random session for round-trip checks.
inline engage::core::Session random_session(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ang(-40.0, 40.0);
    std::uniform_real_distribution<double> pos(-0.5, 0.5);
    std::uniform_real_distribution<double> u01(0.0, 1.0);

    engage::core::Session s;
    s.session_id = "rt" + std::to_string(seed);
    int n = 200 + static_cast<int>(u01(rng) * 100);
    for (int i = 0; i < n; ++i) {
        engage::core::PoseFrame f;
        f.timestamp_ms = static_cast<std::int64_t>(std::llround(i * 1000.0 / 30.0));
        f.head_pos = {pos(rng), pos(rng), 2.0 + pos(rng)};
        f.yaw_deg = ang(rng);
        f.roll_deg = ang(rng);
        f.pitch_deg = ang(rng);
        // keep consecutive angles close so wrap validation passes
        if (!s.frames.empty()) {
            f.yaw_deg = s.frames.back().yaw_deg + (u01(rng) - 0.5) * 4.0;
            f.roll_deg = s.frames.back().roll_deg + (u01(rng) - 0.5) * 4.0;
            f.pitch_deg = s.frames.back().pitch_deg + (u01(rng) - 0.5) * 4.0;
        }
        s.frames.push_back(f);
    }
    std::int64_t end = s.frames.back().timestamp_ms;

    s.turns.push_back({"t1", engage::core::Speaker::robot, 0, end / 2});
    s.turns.push_back({"t2", engage::core::Speaker::user, end / 2 + 10, end});

    engage::core::IpuRecord ipu;
    ipu.ipu_id = "i1";
    ipu.t_start_ms = 100;
    ipu.t_end_ms = 600;
    for (int k = 0; k < 50; ++k) {
        ipu.f0_hz.push_back(k % 3 == 0 ? 0.0 : 120.0 + u01(rng) * 30.0);
        ipu.intensity_db.push_back(55.0 + u01(rng) * 10.0);
    }
    ipu.tokens.push_back({"un", "interjection", "w1"});
    ipu.label = engage::core::IpuLabel::backchannel;
    s.ipus.push_back(ipu);

    s.nod_truth.push_back({200, 900});
    s.nod_truth.push_back({1500, 2100});

    std::vector<bool> gaze(s.frames.size());
    for (size_t i = 0; i < gaze.size(); ++i) gaze[i] = u01(rng) < 0.5;
    s.gaze_truth = gaze;

    s.annotations.push_back({"a1", "t1", 1});
    s.annotations.push_back({"a2", "t1", 0});
    return s;
}

}  // namespace testutil
