#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "nod/nod.hpp"
#include "test_util.hpp"
#include "util/error.hpp"

using namespace engage;
using core::NodInterval;
using core::PoseFrame;

namespace {

// Independent per-definition recomputation of the 7 features at raw index t.
std::array<double, 7> brute_feature(const std::vector<PoseFrame>& fr, size_t t) {
    auto vel = [&](size_t i, double (*get)(const PoseFrame&)) {
        double dt = static_cast<double>(fr[i].timestamp_ms - fr[i - 1].timestamp_ms) / 1000.0;
        return (get(fr[i]) - get(fr[i - 1])) / dt;
    };
    auto yaw = [](const PoseFrame& f) { return f.yaw_deg; };
    auto roll = [](const PoseFrame& f) { return f.roll_deg; };
    auto pitch = [](const PoseFrame& f) { return f.pitch_deg; };

    double mean_speed = 0.0, mean_vel = 0.0, pmin = 1e300, pmax = -1e300;
    for (size_t j = t - 14; j <= t; ++j) {
        double v = vel(j, pitch);
        mean_speed += std::abs(v);
        mean_vel += v;
        pmin = std::min(pmin, fr[j].pitch_deg);
        pmax = std::max(pmax, fr[j].pitch_deg);
    }
    double span = static_cast<double>(fr[t].timestamp_ms - fr[t - 14].timestamp_ms) / 1000.0;
    return {std::abs(vel(t, yaw)),
            std::abs(vel(t, roll)),
            std::abs(vel(t, pitch)),
            mean_speed / 15.0,
            mean_vel / 15.0,
            (vel(t, pitch) - vel(t - 14, pitch)) / span,
            pmax - pmin};
}

nod::FrameScores scores_at_30hz(const std::vector<double>& values) {
    nod::FrameScores s;
    for (size_t i = 0; i < values.size(); ++i) {
        s.timestamps.push_back(static_cast<std::int64_t>(i) * 33);
        s.scores.push_back(values[i]);
    }
    return s;
}

}  // namespace

TEST_CASE("still head yields all-zero features") {
    auto frames = testutil::still_frames(60);
    auto feats = nod::extract_nod_features(frames);
    CHECK(feats.size() == 45);
    for (const auto& f : feats)
        for (double v : f) CHECK(v == 0.0);
}

TEST_CASE("pitch ramp matches the closed-form values") {
    std::vector<PoseFrame> frames;
    for (int i = 0; i < 40; ++i) {
        PoseFrame f;
        f.timestamp_ms = i * 33;
        f.pitch_deg = static_cast<double>(i);  // +1 deg per 33 ms frame
        frames.push_back(f);
    }
    auto feats = nod::extract_nod_features(frames);
    const double speed = 1000.0 / 33.0;  // ~30.3 deg/s
    for (const auto& f : feats) {
        CHECK(f[2] == doctest::Approx(speed).epsilon(1e-9));
        CHECK(f[3] == doctest::Approx(speed).epsilon(1e-9));
        CHECK(f[4] == doctest::Approx(speed).epsilon(1e-9));  // velocity == speed on a rising ramp
        CHECK(f[5] == doctest::Approx(0.0).epsilon(1e-9));
        CHECK(f[6] == doctest::Approx(14.0).epsilon(1e-12));
        CHECK(f[0] == 0.0);
        CHECK(f[1] == 0.0);
    }
}

TEST_CASE("features match a brute-force recomputation on a random stream") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> step(-3.0, 3.0);
    auto frames = testutil::frames_30hz(120, [&](int) { return std::tuple{0.0, 0.0, 0.0}; });
    for (size_t i = 1; i < frames.size(); ++i) {
        frames[i].yaw_deg = frames[i - 1].yaw_deg + step(rng);
        frames[i].roll_deg = frames[i - 1].roll_deg + step(rng);
        frames[i].pitch_deg = frames[i - 1].pitch_deg + step(rng);
    }
    auto feats = nod::extract_nod_features(frames);
    for (size_t i = 0; i < feats.size(); ++i) {
        auto want = brute_feature(frames, i + 15);
        for (int k = 0; k < 7; ++k)
            CHECK(feats.feats[i][k] == doctest::Approx(want[k]).epsilon(1e-12));
    }
}

TEST_CASE("feature extraction invariant to pitch offset and time origin") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> step(-2.0, 2.0);
    auto frames = testutil::still_frames(80);
    for (size_t i = 1; i < frames.size(); ++i)
        frames[i].pitch_deg = frames[i - 1].pitch_deg + step(rng);

    auto base = nod::extract_nod_features(frames);
    auto shifted = frames;
    for (auto& f : shifted) {
        f.pitch_deg += 25.0;
        f.timestamp_ms += 100000;
    }
    auto moved = nod::extract_nod_features(shifted);
    REQUIRE(base.size() == moved.size());
    for (size_t i = 0; i < base.size(); ++i)
        for (int k = 0; k < 7; ++k)
            CHECK(base.feats[i][k] == doctest::Approx(moved.feats[i][k]).epsilon(1e-9));
}

TEST_CASE("too few frames is an error") {
    auto frames = testutil::still_frames(15);
    CHECK_THROWS_AS(nod::extract_nod_features(frames), Error);
}

TEST_CASE("window construction: count, stride and final-frame labeling") {
    auto frames = testutil::still_frames(130);  // 115 feature frames
    auto feats = nod::extract_nod_features(frames);
    REQUIRE(feats.size() == 115);

    nod::FeatureSeq head;
    head.feats.assign(feats.feats.begin(), feats.feats.begin() + 100);
    head.timestamps.assign(feats.timestamps.begin(), feats.timestamps.begin() + 100);
    auto windows = nod::make_windows(head, {});
    CHECK(windows.size() == 71);
    for (int y : windows.y) CHECK(y == 0);

    std::vector<NodInterval> all{{0, 1000000}};
    auto pos = nod::make_windows(head, all);
    for (int y : pos.y) CHECK(y == 1);

    // label depends only on the final frame of the window (inclusive bounds)
    std::int64_t ts = head.timestamps[29];
    std::vector<NodInterval> exact{{ts, ts}};
    auto one = nod::make_windows(head, exact);
    CHECK(one.y[0] == 1);
    for (size_t i = 1; i < one.y.size(); ++i) CHECK(one.y[i] == 0);
}

TEST_CASE("zero model scores one half per scored frame") {
    auto frames = testutil::still_frames(130);
    auto feats = nod::extract_nod_features(frames);
    auto model = learn::LstmModel::zeros(7, 16);
    auto s = nod::score_frames(model, feats);
    CHECK(s.scores.size() == feats.size() - 29);
    CHECK(s.timestamps.front() == feats.timestamps[29]);
    for (double v : s.scores) CHECK(v == doctest::Approx(0.5).epsilon(1e-12));
    auto s2 = nod::score_frames(model, feats);
    CHECK(s.scores == s2.scores);
}

TEST_CASE("event extraction enforces the minimum duration") {
    nod::NodEventConfig cfg;  // min 300 ms

    // 8 frames above threshold at 30 Hz (~267 ms) -> nothing
    std::vector<double> v8(30, 0.0);
    for (int i = 10; i < 18; ++i) v8[i] = 0.9;
    CHECK(nod::extract_nod_events(scores_at_30hz(v8), cfg, 0.5).empty());

    // 12 frames (~400 ms) -> one event spanning the run
    std::vector<double> v12(30, 0.0);
    for (int i = 10; i < 22; ++i) v12[i] = 0.9;
    auto events = nod::extract_nod_events(scores_at_30hz(v12), cfg, 0.5);
    REQUIRE(events.size() == 1);
    CHECK(events[0].t_start_ms == 10 * 33);
    CHECK(events[0].t_end_ms == 22 * 33);
    CHECK(events[0].t_end_ms - events[0].t_start_ms >= cfg.min_event_ms);

    // alternating frames never accumulate a run
    std::vector<double> alt(60);
    for (size_t i = 0; i < alt.size(); ++i) alt[i] = i % 2 ? 0.9 : 0.1;
    nod::NodEventConfig strict;
    strict.min_event_ms = 67;
    CHECK(nod::extract_nod_events(scores_at_30hz(alt), strict, 0.5).empty());
}

TEST_CASE("event matching: overlap, disjoint and the one-to-one tie") {
    auto counts = nod::match_events(std::vector<NodInterval>{{1000, 1400}},
                                    std::vector<NodInterval>{{900, 1600}});
    CHECK(counts.tp == 1);
    CHECK(counts.fp == 0);
    CHECK(counts.fn == 0);

    counts = nod::match_events(std::vector<NodInterval>{{0, 100}},
                               std::vector<NodInterval>{{200, 300}});
    CHECK(counts.tp == 0);
    CHECK(counts.fp == 1);
    CHECK(counts.fn == 1);

    // two detections over one truth interval: one-to-one keeps tp <= |truth|
    counts = nod::match_events(std::vector<NodInterval>{{100, 300}, {400, 600}},
                               std::vector<NodInterval>{{200, 500}});
    CHECK(counts.tp == 1);
    CHECK(counts.fp == 1);
    CHECK(counts.fn == 0);

    CHECK_THROWS_AS(nod::match_events(std::vector<NodInterval>{{100, 300}, {200, 400}},
                                      std::vector<NodInterval>{}),
                    Error);
}

TEST_CASE("match_events conservation laws on random interval sets") {
    std::mt19937_64 rng(123);
    std::uniform_int_distribution<int> len(10, 400), gap(1, 300), n_dist(0, 12);
    auto random_list = [&] {
        std::vector<NodInterval> list;
        std::int64_t t = 0;
        int n = n_dist(rng);
        for (int i = 0; i < n; ++i) {
            t += gap(rng);
            std::int64_t end = t + len(rng);
            list.push_back({t, end});
            t = end;
        }
        return list;
    };
    for (int round = 0; round < 300; ++round) {
        auto detected = random_list();
        auto truth = random_list();
        auto c = nod::match_events(detected, truth);
        CHECK(c.tp + c.fn == static_cast<int>(truth.size()));
        CHECK(c.tp + c.fp == static_cast<int>(detected.size()));
    }
}
