#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>

#include "core/lexicon.hpp"
#include "core/session_io.hpp"
#include "core/types.hpp"
#include "test_util.hpp"
#include "util/error.hpp"

using namespace engage;
using testutil::TempDir;

namespace {

void write_file(const std::filesystem::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary);
    out << content;
}

void write_minimal(const std::filesystem::path& dir, const std::string& frames) {
    std::filesystem::create_directories(dir);
    write_file(dir / "frames.csv", frames);
    write_file(dir / "ipus.jsonl", "");
    write_file(dir / "turns.jsonl", "");
}

constexpr const char* kHeader =
    "timestamp_ms,head_x_m,head_y_m,head_z_m,yaw_deg,roll_deg,pitch_deg\n";

}  // namespace

TEST_CASE("empty frames.csv is rejected") {
    TempDir tmp("core_empty");
    write_minimal(tmp.path / "s1", kHeader);
    CHECK_THROWS_WITH_AS(core::load_session(tmp.path / "s1"),
                         doctest::Contains("empty frame stream"), Error);
}

TEST_CASE("non-increasing timestamp reported with its line number") {
    TempDir tmp("core_ts");
    write_minimal(tmp.path / "s1", std::string(kHeader) +
                                       "0,0,0,2,0,0,0\n"
                                       "33,0,0,2,0,0,0\n"
                                       "33,0,0,2,0,0,0\n");
    CHECK_THROWS_WITH_AS(core::load_session(tmp.path / "s1"),
                         doctest::Contains("non-increasing timestamp at line 4"), Error);
}

TEST_CASE("malformed csv field reports file and line") {
    TempDir tmp("core_badnum");
    write_minimal(tmp.path / "s1", std::string(kHeader) + "0,0,0,2,0,0,zero\n");
    try {
        core::load_session(tmp.path / "s1");
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("frames.csv line 2") != std::string::npos);
    }
}

TEST_CASE("stream far off 30 Hz is rejected") {
    TempDir tmp("core_rate");
    std::string body(kHeader);
    for (int i = 0; i < 10; ++i) body += std::to_string(i * 100) + ",0,0,2,0,0,0\n";
    write_minimal(tmp.path / "s1", body);
    CHECK_THROWS_WITH_AS(core::load_session(tmp.path / "s1"),
                         doctest::Contains("median inter-frame gap"), Error);
}

TEST_CASE("angle wrap across +-180 is rejected") {
    TempDir tmp("core_wrap");
    write_minimal(tmp.path / "s1", std::string(kHeader) +
                                       "0,0,0,2,179,0,0\n"
                                       "33,0,0,2,-179,0,0\n");
    CHECK_THROWS_WITH_AS(core::load_session(tmp.path / "s1"), doctest::Contains("wrap"), Error);
}

TEST_CASE("missing optional files load as empty collections") {
    TempDir tmp("core_optional");
    write_minimal(tmp.path / "s1", std::string(kHeader) +
                                       "0,0,0,2,0,0,0\n"
                                       "33,0,0,2,0,0,0\n");
    core::Session s = core::load_session(tmp.path / "s1");
    CHECK(s.nod_truth.empty());
    CHECK(s.annotations.empty());
    CHECK_FALSE(s.gaze_truth.has_value());
    CHECK(s.session_id == "s1");
}

TEST_CASE("write_session emits header plus one line per frame") {
    TempDir tmp("core_lines");
    core::Session s;
    s.session_id = "mini";
    s.frames = testutil::still_frames(2);
    core::write_session(s, tmp.path / "mini");
    std::ifstream in(tmp.path / "mini" / "frames.csv", std::ios::binary);
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    CHECK(std::count(content.begin(), content.end(), '\n') == 3);
    CHECK_FALSE(std::filesystem::exists(tmp.path / "mini" / "annotations.jsonl"));
    CHECK_FALSE(std::filesystem::exists(tmp.path / "mini" / "nods.jsonl"));
}

TEST_CASE("session round-trip is exact") {
    TempDir tmp("core_roundtrip");
    for (std::uint64_t seed : {1ULL, 2ULL, 3ULL, 40ULL, 500ULL}) {
        core::Session s = testutil::random_session(seed);
        auto dir = tmp.path / s.session_id;
        core::write_session(s, dir);
        core::Session loaded = core::load_session(dir);
        CHECK(loaded == s);
        // a second write of the loaded session is byte-identical
        auto dir2 = tmp.path / (s.session_id + "_b");
        std::filesystem::create_directories(dir2);
        core::write_session(loaded, dir2);
        for (const char* name : {"frames.csv", "ipus.jsonl", "turns.jsonl", "nods.jsonl",
                                 "annotations.jsonl", "gaze.csv"}) {
            std::ifstream a(dir / name, std::ios::binary), b(dir2 / name, std::ios::binary);
            std::string ca((std::istreambuf_iterator<char>(a)), std::istreambuf_iterator<char>());
            std::string cb((std::istreambuf_iterator<char>(b)), std::istreambuf_iterator<char>());
            CHECK(ca == cb);
        }
    }
}

TEST_CASE("overlapping same-speaker turns are rejected") {
    core::Session s = testutil::random_session(7);
    s.turns.push_back({"t3", core::Speaker::robot, 0, 100});
    CHECK_THROWS_WITH_AS(core::validate(s), doctest::Contains("overlapping turns"), Error);
}

TEST_CASE("annotations must reference known turns") {
    core::Session s = testutil::random_session(8);
    s.annotations.push_back({"a1", "missing", 1});
    CHECK_THROWS_WITH_AS(core::validate(s), doctest::Contains("unknown turn"), Error);
}

TEST_CASE("robot_turns filters and orders") {
    core::Session s = testutil::random_session(9);
    s.turns = {{"t2", core::Speaker::robot, 5000, 6000},
               {"tu", core::Speaker::user, 1000, 1900},
               {"t1", core::Speaker::robot, 2000, 4000}};
    s.annotations.clear();
    auto r = core::robot_turns(s);
    REQUIRE(r.size() == 2);
    CHECK(r[0].turn_id == "t1");
    CHECK(r[1].turn_id == "t2");

    s.turns = {{"tu", core::Speaker::user, 0, 1000}};
    CHECK(core::robot_turns(s).empty());
}

TEST_CASE("behavior state encoding is the documented bijection") {
    core::BehaviorState all_false;
    CHECK(core::encode_state(all_false, false) == 0);
    core::BehaviorState all_true{true, true, true, true, std::nullopt};
    CHECK(core::encode_state(all_true, false) == 15);
    all_true.prev_engaged = true;
    CHECK(core::encode_state(all_true, true) == 31);

    for (bool context : {false, true}) {
        for (int idx = 0; idx < core::state_count(context); ++idx) {
            core::BehaviorState b = core::decode_state(idx, context);
            CHECK(core::encode_state(b, context) == idx);
        }
    }
    // context flag mismatches
    CHECK_THROWS_AS(core::encode_state(all_false, true), Error);
    CHECK_THROWS_AS(core::encode_state(all_true, false), Error);
}

TEST_CASE("lexicon loads and validates the 10-tag inventory") {
    TempDir tmp("core_lex");
    write_file(tmp.path / "lexicon.jsonl",
               "{\"embedding_id\":\"w1\",\"vector\":[1.0,0.0]}\n"
               "{\"embedding_id\":\"w2\",\"vector\":[0.0,1.0]}\n");
    write_file(tmp.path / "pos_tags.txt", "a\nb\nc\nd\ne\nf\ng\nh\ni\nj\n");
    core::Lexicon lex = core::load_lexicon(tmp.path / "lexicon.jsonl", tmp.path / "pos_tags.txt");
    CHECK(lex.embedding_dim() == 2);
    CHECK(lex.pos_index("c") == 2);
    CHECK(lex.pos_index("zz") == -1);

    write_file(tmp.path / "pos_tags.txt", "a\nb\n");
    CHECK_THROWS_WITH_AS(
        core::load_lexicon(tmp.path / "lexicon.jsonl", tmp.path / "pos_tags.txt"),
        doctest::Contains("exactly 10"), Error);
}
