#include "core/session_io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "util/error.hpp"
#include "util/num.hpp"

namespace engage::core {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr const char* kFramesHeader =
    "timestamp_ms,head_x_m,head_y_m,head_z_m,yaw_deg,roll_deg,pitch_deg";
constexpr const char* kGazeHeader = "timestamp_ms,looking";

std::vector<std::string> read_lines(const fs::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) fail_io("cannot open " + file.string());
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r')
            fail_data(file.filename().string() + " line " + std::to_string(lines.size() + 1) +
                      ": CRLF line ending (expected LF)");
        lines.push_back(line);
    }
    return lines;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

std::vector<PoseFrame> load_frames(const fs::path& file) {
    auto lines = read_lines(file);
    const std::string name = file.filename().string();
    require(!lines.empty() && lines[0] == kFramesHeader, ErrorCode::data,
            name + ": missing or wrong header");
    require(lines.size() > 1, ErrorCode::data, "empty frame stream");
    std::vector<PoseFrame> frames;
    frames.reserve(lines.size() - 1);
    for (size_t i = 1; i < lines.size(); ++i) {
        const std::string where = name + " line " + std::to_string(i + 1);
        auto fields = split_csv(lines[i]);
        require(fields.size() == 7, ErrorCode::data, where + ": expected 7 fields");
        PoseFrame f;
        f.timestamp_ms = parse_int(fields[0], where);
        for (int k = 0; k < 3; ++k) f.head_pos[k] = parse_double(fields[1 + k], where);
        f.yaw_deg = parse_double(fields[4], where);
        f.roll_deg = parse_double(fields[5], where);
        f.pitch_deg = parse_double(fields[6], where);
        if (!frames.empty() && f.timestamp_ms <= frames.back().timestamp_ms)
            fail_data("non-increasing timestamp at line " + std::to_string(i + 1) + " of " + name);
        frames.push_back(f);
    }
    return frames;
}

// Parses one JSONL file; fn receives (parsed object, "file line N" context).
template <typename Fn>
void for_each_jsonl(const fs::path& file, Fn&& fn) {
    auto lines = read_lines(file);
    const std::string name = file.filename().string();
    for (size_t i = 0; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        const std::string where = name + " line " + std::to_string(i + 1);
        json j;
        try {
            j = json::parse(lines[i]);
        } catch (const json::exception& e) {
            fail_data(where + ": " + e.what());
        }
        require(j.is_object(), ErrorCode::data, where + ": expected a JSON object");
        try {
            fn(j, where);
        } catch (const json::exception& e) {
            fail_data(where + ": " + e.what());
        }
    }
}

std::vector<bool> load_gaze(const fs::path& file, const std::vector<PoseFrame>& frames) {
    auto lines = read_lines(file);
    const std::string name = file.filename().string();
    require(!lines.empty() && lines[0] == kGazeHeader, ErrorCode::data,
            name + ": missing or wrong header");
    require(lines.size() - 1 == frames.size(), ErrorCode::data,
            name + ": row count differs from frame count");
    std::vector<bool> flags(frames.size());
    for (size_t i = 1; i < lines.size(); ++i) {
        const std::string where = name + " line " + std::to_string(i + 1);
        auto fields = split_csv(lines[i]);
        require(fields.size() == 2, ErrorCode::data, where + ": expected 2 fields");
        std::int64_t ts = parse_int(fields[0], where);
        require(ts == frames[i - 1].timestamp_ms, ErrorCode::data,
                where + ": timestamp does not match frames.csv");
        std::int64_t v = parse_int(fields[1], where);
        require(v == 0 || v == 1, ErrorCode::data, where + ": looking must be 0 or 1");
        flags[i - 1] = v == 1;
    }
    return flags;
}

void write_text(const fs::path& file, const std::string& content) {
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) fail_io("cannot open " + file.string() + " for writing");
    out << content;
    if (!out) fail_io("write failure on " + file.string());
}

}  // namespace

Session load_session(const fs::path& dir) {
    require(fs::is_directory(dir), ErrorCode::io, "not a session directory: " + dir.string());
    Session s;
    s.session_id = dir.filename().string();
    if (s.session_id.empty())  // trailing slash
        s.session_id = dir.parent_path().filename().string();

    for (const char* req : {"frames.csv", "ipus.jsonl", "turns.jsonl"})
        require(fs::exists(dir / req), ErrorCode::io,
                "missing required file " + (dir / req).string());

    s.frames = load_frames(dir / "frames.csv");

    for_each_jsonl(dir / "ipus.jsonl", [&](const json& j, const std::string& where) {
        IpuRecord ipu;
        ipu.ipu_id = j.at("ipu_id").get<std::string>();
        ipu.t_start_ms = j.at("t_start_ms").get<std::int64_t>();
        ipu.t_end_ms = j.at("t_end_ms").get<std::int64_t>();
        for (const json& jt : j.at("tokens")) {
            Token t;
            t.surface = jt.at("surface").get<std::string>();
            t.pos = jt.at("pos").get<std::string>();
            t.embedding_id = jt.at("embedding_id").get<std::string>();
            ipu.tokens.push_back(std::move(t));
        }
        ipu.f0_hz = j.at("f0_hz").get<std::vector<double>>();
        ipu.intensity_db = j.at("intensity_db").get<std::vector<double>>();
        ipu.hop_ms = j.at("hop_ms").get<int>();
        if (j.contains("label")) ipu.label = ipu_label_from_string(j.at("label").get<std::string>());
        require(ipu.t_end_ms > ipu.t_start_ms, ErrorCode::data, where + ": t_end_ms <= t_start_ms");
        require(ipu.f0_hz.size() == ipu.intensity_db.size(), ErrorCode::data,
                where + ": f0 and intensity track lengths differ");
        s.ipus.push_back(std::move(ipu));
    });

    for_each_jsonl(dir / "turns.jsonl", [&](const json& j, const std::string&) {
        Turn t;
        t.turn_id = j.at("turn_id").get<std::string>();
        t.speaker = speaker_from_string(j.at("speaker").get<std::string>());
        t.t_start_ms = j.at("t_start_ms").get<std::int64_t>();
        t.t_end_ms = j.at("t_end_ms").get<std::int64_t>();
        s.turns.push_back(std::move(t));
    });

    if (fs::exists(dir / "nods.jsonl"))
        for_each_jsonl(dir / "nods.jsonl", [&](const json& j, const std::string&) {
            s.nod_truth.push_back(
                {j.at("t_start_ms").get<std::int64_t>(), j.at("t_end_ms").get<std::int64_t>()});
        });

    if (fs::exists(dir / "annotations.jsonl"))
        for_each_jsonl(dir / "annotations.jsonl", [&](const json& j, const std::string&) {
            Annotation a;
            a.annotator_id = j.at("annotator_id").get<std::string>();
            a.turn_id = j.at("turn_id").get<std::string>();
            a.engaged = j.at("engaged").get<int>();
            s.annotations.push_back(std::move(a));
        });

    if (fs::exists(dir / "gaze.csv")) s.gaze_truth = load_gaze(dir / "gaze.csv", s.frames);

    validate(s);
    return s;
}

void write_session(const Session& s, const fs::path& dir) {
    validate(s);
    std::error_code ec;
    fs::create_directories(dir, ec);
    require(fs::is_directory(dir), ErrorCode::io, "cannot create directory " + dir.string());

    {
        std::string out(kFramesHeader);
        out.push_back('\n');
        for (const PoseFrame& f : s.frames) {
            out += std::to_string(f.timestamp_ms);
            for (double v : {f.head_pos[0], f.head_pos[1], f.head_pos[2], f.yaw_deg, f.roll_deg,
                             f.pitch_deg}) {
                out.push_back(',');
                out += fmt_double(v);
            }
            out.push_back('\n');
        }
        write_text(dir / "frames.csv", out);
    }

    {
        std::string out;
        for (const IpuRecord& ipu : s.ipus) {
            ordered_json j;
            j["ipu_id"] = ipu.ipu_id;
            j["t_start_ms"] = ipu.t_start_ms;
            j["t_end_ms"] = ipu.t_end_ms;
            j["tokens"] = json::array();
            for (const Token& t : ipu.tokens) {
                ordered_json jt;
                jt["surface"] = t.surface;
                jt["pos"] = t.pos;
                jt["embedding_id"] = t.embedding_id;
                j["tokens"].push_back(std::move(jt));
            }
            j["f0_hz"] = ipu.f0_hz;
            j["intensity_db"] = ipu.intensity_db;
            j["hop_ms"] = ipu.hop_ms;
            if (ipu.label) j["label"] = to_string(*ipu.label);
            out += j.dump();
            out.push_back('\n');
        }
        write_text(dir / "ipus.jsonl", out);
    }

    {
        std::string out;
        for (const Turn& t : s.turns) {
            ordered_json j;
            j["turn_id"] = t.turn_id;
            j["speaker"] = to_string(t.speaker);
            j["t_start_ms"] = t.t_start_ms;
            j["t_end_ms"] = t.t_end_ms;
            out += j.dump();
            out.push_back('\n');
        }
        write_text(dir / "turns.jsonl", out);
    }

    if (!s.nod_truth.empty()) {
        std::string out;
        for (const NodInterval& n : s.nod_truth) {
            ordered_json j;
            j["t_start_ms"] = n.t_start_ms;
            j["t_end_ms"] = n.t_end_ms;
            out += j.dump();
            out.push_back('\n');
        }
        write_text(dir / "nods.jsonl", out);
    } else {
        fs::remove(dir / "nods.jsonl", ec);
    }

    if (!s.annotations.empty()) {
        std::string out;
        for (const Annotation& a : s.annotations) {
            ordered_json j;
            j["annotator_id"] = a.annotator_id;
            j["turn_id"] = a.turn_id;
            j["engaged"] = a.engaged;
            out += j.dump();
            out.push_back('\n');
        }
        write_text(dir / "annotations.jsonl", out);
    } else {
        fs::remove(dir / "annotations.jsonl", ec);
    }

    if (s.gaze_truth) {
        std::string out(kGazeHeader);
        out.push_back('\n');
        for (size_t i = 0; i < s.frames.size(); ++i) {
            out += std::to_string(s.frames[i].timestamp_ms);
            out.push_back(',');
            out.push_back((*s.gaze_truth)[i] ? '1' : '0');
            out.push_back('\n');
        }
        write_text(dir / "gaze.csv", out);
    } else {
        fs::remove(dir / "gaze.csv", ec);
    }
}

}  // namespace engage::core
