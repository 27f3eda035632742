#include "synth/generator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include <json.hpp>

#include "core/session_io.hpp"
#include "util/error.hpp"
#include "util/log.hpp"
#include "util/num.hpp"

namespace engage::synth {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kQuartileZ = 0.674489750196082;  // standard normal 75% point

double uniform(std::mt19937_64& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

double gauss(std::mt19937_64& rng, double mean = 0.0, double sd = 1.0) {
    return std::normal_distribution<double>(mean, sd)(rng);
}

bool bernoulli(std::mt19937_64& rng, double p) {
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p;
}

int poisson(std::mt19937_64& rng, double mean) {
    return std::poisson_distribution<int>(mean)(rng);
}

// Ornstein-Uhlenbeck style smooth noise on a fixed-step grid.
struct SmoothNoise {
    double value = 0.0;
    double rho = 0.0;
    double step_sd = 0.0;

    SmoothNoise(double sd, double tau_s, double dt_s, std::mt19937_64& rng) {
        rho = std::exp(-dt_s / tau_s);
        step_sd = sd * std::sqrt(1.0 - rho * rho);
        value = gauss(rng, 0.0, sd);
    }
    double next(std::mt19937_64& rng) {
        value = value * rho + gauss(rng, 0.0, step_sd);
        return value;
    }
};

struct Interval {
    std::int64_t start = 0;
    std::int64_t end = 0;
};

bool overlaps(const Interval& a, const Interval& b) {
    return std::max(a.start, b.start) < std::min(a.end, b.end);
}

// Gaze schedule segment: aim at the target or hold an offset away from it.
struct GazeSegment {
    std::int64_t start = 0;
    std::int64_t end = 0;
    bool look = false;
    double yaw_off = 0.0;
    double pitch_off = 0.0;
};

// Per-class IPU sound parameters; class params interpolate toward the
// "other" class as separability drops.
struct IpuClassParams {
    double dur_median, dur_iqr, dur_floor, dur_cap;
    double f0_scale;    // relative to the session speaker base
    double f0_osc_amp;  // Hz, slow oscillation -> pitch range
    double f0_slope;    // Hz/s
    double voiced_frac;
    double int_base_off;  // dB
    double int_mod;       // dB, 5 Hz burst amplitude
    double int_sd;        // dB, frame noise
    double tokens_lo, tokens_hi;
};

IpuClassParams other_params() {
    return {1.4, 1.2, 0.4, 6.0, 1.0, 8.0, 0.0, 0.75, 0.0, 0.0, 2.5, 3, 10};
}

IpuClassParams laughter_params() {
    return {0.9, 0.6, 0.35, 3.0, 1.5, 55.0, 0.0, 0.55, 3.0, 8.0, 3.0, 1, 3};
}

IpuClassParams backchannel_params() {
    return {0.45, 0.25, 0.25, 1.2, 1.05, 6.0, -120.0, 0.85, -2.0, 0.0, 2.0, 1, 2};
}

double lerp(double a, double b, double t) { return a + (b - a) * t; }

IpuClassParams lerp_params(const IpuClassParams& base, const IpuClassParams& cls, double s) {
    IpuClassParams p;
    p.dur_median = std::exp(lerp(std::log(base.dur_median), std::log(cls.dur_median), s));
    p.dur_iqr = lerp(base.dur_iqr, cls.dur_iqr, s);
    p.dur_floor = lerp(base.dur_floor, cls.dur_floor, s);
    p.dur_cap = lerp(base.dur_cap, cls.dur_cap, s);
    p.f0_scale = lerp(base.f0_scale, cls.f0_scale, s);
    p.f0_osc_amp = lerp(base.f0_osc_amp, cls.f0_osc_amp, s);
    p.f0_slope = lerp(base.f0_slope, cls.f0_slope, s);
    p.voiced_frac = lerp(base.voiced_frac, cls.voiced_frac, s);
    p.int_base_off = lerp(base.int_base_off, cls.int_base_off, s);
    p.int_mod = lerp(base.int_mod, cls.int_mod, s);
    p.int_sd = lerp(base.int_sd, cls.int_sd, s);
    p.tokens_lo = lerp(base.tokens_lo, cls.tokens_lo, s);
    p.tokens_hi = lerp(base.tokens_hi, cls.tokens_hi, s);
    return p;
}

const std::vector<std::string>& laughter_pool() {
    static const std::vector<std::string> pool{"hahaha", "haha", "ahaha", "huhu", "heehee", "hha"};
    return pool;
}

const std::vector<std::string>& backchannel_pool() {
    static const std::vector<std::string> pool{"un",   "ee",       "hai", "soudesune",
                                               "naruhodo", "fuun", "hee", "aa"};
    return pool;
}

std::vector<std::string> shared_pool() {
    std::vector<std::string> pool;
    for (int i = 1; i <= 48; ++i) {
        char buf[8];
        std::snprintf(buf, sizeof(buf), "w%02d", i);
        pool.emplace_back(buf);
    }
    return pool;
}

const std::vector<std::string>& content_tags() {
    static const std::vector<std::string> tags{"noun",     "verb",    "adjective", "adverb",
                                               "particle", "auxiliary", "pronoun",
                                               "conjunction"};
    return tags;
}

// Yaw/pitch (deg, roll 0) that aim the head frame's +z at a world point.
std::pair<double, double> aim_angles(const gaze::Vec3& head_sensor, const gaze::Vec3& target_world,
                                     const gaze::GazeGeometry& geom) {
    gaze::Vec3 origin{};
    for (int i = 0; i < 3; ++i) {
        origin[i] = geom.sensor_position[i];
        for (int k = 0; k < 3; ++k) origin[i] += geom.sensor_rotation[i][k] * head_sensor[k];
    }
    gaze::Vec3 dw{target_world[0] - origin[0], target_world[1] - origin[1],
                  target_world[2] - origin[2]};
    // Back into sensor coordinates (rotation transpose).
    gaze::Vec3 d{};
    for (int i = 0; i < 3; ++i)
        for (int k = 0; k < 3; ++k) d[i] += geom.sensor_rotation[k][i] * dw[k];
    double n = std::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
    for (double& v : d) v /= n;
    double yaw = std::asin(std::clamp(d[0], -1.0, 1.0)) * 180.0 / kPi;
    double pitch = std::atan2(-d[1], d[2]) * 180.0 / kPi;
    return {yaw, pitch};
}

}  // namespace

double LogNormalSpec::sigma() const {
    require(median > 0.0 && iqr > 0.0, ErrorCode::usage, "log-normal spec needs median, iqr > 0");
    return std::asinh(iqr / (2.0 * median)) / kQuartileZ;
}

double LogNormalSpec::sample(std::mt19937_64& rng) const {
    double mu = std::log(median);
    double sd = sigma();
    for (int tries = 0; tries < 256; ++tries) {
        double v = std::exp(mu + sd * gauss(rng));
        if (v >= floor && v <= cap) return v;
    }
    return std::clamp(median, floor, cap);
}

std::vector<std::vector<double>> default_theta_star(int n_annotators, int n_characters) {
    require(n_annotators >= 2 && n_characters >= 1, ErrorCode::usage,
            "need >=2 annotators and >=1 character");
    std::vector<std::vector<double>> theta(n_annotators, std::vector<double>(n_characters));
    for (int i = 0; i < n_annotators; ++i) {
        double off = n_characters > 1 ? 0.2 / (n_characters - 1) : 0.0;
        for (int k = 0; k < n_characters; ++k) theta[i][k] = off;
        theta[i][i % n_characters] = n_characters > 1 ? 0.8 : 1.0;
    }
    return theta;
}

std::vector<std::vector<double>> default_phi_star(int n_characters) {
    require(n_characters == 3, ErrorCode::usage,
            "default phi_star is defined for 3 characters; supply phi_star explicitly");
    std::vector<std::vector<double>> phi(3, std::vector<double>(16));
    for (int x = 0; x < 16; ++x) {
        bool nod = x & 1, laugh = x & 2, bc = x & 4, gz = x & 8;
        phi[0][x] = gz ? 0.85 : 0.12;
        phi[1][x] = (nod || bc) ? 0.80 : 0.10;
        phi[2][x] = laugh ? 0.85 : 0.30;
    }
    return phi;
}

gaze::GazeGeometry default_geometry() {
    gaze::GazeGeometry g;
    g.sensor_position = {0.0, 0.0, 0.0};
    g.sensor_rotation = {{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
    g.target_center = {0.3, 0.05, 3.8};  // past the user, slightly off axis
    g.target_radius = 0.30;
    return g;
}

core::Lexicon make_lexicon(const SynthConfig& cfg, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    core::Lexicon lex;
    lex.pos_tags = {"noun",     "verb",      "adjective",   "adverb",       "particle",
                    "auxiliary", "pronoun",  "conjunction", "interjection", "symbol"};

    int dim = cfg.embedding_dim;
    require(dim >= 2, ErrorCode::usage, "embedding_dim must be >= 2");
    auto unit_gauss = [&](double scale) {
        std::vector<double> v(dim);
        double n2 = 0.0;
        for (double& x : v) {
            x = gauss(rng);
            n2 += x * x;
        }
        double inv = scale / std::sqrt(n2);
        for (double& x : v) x *= inv;
        return v;
    };

    std::vector<double> laugh_center = unit_gauss(1.0);
    std::vector<double> bc_center = unit_gauss(1.0);
    auto near_center = [&](const std::vector<double>& center) {
        std::vector<double> v = unit_gauss(0.35);
        for (int i = 0; i < dim; ++i) v[i] += center[i];
        return v;
    };

    for (const std::string& w : laughter_pool()) lex.embeddings[w] = near_center(laugh_center);
    for (const std::string& w : backchannel_pool()) lex.embeddings[w] = near_center(bc_center);
    for (const std::string& w : shared_pool()) lex.embeddings[w] = unit_gauss(1.0);
    return lex;
}

core::Session generate_session(const SynthConfig& cfg, std::uint64_t seed,
                               const gaze::GazeGeometry& geom, const core::Lexicon& lexicon,
                               const std::string& session_id) {
    require(cfg.separability >= 0.0 && cfg.separability <= 1.0, ErrorCode::usage,
            "separability must be in [0,1]");
    for (double r : {cfg.nod_frame_rate, cfg.laughter_rate, cfg.backchannel_rate,
                     cfg.gaze_turn_rate})
        require(r > 0.0 && r < 1.0, ErrorCode::usage, "rate targets must lie in (0,1)");

    require(lexicon.embedding_dim() > 0, ErrorCode::usage,
            "lexicon must carry embeddings for the generated token pools");
    std::mt19937_64 rng(seed);
    core::Session s;
    s.session_id = session_id;

    // ---- turn layout: alternating robot/user turns with short silences ----
    int n_rt = std::max(1, static_cast<int>(std::llround(cfg.robot_turns_per_session.sample(rng))));
    std::int64_t t = 400;
    int turn_no = 0;
    std::vector<core::Turn> robot;
    for (int j = 0; j < n_rt; ++j) {
        std::int64_t lr = static_cast<std::int64_t>(cfg.robot_turn_len_s.sample(rng) * 1000.0);
        core::Turn rt{"t" + std::to_string(++turn_no), core::Speaker::robot, t, t + lr};
        s.turns.push_back(rt);
        robot.push_back(rt);
        t += lr + static_cast<std::int64_t>(uniform(rng, 100.0, 400.0));
        std::int64_t lu = static_cast<std::int64_t>(cfg.user_turn_len_s.sample(rng) * 1000.0);
        s.turns.push_back({"t" + std::to_string(++turn_no), core::Speaker::user, t, t + lu});
        t += lu + static_cast<std::int64_t>(uniform(rng, 100.0, 400.0));
    }
    std::int64_t session_end = t + 400;

    // ---- gaze schedule: reserved continuous-look windows on chosen turns ----
    // Eligibility leaves room for the smoothing lag on both window edges.
    const std::int64_t window_margin = 1400;
    double p_eligible;
    {
        std::mt19937_64 probe(0x5eed5eedULL);
        int hits = 0;
        const int trials = 4000;
        for (int i = 0; i < trials; ++i)
            if (cfg.robot_turn_len_s.sample(probe) * 1000.0 >=
                static_cast<double>(geom.min_gaze_ms + window_margin))
                ++hits;
        p_eligible = static_cast<double>(hits) / trials;
    }
    require(p_eligible > cfg.gaze_turn_rate, ErrorCode::usage,
            "infeasible rate combination: gaze_turn_rate " + fmt_double(cfg.gaze_turn_rate) +
                " exceeds the eligible-turn fraction " + fmt_double(p_eligible));
    double p_use = cfg.gaze_turn_rate / p_eligible;

    std::vector<GazeSegment> segments;
    std::vector<Interval> reserved;  // per robot turn windows, time order
    for (const core::Turn& rt : robot) {
        std::int64_t len = rt.t_end_ms - rt.t_start_ms;
        if (len < geom.min_gaze_ms + window_margin || !bernoulli(rng, p_use)) continue;
        std::int64_t wl = geom.min_gaze_ms + static_cast<std::int64_t>(uniform(rng, 700.0, 1200.0));
        std::int64_t ws = rt.t_start_ms +
                          static_cast<std::int64_t>(uniform(
                              rng, 100.0, static_cast<double>(len - wl - 100)));
        reserved.push_back({ws, ws + wl});
        segments.push_back({ws, ws + wl, true, 0.0, 0.0});
    }

    // Ambient look/away alternation fills the rest of the timeline.
    {
        std::int64_t pos = 0;
        size_t next_window = 0;
        bool look = bernoulli(rng, 0.4);
        while (pos < session_end) {
            while (next_window < reserved.size() && reserved[next_window].end <= pos) ++next_window;
            if (next_window < reserved.size() && pos >= reserved[next_window].start) {
                pos = reserved[next_window].end;
                continue;
            }
            std::int64_t len = look ? static_cast<std::int64_t>(uniform(rng, 1000.0, 5500.0))
                                    : static_cast<std::int64_t>(uniform(rng, 500.0, 3000.0));
            std::int64_t end = pos + len;
            if (next_window < reserved.size()) end = std::min(end, reserved[next_window].start);
            end = std::min(end, session_end);
            GazeSegment seg{pos, end, look, 0.0, 0.0};
            if (!look) {
                seg.yaw_off = (bernoulli(rng, 0.5) ? 1.0 : -1.0) * uniform(rng, 36.0, 70.0);
                seg.pitch_off = uniform(rng, -5.0, 5.0);
            }
            segments.push_back(seg);
            pos = end;
            look = !look;
        }
        std::sort(segments.begin(), segments.end(),
                  [](const GazeSegment& a, const GazeSegment& b) { return a.start < b.start; });
    }

    // ---- nods: damped pitch oscillations placed inside robot turns ----
    struct Nod {
        std::int64_t start, end;
        double amp, freq;
    };
    std::vector<Nod> nods;
    {
        int want = static_cast<int>(std::llround(cfg.nods_per_session.sample(rng)));
        std::vector<std::vector<Interval>> occupied(robot.size());
        for (size_t r = 0; r < robot.size(); ++r)
            for (const Interval& w : reserved)
                if (overlaps(w, {robot[r].t_start_ms, robot[r].t_end_ms})) occupied[r].push_back(w);
        std::vector<double> weight(robot.size());
        for (size_t r = 0; r < robot.size(); ++r)
            weight[r] = static_cast<double>(robot[r].t_end_ms - robot[r].t_start_ms);
        std::discrete_distribution<size_t> pick_turn(weight.begin(), weight.end());

        for (int i = 0; i < want; ++i) {
            std::int64_t dur = static_cast<std::int64_t>(cfg.nod_len_s.sample(rng) * 1000.0);
            bool placed = false;
            for (int tries = 0; tries < 60 && !placed; ++tries) {
                size_t r = pick_turn(rng);
                std::int64_t len = robot[r].t_end_ms - robot[r].t_start_ms;
                if (len < dur + 100) continue;
                std::int64_t start =
                    robot[r].t_start_ms +
                    static_cast<std::int64_t>(uniform(rng, 50.0, static_cast<double>(len - dur - 50)));
                Interval cand{start - 120, start + dur + 120};
                bool clash = false;
                for (const Interval& o : occupied[r]) clash |= overlaps(o, cand);
                if (clash) continue;
                occupied[r].push_back(cand);
                nods.push_back({start, start + dur, uniform(rng, 10.0, 20.0) * cfg.separability,
                                uniform(rng, 1.5, 3.0)});
                placed = true;
            }
        }
        std::sort(nods.begin(), nods.end(), [](const Nod& a, const Nod& b) { return a.start < b.start; });
        for (const Nod& nd : nods) s.nod_truth.push_back({nd.start, nd.end});
    }

    // ---- pose frames at 30 Hz ----
    {
        const double dt = 1.0 / 30.0;
        SmoothNoise yaw_noise(1.2, 0.8, dt, rng), pitch_noise(1.0, 0.8, dt, rng),
            roll_noise(1.5, 0.8, dt, rng);
        SmoothNoise px(0.02, 1.5, dt, rng), py(0.02, 1.5, dt, rng), pz(0.02, 1.5, dt, rng);
        double base_yaw = 0.0, base_pitch = 0.0;
        bool base_init = false;
        size_t seg_idx = 0, nod_idx = 0;
        const double alpha = 1.0 - std::exp(-dt / 0.12);  // ~120 ms transition constant

        std::vector<bool> gaze_flags;
        for (std::int64_t i = 0;; ++i) {
            std::int64_t ts = static_cast<std::int64_t>(std::llround(i * 1000.0 / 30.0));
            if (ts > session_end) break;
            core::PoseFrame f;
            f.timestamp_ms = ts;
            f.head_pos = {0.0 + px.next(rng), 0.0 + py.next(rng), 2.0 + pz.next(rng)};

            while (seg_idx + 1 < segments.size() && segments[seg_idx].end <= ts) ++seg_idx;
            const GazeSegment& seg = segments[seg_idx];
            auto [aim_yaw, aim_pitch] = aim_angles(f.head_pos, geom.target_center, geom);
            double target_yaw = aim_yaw + (seg.look ? 0.0 : seg.yaw_off);
            double target_pitch = aim_pitch + (seg.look ? 0.0 : seg.pitch_off);
            if (!base_init) {
                base_yaw = target_yaw;
                base_pitch = target_pitch;
                base_init = true;
            } else {
                base_yaw += (target_yaw - base_yaw) * alpha;
                base_pitch += (target_pitch - base_pitch) * alpha;
            }

            double nod_pitch = 0.0;
            while (nod_idx < nods.size() && nods[nod_idx].end < ts) ++nod_idx;
            if (nod_idx < nods.size() && ts >= nods[nod_idx].start) {
                const Nod& nd = nods[nod_idx];
                double u = static_cast<double>(ts - nd.start) / 1000.0;
                double dur_s = static_cast<double>(nd.end - nd.start) / 1000.0;
                double damp = std::exp(-std::log(4.0) * u / dur_s);
                nod_pitch = nd.amp * damp * std::sin(2.0 * kPi * nd.freq * u);
            }

            f.yaw_deg = base_yaw + yaw_noise.next(rng);
            f.pitch_deg = base_pitch + pitch_noise.next(rng) + nod_pitch;
            f.roll_deg = roll_noise.next(rng);
            s.frames.push_back(f);
            gaze_flags.push_back(gaze::looking_at_target(f, geom));
        }
        s.gaze_truth = std::move(gaze_flags);
    }

    // ---- IPUs with class-conditional prosody, tokens and labels ----
    {
        double f_r = cfg.ipus_per_robot_turn / (cfg.ipus_per_robot_turn + cfg.ipus_per_user_turn);
        double bc_cond = cfg.backchannel_rate / ((1.0 - cfg.laughter_rate) * f_r);
        require(bc_cond <= 1.0, ErrorCode::usage,
                "infeasible rate combination: backchannel_rate " +
                    fmt_double(cfg.backchannel_rate) + " needs per-IPU probability " +
                    fmt_double(bc_cond));

        double speaker_base_f0 = uniform(rng, 110.0, 200.0);
        double speaker_base_int = uniform(rng, 58.0, 64.0);
        double sep = cfg.separability;
        int ipu_no = 0;

        std::vector<std::string> shared = shared_pool();
        for (const core::Turn& turn : s.turns) {
            bool is_robot = turn.speaker == core::Speaker::robot;
            int n = poisson(rng, is_robot ? cfg.ipus_per_robot_turn : cfg.ipus_per_user_turn);
            std::int64_t cursor = turn.t_start_ms + static_cast<std::int64_t>(uniform(rng, 50.0, 300.0));
            for (int k = 0; k < n; ++k) {
                core::IpuLabel label = core::IpuLabel::other;
                if (bernoulli(rng, cfg.laughter_rate)) label = core::IpuLabel::laughter;
                else if (is_robot && bernoulli(rng, bc_cond)) label = core::IpuLabel::backchannel;

                IpuClassParams params = other_params();
                if (label == core::IpuLabel::laughter)
                    params = lerp_params(other_params(), laughter_params(), sep);
                else if (label == core::IpuLabel::backchannel)
                    params = lerp_params(other_params(), backchannel_params(), sep);

                LogNormalSpec dur_spec{params.dur_median, std::max(0.05, params.dur_iqr),
                                       params.dur_floor, params.dur_cap};
                std::int64_t dur = static_cast<std::int64_t>(dur_spec.sample(rng) * 1000.0);
                if (cursor + dur + 50 > turn.t_end_ms) break;

                core::IpuRecord ipu;
                ipu.ipu_id = "i" + std::to_string(++ipu_no);
                ipu.t_start_ms = cursor;
                ipu.t_end_ms = cursor + dur;
                ipu.hop_ms = 10;
                ipu.label = label;
                cursor += dur + static_cast<std::int64_t>(uniform(rng, 150.0, 600.0));

                size_t track_len = static_cast<size_t>(dur / 10);
                double f0_base = speaker_base_f0 * params.f0_scale;
                double f0_phase = uniform(rng, 0.0, 2.0 * kPi);
                double int_phase = uniform(rng, 0.0, 2.0 * kPi);
                double int_base = speaker_base_int + params.int_base_off + gauss(rng, 0.0, 1.0);

                // Voiced/unvoiced run pattern targeting the voiced fraction.
                std::vector<bool> voiced(track_len, true);
                {
                    size_t i = 0;
                    bool v = bernoulli(rng, params.voiced_frac);
                    while (i < track_len) {
                        double frac = std::clamp(params.voiced_frac, 0.05, 0.98);
                        size_t run = v ? static_cast<size_t>(uniform(rng, 4.0, 16.0))
                                       : static_cast<size_t>(std::max(
                                             1.0, uniform(rng, 2.0, 12.0) * (1.0 - frac) / frac));
                        for (size_t j = 0; j < run && i < track_len; ++j, ++i) voiced[i] = v;
                        v = !v;
                    }
                }
                for (size_t i = 0; i < track_len; ++i) {
                    double tt = static_cast<double>(i) * 0.01;
                    if (voiced[i]) {
                        double f0 = f0_base + params.f0_slope * tt +
                                    params.f0_osc_amp * std::sin(2.0 * kPi * 2.5 * tt + f0_phase) +
                                    gauss(rng, 0.0, 2.0);
                        ipu.f0_hz.push_back(std::max(40.0, f0));
                    } else {
                        ipu.f0_hz.push_back(0.0);
                    }
                    double arc = 2.0 * std::sin(kPi * static_cast<double>(i + 1) /
                                                static_cast<double>(track_len + 1));
                    double it = int_base + arc +
                                params.int_mod * std::sin(2.0 * kPi * 5.0 * tt + int_phase) +
                                gauss(rng, 0.0, params.int_sd);
                    ipu.intensity_db.push_back(it);
                }

                int n_tokens = static_cast<int>(
                    std::llround(uniform(rng, params.tokens_lo, params.tokens_hi)));
                n_tokens = std::max(1, n_tokens);
                const std::vector<std::string>* class_pool = nullptr;
                if (label == core::IpuLabel::laughter) class_pool = &laughter_pool();
                else if (label == core::IpuLabel::backchannel) class_pool = &backchannel_pool();
                for (int w = 0; w < n_tokens; ++w) {
                    core::Token tok;
                    if (class_pool && bernoulli(rng, sep)) {
                        tok.surface = (*class_pool)[static_cast<size_t>(
                            uniform(rng, 0.0, static_cast<double>(class_pool->size()) - 1e-9))];
                        tok.pos = "interjection";
                    } else {
                        tok.surface = shared[static_cast<size_t>(
                            uniform(rng, 0.0, static_cast<double>(shared.size()) - 1e-9))];
                        const auto& tags = content_tags();
                        tok.pos = tags[static_cast<size_t>(
                            uniform(rng, 0.0, static_cast<double>(tags.size()) - 1e-9))];
                    }
                    tok.embedding_id = tok.surface;
                    ipu.tokens.push_back(std::move(tok));
                }
                s.ipus.push_back(std::move(ipu));
            }
        }
    }

    core::validate(s);
    return s;
}

core::BehaviorState turn_truth_state(const core::Session& s, const core::Turn& turn,
                                     const gaze::GazeGeometry& geom) {
    core::BehaviorState b;
    for (const core::NodInterval& nd : s.nod_truth)
        if (std::max(nd.t_start_ms, turn.t_start_ms) < std::min(nd.t_end_ms, turn.t_end_ms))
            b.nod = true;
    for (const core::IpuRecord& ipu : s.ipus) {
        if (!ipu.label) continue;
        if (std::max(ipu.t_start_ms, turn.t_start_ms) >= std::min(ipu.t_end_ms, turn.t_end_ms))
            continue;
        if (*ipu.label == core::IpuLabel::laughter) b.laughter = true;
        if (*ipu.label == core::IpuLabel::backchannel) b.backchannel = true;
    }
    if (s.gaze_truth) {
        std::vector<std::int64_t> ts;
        ts.reserve(s.frames.size());
        for (const core::PoseFrame& f : s.frames) ts.push_back(f.timestamp_ms);
        b.gaze = gaze::gaze_label_from_flags(ts, *s.gaze_truth, turn, geom);
    } else {
        b.gaze = gaze::gaze_label_turn(s.frames, turn, geom);
    }
    return b;
}

std::vector<core::Annotation> generate_annotations(const core::Session& s, const SynthConfig& cfg,
                                                   const gaze::GazeGeometry& geom,
                                                   std::uint64_t seed) {
    auto theta = cfg.theta_star.empty()
                     ? default_theta_star(cfg.n_annotators, cfg.n_characters)
                     : cfg.theta_star;
    auto phi = cfg.phi_star.empty() ? default_phi_star(cfg.n_characters) : cfg.phi_star;
    require(static_cast<int>(theta.size()) == cfg.n_annotators, ErrorCode::usage,
            "theta_star row count must equal n_annotators");
    for (const auto& row : theta)
        require(static_cast<int>(row.size()) == cfg.n_characters, ErrorCode::usage,
                "theta_star column count must equal n_characters");
    require(static_cast<int>(phi.size()) == cfg.n_characters, ErrorCode::usage,
            "phi_star row count must equal n_characters");
    for (const auto& row : phi)
        require(row.size() == 16, ErrorCode::usage, "phi_star rows must have 16 states");

    std::mt19937_64 rng(seed);
    std::vector<core::Annotation> out;
    for (const core::Turn& turn : robot_turns(s)) {
        int x = core::encode_state(turn_truth_state(s, turn, geom), false);
        for (int i = 0; i < cfg.n_annotators; ++i) {
            std::discrete_distribution<int> pick(theta[i].begin(), theta[i].end());
            int k = pick(rng);
            int y = bernoulli(rng, phi[k][x]) ? 1 : 0;
            char buf[16];
            std::snprintf(buf, sizeof(buf), "a%02d", i + 1);
            out.push_back({buf, turn.turn_id, y});
        }
    }
    return out;
}

void generate_corpus(const SynthConfig& cfg, const fs::path& out_dir, std::uint64_t seed) {
    require(cfg.n_sessions >= 1, ErrorCode::usage, "n_sessions must be >= 1");
    std::error_code ec;
    fs::create_directories(out_dir / "sessions", ec);
    require(fs::is_directory(out_dir / "sessions"), ErrorCode::io,
            "cannot create " + (out_dir / "sessions").string());

    std::mt19937_64 master(seed);
    std::uint64_t lex_seed = master();
    std::vector<std::uint64_t> session_seeds(cfg.n_sessions), ann_seeds(cfg.n_sessions);
    for (int i = 0; i < cfg.n_sessions; ++i) {
        session_seeds[i] = master();
        ann_seeds[i] = master();
    }

    core::Lexicon lexicon = make_lexicon(cfg, lex_seed);
    gaze::GazeGeometry geom = default_geometry();

    core::write_lexicon(lexicon, out_dir / "lexicon.jsonl", out_dir / "pos_tags.txt");
    gaze::write_geometry(geom, out_dir / "geometry.json");
    write_synth_config(cfg, out_dir / "synth_config.json");
    {
        auto theta = cfg.theta_star.empty()
                         ? default_theta_star(cfg.n_annotators, cfg.n_characters)
                         : cfg.theta_star;
        auto phi = cfg.phi_star.empty() ? default_phi_star(cfg.n_characters) : cfg.phi_star;
        ordered_json j;
        j["theta_star"] = theta;
        j["phi_star"] = phi;
        std::ofstream out(out_dir / "truth_params.json", std::ios::binary | std::ios::trunc);
        if (!out) fail_io("cannot open truth_params.json for writing");
        out << j.dump(2) << '\n';
    }

    for (int i = 0; i < cfg.n_sessions; ++i) {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "s%03d", i + 1);
        core::Session s = generate_session(cfg, session_seeds[i], geom, lexicon, buf);
        s.annotations = generate_annotations(s, cfg, geom, ann_seeds[i]);
        core::write_session(s, out_dir / "sessions" / buf);
        log_debug("generated session " + std::string(buf) + " (" +
                  std::to_string(s.frames.size()) + " frames, " + std::to_string(s.ipus.size()) +
                  " ipus)");
    }
    log_info("corpus written to " + out_dir.string());
}

std::vector<fs::path> list_session_dirs(const fs::path& corpus_dir) {
    fs::path root = corpus_dir / "sessions";
    if (!fs::is_directory(root)) root = corpus_dir;  // allow a bare directory of sessions
    std::vector<fs::path> dirs;
    for (const auto& entry : fs::directory_iterator(root))
        if (entry.is_directory() && fs::exists(entry.path() / "frames.csv"))
            dirs.push_back(entry.path());
    std::sort(dirs.begin(), dirs.end());
    require(!dirs.empty(), ErrorCode::io, "no session directories under " + corpus_dir.string());
    return dirs;
}

engagement::AnnotationRecord make_record(const std::string& session_id, const core::Annotation& a,
                                         int state) {
    return {a.annotator_id, session_id + "/" + a.turn_id, state, a.engaged};
}

namespace {

LogNormalSpec spec_from_json(const json& j, const LogNormalSpec& defaults) {
    LogNormalSpec s = defaults;
    s.median = j.value("median", defaults.median);
    s.iqr = j.value("iqr", defaults.iqr);
    s.floor = j.value("floor", defaults.floor);
    s.cap = j.value("cap", defaults.cap);
    return s;
}

ordered_json spec_to_json(const LogNormalSpec& s) {
    return {{"median", s.median}, {"iqr", s.iqr}, {"floor", s.floor}, {"cap", s.cap}};
}

}  // namespace

SynthConfig load_synth_config(const fs::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) fail_io("cannot open " + file.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        fail_data(file.string() + ": " + e.what());
    }
    SynthConfig cfg;
    try {
        cfg.n_sessions = j.value("n_sessions", cfg.n_sessions);
        if (j.contains("robot_turns_per_session"))
            cfg.robot_turns_per_session =
                spec_from_json(j["robot_turns_per_session"], cfg.robot_turns_per_session);
        if (j.contains("robot_turn_len_s"))
            cfg.robot_turn_len_s = spec_from_json(j["robot_turn_len_s"], cfg.robot_turn_len_s);
        if (j.contains("user_turn_len_s"))
            cfg.user_turn_len_s = spec_from_json(j["user_turn_len_s"], cfg.user_turn_len_s);
        if (j.contains("nods_per_session"))
            cfg.nods_per_session = spec_from_json(j["nods_per_session"], cfg.nods_per_session);
        if (j.contains("nod_len_s"))
            cfg.nod_len_s = spec_from_json(j["nod_len_s"], cfg.nod_len_s);
        cfg.nod_frame_rate = j.value("nod_frame_rate", cfg.nod_frame_rate);
        cfg.laughter_rate = j.value("laughter_rate", cfg.laughter_rate);
        cfg.backchannel_rate = j.value("backchannel_rate", cfg.backchannel_rate);
        cfg.gaze_turn_rate = j.value("gaze_turn_rate", cfg.gaze_turn_rate);
        cfg.separability = j.value("separability", cfg.separability);
        cfg.ipus_per_robot_turn = j.value("ipus_per_robot_turn", cfg.ipus_per_robot_turn);
        cfg.ipus_per_user_turn = j.value("ipus_per_user_turn", cfg.ipus_per_user_turn);
        cfg.n_annotators = j.value("n_annotators", cfg.n_annotators);
        cfg.n_characters = j.value("n_characters", cfg.n_characters);
        cfg.embedding_dim = j.value("embedding_dim", cfg.embedding_dim);
        cfg.master_seed = j.value("master_seed", cfg.master_seed);
        if (j.contains("theta_star"))
            cfg.theta_star = j["theta_star"].get<std::vector<std::vector<double>>>();
        if (j.contains("phi_star"))
            cfg.phi_star = j["phi_star"].get<std::vector<std::vector<double>>>();
    } catch (const json::exception& e) {
        fail_data(file.string() + ": " + e.what());
    }
    return cfg;
}

void write_synth_config(const SynthConfig& cfg, const fs::path& file) {
    ordered_json j;
    j["n_sessions"] = cfg.n_sessions;
    j["robot_turns_per_session"] = spec_to_json(cfg.robot_turns_per_session);
    j["robot_turn_len_s"] = spec_to_json(cfg.robot_turn_len_s);
    j["user_turn_len_s"] = spec_to_json(cfg.user_turn_len_s);
    j["nods_per_session"] = spec_to_json(cfg.nods_per_session);
    j["nod_len_s"] = spec_to_json(cfg.nod_len_s);
    j["nod_frame_rate"] = cfg.nod_frame_rate;
    j["laughter_rate"] = cfg.laughter_rate;
    j["backchannel_rate"] = cfg.backchannel_rate;
    j["gaze_turn_rate"] = cfg.gaze_turn_rate;
    j["separability"] = cfg.separability;
    j["ipus_per_robot_turn"] = cfg.ipus_per_robot_turn;
    j["ipus_per_user_turn"] = cfg.ipus_per_user_turn;
    j["n_annotators"] = cfg.n_annotators;
    j["n_characters"] = cfg.n_characters;
    j["embedding_dim"] = cfg.embedding_dim;
    j["master_seed"] = cfg.master_seed;
    if (!cfg.theta_star.empty()) j["theta_star"] = cfg.theta_star;
    if (!cfg.phi_star.empty()) j["phi_star"] = cfg.phi_star;
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) fail_io("cannot open " + file.string() + " for writing");
    out << j.dump(2) << '\n';
}

}  // namespace engage::synth
