#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <vector>

#include "core/lexicon.hpp"
#include "core/types.hpp"
#include "engagement/model.hpp"
#include "gaze/gaze.hpp"

namespace engage::synth {

// Log-normal sampler pinned by median and inter-quartile range, resampled
// into [floor, cap].
struct LogNormalSpec {
    double median = 1.0;
    double iqr = 0.5;
    double floor = 0.0;
    double cap = 1e9;

    double sigma() const;              // from the IQR
    double sample(std::mt19937_64& rng) const;
};

struct SynthConfig {
    int n_sessions = 50;

    LogNormalSpec robot_turns_per_session{38.0, 8.5, 8.0, 120.0};
    LogNormalSpec robot_turn_len_s{4.89, 7.03, 0.8, 20.0};
    LogNormalSpec user_turn_len_s{0.8, 0.6, 0.3, 6.0};
    LogNormalSpec nods_per_session{31.0, 30.5, 0.0, 120.0};
    LogNormalSpec nod_len_s{0.74, 0.50, 0.3, 3.0};

    // Positive-rate calibration targets.
    double nod_frame_rate = 0.115;
    double laughter_rate = 0.063;
    double backchannel_rate = 0.262;
    double gaze_turn_rate = 0.171;

    // 0 makes the signal classes indistinguishable from background, 1 makes
    // them nearly separable.
    double separability = 0.8;

    double ipus_per_robot_turn = 1.2;  // Poisson means
    double ipus_per_user_turn = 1.3;

    int n_annotators = 12;
    int n_characters = 3;
    std::vector<std::vector<double>> theta_star;  // empty -> default pattern
    std::vector<std::vector<double>> phi_star;    // [K][16]; empty -> default

    int embedding_dim = 40;
    std::uint64_t master_seed = 0;
};

SynthConfig load_synth_config(const std::filesystem::path& file);
void write_synth_config(const SynthConfig& cfg, const std::filesystem::path& file);

// Defaults used when the config leaves theta*/phi* empty.
std::vector<std::vector<double>> default_theta_star(int n_annotators, int n_characters);
std::vector<std::vector<double>> default_phi_star(int n_characters);

gaze::GazeGeometry default_geometry();

// Token pools plus embedding vectors for them; deterministic per seed.
core::Lexicon make_lexicon(const SynthConfig& cfg, std::uint64_t seed);

// One session with every ground-truth stream populated. Nod intervals always
// lie inside robot turns; gaze truth flags come from the actual geometry.
core::Session generate_session(const SynthConfig& cfg, std::uint64_t seed,
                               const gaze::GazeGeometry& geom, const core::Lexicon& lexicon,
                               const std::string& session_id);

// Ground-truth behavior state of one robot turn, fused from the session's
// truth streams (no detectors involved).
core::BehaviorState turn_truth_state(const core::Session& s, const core::Turn& turn,
                                     const gaze::GazeGeometry& geom);

// Draws one engaged label per (annotator, robot turn): character from
// theta*, label from Bernoulli(phi*[k][x]) at the turn's truth state.
std::vector<core::Annotation> generate_annotations(const core::Session& s,
                                                   const SynthConfig& cfg,
                                                   const gaze::GazeGeometry& geom,
                                                   std::uint64_t seed);

// Writes a full corpus: lexicon.jsonl, pos_tags.txt, geometry.json,
// truth_params.json, synth_config.json and sessions/<id>/ directories.
void generate_corpus(const SynthConfig& cfg, const std::filesystem::path& out_dir,
                     std::uint64_t seed);

// Helpers shared with evaluation code.
std::vector<std::filesystem::path> list_session_dirs(const std::filesystem::path& corpus_dir);
engagement::AnnotationRecord make_record(const std::string& session_id,
                                         const core::Annotation& a, int state);

}  // namespace engage::synth
