#pragma once

#include <filesystem>
#include <optional>

#include "core/lexicon.hpp"
#include "engagement/model.hpp"
#include "gaze/gaze.hpp"
#include "ipu/classifier.hpp"
#include "learn/lstm.hpp"
#include "nod/nod.hpp"

namespace engage::pipeline {

// Everything a recognizer needs: the four detectors, the engagement model,
// the gaze geometry and (when a bundle uses linguistic features) the lexicon.
struct ModelSet {
    learn::LstmModel nod_model;
    ipu::IpuClassifierBundle laughter;
    ipu::IpuClassifierBundle backchannel;
    engagement::EngagementModel engagement_model;
    gaze::GazeGeometry geometry;
    std::optional<core::Lexicon> lexicon;

    nod::NodEventConfig nod_cfg;
    double nod_threshold = 0.5;
    double ipu_threshold = 0.5;

    const core::Lexicon* lexicon_ptr() const { return lexicon ? &*lexicon : nullptr; }
};

// models_dir must hold nod.json, laughter.json, backchannel.json,
// engagement.json. The lexicon is searched in lexicon_hints then models_dir
// (lexicon.jsonl + pos_tags.txt); it is required only when a bundle uses
// linguistic features.
ModelSet load_models(const std::filesystem::path& models_dir,
                     const std::filesystem::path& geometry_path,
                     const std::vector<std::filesystem::path>& lexicon_hints = {});

}  // namespace engage::pipeline
