#include "pipeline/models.hpp"

#include "learn/model_io.hpp"
#include "util/error.hpp"
#include "util/log.hpp"

namespace engage::pipeline {

namespace fs = std::filesystem;

ModelSet load_models(const fs::path& models_dir, const fs::path& geometry_path,
                     const std::vector<fs::path>& lexicon_hints) {
    require(fs::is_directory(models_dir), ErrorCode::model,
            "not a models directory: " + models_dir.string());
    for (const char* name : {"nod.json", "laughter.json", "backchannel.json", "engagement.json"})
        require(fs::exists(models_dir / name), ErrorCode::model,
                "missing model file " + (models_dir / name).string());

    ModelSet set;
    auto nod_model = learn::load_model(models_dir / "nod.json");
    auto* lstm = std::get_if<learn::LstmModel>(&nod_model);
    require(lstm != nullptr, ErrorCode::model, "nod.json must hold an lstm model");
    require(lstm->input_dim == nod::kFeatureDim, ErrorCode::model,
            "nod model input dim mismatch");
    set.nod_model = std::move(*lstm);

    set.laughter = ipu::load_bundle(models_dir / "laughter.json");
    require(set.laughter.task == ipu::Task::laughter, ErrorCode::model,
            "laughter.json holds a bundle for the wrong task");
    set.backchannel = ipu::load_bundle(models_dir / "backchannel.json");
    require(set.backchannel.task == ipu::Task::backchannel, ErrorCode::model,
            "backchannel.json holds a bundle for the wrong task");

    set.engagement_model = engagement::load_engagement_model(models_dir / "engagement.json");
    set.geometry = gaze::load_geometry(geometry_path);

    bool needs_lexicon = set.laughter.mode == ipu::FeatureMode::prosody_plus_linguistic ||
                         set.backchannel.mode == ipu::FeatureMode::prosody_plus_linguistic;
    std::vector<fs::path> hints = lexicon_hints;
    hints.push_back(models_dir);
    for (const fs::path& dir : hints) {
        if (fs::exists(dir / "lexicon.jsonl") && fs::exists(dir / "pos_tags.txt")) {
            set.lexicon = core::load_lexicon(dir / "lexicon.jsonl", dir / "pos_tags.txt");
            log_debug("lexicon loaded from " + dir.string());
            break;
        }
    }
    require(!needs_lexicon || set.lexicon.has_value(), ErrorCode::model,
            "classifier bundles use linguistic features but no lexicon.jsonl/pos_tags.txt "
            "was found next to the session, corpus or models");
    return set;
}

}  // namespace engage::pipeline
