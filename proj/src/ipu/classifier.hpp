#pragma once

#include <filesystem>
#include <span>
#include <variant>
#include <vector>

#include "core/lexicon.hpp"
#include "core/types.hpp"
#include "ipu/features.hpp"
#include "learn/forest.hpp"
#include "learn/mlp.hpp"

namespace engage::ipu {

enum class Task { laughter, backchannel };
enum class FeatureMode { prosody_only, prosody_plus_linguistic };

const char* to_string(Task t);
const char* to_string(FeatureMode m);
Task task_from_string(const std::string& s);
FeatureMode feature_mode_from_string(const std::string& s);

// A trained per-IPU binary classifier plus the feature normalization stats
// captured from its training corpus. Laughter uses the two-hidden-layer MLP,
// backchannel the 56-tree forest.
struct IpuClassifierBundle {
    Task task = Task::laughter;
    FeatureMode mode = FeatureMode::prosody_plus_linguistic;
    std::variant<learn::MlpModel, learn::RandomForestModel> model;
    std::vector<double> norm_mean;
    std::vector<double> norm_std;

    int feature_dim() const { return static_cast<int>(norm_mean.size()); }
};

struct IpuTrainOptions {
    learn::TrainConfig train;   // MLP settings; seed also drives the forest
    int rf_trees = 56;
    double valid_fraction = 0.2;  // sessions held out for MLP early stopping
};

// Raw (un-normalized) feature vector in the bundle's layout. The lexicon may
// be null in prosody-only mode.
std::vector<double> ipu_feature_vector(const core::IpuRecord& ipu, FeatureMode mode,
                                       std::span<const double> history,
                                       const core::Lexicon* lexicon);

// History is teacher-forced from gold labels; IPUs without a label are
// excluded from the training rows and contribute 0 to histories.
IpuClassifierBundle train_ipu_classifier(std::span<const core::Session* const> corpus, Task task,
                                         FeatureMode mode, const IpuTrainOptions& opts,
                                         const core::Lexicon* lexicon);

// history[0] is the previous IPU's value, history[4] the fifth one back.
double classify_ipu(const IpuClassifierBundle& bundle, const core::IpuRecord& ipu,
                    std::span<const double> history, const core::Lexicon* lexicon);

// Sequential inference over one session's IPUs: history entries are the
// running outputs thresholded at 0.5. Never reads gold labels.
std::vector<double> classify_session(const IpuClassifierBundle& bundle,
                                     std::span<const core::IpuRecord> ipus,
                                     const core::Lexicon* lexicon);

void save_bundle(const IpuClassifierBundle& bundle, const std::filesystem::path& file);
IpuClassifierBundle load_bundle(const std::filesystem::path& file);

}  // namespace engage::ipu
