#pragma once

#include <cstdint>
#include <string>

#include "eval/harness.hpp"
#include "pipeline/train.hpp"

namespace engage::pipeline {

struct EvalOptions {
    std::uint64_t seed = 0;
    int max_epochs = 0;  // 0 = task default
    ipu::FeatureMode feature_mode = ipu::FeatureMode::prosody_plus_linguistic;
    bool context = false;
    int k = 3;
    int restarts = 10;
    int rf_trees = 56;
    double threshold = 0.5;
};

// Cross-validated per-task evaluation driving the trainers fold by fold.
// Reports carry pooled rows (model + always-positive baseline) and a
// per-fold block. evaluate_gaze needs no training and ignores the folds.
eval::EvalReport evaluate_nod(const Corpus& corpus, const eval::FoldsSpec& spec,
                              const EvalOptions& opts);
eval::EvalReport evaluate_ipu(const Corpus& corpus, ipu::Task task, const eval::FoldsSpec& spec,
                              const EvalOptions& opts);
eval::EvalReport evaluate_gaze(const Corpus& corpus);
eval::EvalReport evaluate_engagement(const Corpus& corpus, const eval::FoldsSpec& spec,
                                     const EvalOptions& opts);

}  // namespace engage::pipeline
