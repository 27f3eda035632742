#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "learn/data.hpp"
#include "learn/lstm.hpp"  // TrainHistory

namespace engage::learn {

// Feed-forward net with rectifier hidden layers and a logistic output unit,
// trained with SGD on binary cross-entropy. Default shape is [d, 128, 128, 1].
struct MlpModel {
    std::vector<int> sizes;                   // [input, hidden..., 1]
    std::vector<std::vector<double>> w;       // per layer, row-major [out, in]
    std::vector<std::vector<double>> b;       // per layer, [out]
    int trained_epochs = 0;

    static MlpModel zeros(const std::vector<int>& sizes);
    static MlpModel init(const std::vector<int>& sizes, std::uint64_t seed);

    size_t param_count() const;
    std::vector<double> flatten_params() const;
    void set_params(std::span<const double> flat);
};

double mlp_predict(const MlpModel& m, std::span<const double> x);

double mlp_loss(const MlpModel& m, const FlatDataset& d);

std::pair<double, std::vector<double>> mlp_loss_grad(const MlpModel& m, const FlatDataset& d,
                                                     std::span<const size_t> indices);

struct MlpTrainResult {
    MlpModel model;
    TrainHistory history;
};

MlpTrainResult mlp_train(const FlatDataset& train, const FlatDataset& valid,
                         const TrainConfig& cfg, const std::vector<int>& hidden = {128, 128});

}  // namespace engage::learn
