#pragma once

#include <cstdint>
#include <vector>

namespace engage::learn {

struct TrainConfig {
    double learning_rate = 0.001;
    int batch_size = 32;
    int max_epochs = 100;
    int validation_check_every = 5;  // epochs between validation checks
    int early_stop_patience = 3;     // consecutive checks without improvement
    std::uint64_t seed = 0;
};

// Fixed-length sequences: x[i] is seq_len*input_dim row-major, y[i] in {0,1}.
struct SequenceDataset {
    std::vector<std::vector<double>> x;
    std::vector<int> y;
    int seq_len = 0;
    int input_dim = 0;

    size_t size() const { return x.size(); }
};

struct FlatDataset {
    std::vector<std::vector<double>> x;
    std::vector<int> y;
    int dim = 0;

    size_t size() const { return x.size(); }
};

}  // namespace engage::learn
