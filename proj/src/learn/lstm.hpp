#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "learn/data.hpp"

namespace engage::learn {

// Single-layer LSTM with a final-step logistic readout, trained with plain SGD
// on binary cross-entropy. All weights live in flat row-major arrays; the
// flatten order is fixed and shared with serialization and gradient checks.
struct LstmModel {
    int input_dim = 0;
    int hidden_dim = 0;
    // Gate blocks: w*_x is [hidden, input], w*_h is [hidden, hidden], b_* is [hidden].
    std::vector<double> wi_x, wi_h, bi;  // input gate
    std::vector<double> wf_x, wf_h, bf;  // forget gate
    std::vector<double> wo_x, wo_h, bo;  // output gate
    std::vector<double> wg_x, wg_h, bg;  // cell candidate
    std::vector<double> w_out;           // [hidden]
    double b_out = 0.0;
    int trained_epochs = 0;

    static LstmModel zeros(int input_dim, int hidden_dim);
    // Glorot-uniform init; forget-gate bias starts at +1.
    static LstmModel init(int input_dim, int hidden_dim, std::uint64_t seed);

    size_t param_count() const;
    std::vector<double> flatten_params() const;
    void set_params(std::span<const double> flat);
};

// Probability in (0,1); pure function of (model, seq).
double lstm_predict(const LstmModel& m, std::span<const double> seq, int seq_len, int input_dim);
double lstm_predict(const LstmModel& m, const SequenceDataset& d, size_t index);

// Mean binary cross-entropy over the dataset.
double lstm_loss(const LstmModel& m, const SequenceDataset& d);

// Mean loss and its gradient (flatten_params order) over the given sample indices.
std::pair<double, std::vector<double>> lstm_loss_grad(const LstmModel& m,
                                                      const SequenceDataset& d,
                                                      std::span<const size_t> indices);

struct TrainHistory {
    std::vector<std::pair<int, double>> val_trace;  // (epoch, validation loss)
    double best_val_loss = 0.0;
    double final_val_loss = 0.0;
    int best_epoch = 0;
    int epochs_run = 0;
};

struct LstmTrainResult {
    LstmModel model;  // snapshot from the validation-optimal epoch
    TrainHistory history;
};

LstmTrainResult lstm_train(const SequenceDataset& train, const SequenceDataset& valid,
                           const TrainConfig& cfg, int hidden_dim = 16);

}  // namespace engage::learn
