#include "learn/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "util/error.hpp"

namespace engage::learn {

namespace {

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

inline double clamp_prob(double p) { return std::min(1.0 - 1e-12, std::max(1e-12, p)); }

inline double bce_from_logit(double z, int y) {
    return std::max(z, 0.0) - z * static_cast<double>(y) + std::log1p(std::exp(-std::abs(z)));
}

// Forward pass; activations[l] holds layer l's output (activations[0] = input).
// Hidden layers use max(0, a); the last layer stays a raw logit.
double forward(const MlpModel& m, std::span<const double> x,
               std::vector<std::vector<double>>* activations) {
    size_t layers = m.w.size();
    std::vector<double> cur(x.begin(), x.end());
    if (activations) {
        activations->clear();
        activations->push_back(cur);
    }
    double logit = 0.0;
    for (size_t l = 0; l < layers; ++l) {
        int out_n = m.sizes[l + 1];
        int in_n = m.sizes[l];
        std::vector<double> next(out_n);
        for (int j = 0; j < out_n; ++j) {
            double s = m.b[l][j];
            const double* row = m.w[l].data() + static_cast<size_t>(j) * in_n;
            for (int k = 0; k < in_n; ++k) s += row[k] * cur[k];
            next[j] = (l + 1 == layers) ? s : std::max(0.0, s);
        }
        if (l + 1 == layers) logit = next[0];
        cur = std::move(next);
        if (activations) activations->push_back(cur);
    }
    return logit;
}

struct Grads {
    std::vector<std::vector<double>> w, b;
    explicit Grads(const MlpModel& m) {
        for (size_t l = 0; l < m.w.size(); ++l) {
            w.emplace_back(m.w[l].size(), 0.0);
            b.emplace_back(m.b[l].size(), 0.0);
        }
    }
};

double backward_one(const MlpModel& m, std::span<const double> x, int y, Grads& g) {
    std::vector<std::vector<double>> acts;
    double z = forward(m, x, &acts);
    double loss = bce_from_logit(z, y);
    size_t layers = m.w.size();

    std::vector<double> delta{sigmoid(z) - static_cast<double>(y)};
    for (size_t li = layers; li-- > 0;) {
        int out_n = m.sizes[li + 1];
        int in_n = m.sizes[li];
        const std::vector<double>& input = acts[li];
        std::vector<double> delta_prev(in_n, 0.0);
        for (int j = 0; j < out_n; ++j) {
            double d = delta[j];
            g.b[li][j] += d;
            double* grow = g.w[li].data() + static_cast<size_t>(j) * in_n;
            const double* wrow = m.w[li].data() + static_cast<size_t>(j) * in_n;
            for (int k = 0; k < in_n; ++k) {
                grow[k] += d * input[k];
                delta_prev[k] += d * wrow[k];
            }
        }
        if (li > 0) {
            // Rectifier derivative: pass gradient only where the unit fired.
            for (int k = 0; k < in_n; ++k)
                if (acts[li][k] <= 0.0) delta_prev[k] = 0.0;
        }
        delta = std::move(delta_prev);
    }
    return loss;
}

void check_dataset(const MlpModel& m, const FlatDataset& d, const char* what) {
    require(!d.x.empty(), ErrorCode::data, std::string("empty ") + what + " dataset");
    require(d.dim == m.sizes.front(), ErrorCode::model,
            "feature dim " + std::to_string(d.dim) + " != model input dim " +
                std::to_string(m.sizes.front()));
    require(d.x.size() == d.y.size(), ErrorCode::data, "dataset x/y size mismatch");
    for (size_t i = 0; i < d.x.size(); ++i) {
        require(d.x[i].size() == static_cast<size_t>(d.dim), ErrorCode::data,
                "feature size mismatch at sample " + std::to_string(i));
        require(d.y[i] == 0 || d.y[i] == 1, ErrorCode::data,
                "label must be 0/1 at sample " + std::to_string(i));
    }
}

}  // namespace

MlpModel MlpModel::zeros(const std::vector<int>& sizes) {
    require(sizes.size() >= 2, ErrorCode::usage, "mlp needs at least input and output layers");
    require(sizes.back() == 1, ErrorCode::usage, "mlp output layer must have a single unit");
    for (int s : sizes) require(s > 0, ErrorCode::usage, "mlp layer sizes must be positive");
    MlpModel m;
    m.sizes = sizes;
    for (size_t l = 0; l + 1 < sizes.size(); ++l) {
        m.w.emplace_back(static_cast<size_t>(sizes[l + 1]) * sizes[l], 0.0);
        m.b.emplace_back(sizes[l + 1], 0.0);
    }
    return m;
}

MlpModel MlpModel::init(const std::vector<int>& sizes, std::uint64_t seed) {
    MlpModel m = zeros(sizes);
    std::mt19937_64 rng(seed);
    for (size_t l = 0; l + 1 < sizes.size(); ++l) {
        double limit = std::sqrt(6.0 / static_cast<double>(sizes[l] + sizes[l + 1]));
        std::uniform_real_distribution<double> dist(-limit, limit);
        for (double& v : m.w[l]) v = dist(rng);
    }
    return m;
}

size_t MlpModel::param_count() const {
    size_t n = 0;
    for (size_t l = 0; l < w.size(); ++l) n += w[l].size() + b[l].size();
    return n;
}

std::vector<double> MlpModel::flatten_params() const {
    std::vector<double> flat;
    flat.reserve(param_count());
    for (size_t l = 0; l < w.size(); ++l) {
        flat.insert(flat.end(), w[l].begin(), w[l].end());
        flat.insert(flat.end(), b[l].begin(), b[l].end());
    }
    return flat;
}

void MlpModel::set_params(std::span<const double> flat) {
    require(flat.size() == param_count(), ErrorCode::model, "mlp parameter count mismatch");
    size_t pos = 0;
    for (size_t l = 0; l < w.size(); ++l) {
        std::copy(flat.begin() + pos, flat.begin() + pos + w[l].size(), w[l].begin());
        pos += w[l].size();
        std::copy(flat.begin() + pos, flat.begin() + pos + b[l].size(), b[l].begin());
        pos += b[l].size();
    }
}

double mlp_predict(const MlpModel& m, std::span<const double> x) {
    require(x.size() == static_cast<size_t>(m.sizes.front()), ErrorCode::model,
            "feature dim " + std::to_string(x.size()) + " != model input dim " +
                std::to_string(m.sizes.front()));
    return clamp_prob(sigmoid(forward(m, x, nullptr)));
}

double mlp_loss(const MlpModel& m, const FlatDataset& d) {
    check_dataset(m, d, "evaluation");
    double total = 0.0;
    for (size_t i = 0; i < d.x.size(); ++i) total += bce_from_logit(forward(m, d.x[i], nullptr), d.y[i]);
    return total / static_cast<double>(d.x.size());
}

std::pair<double, std::vector<double>> mlp_loss_grad(const MlpModel& m, const FlatDataset& d,
                                                     std::span<const size_t> indices) {
    require(!indices.empty(), ErrorCode::usage, "empty batch");
    Grads g(m);
    double total = 0.0;
    for (size_t idx : indices) total += backward_one(m, d.x[idx], d.y[idx], g);
    double inv = 1.0 / static_cast<double>(indices.size());
    std::vector<double> flat;
    flat.reserve(m.param_count());
    for (size_t l = 0; l < g.w.size(); ++l) {
        for (double v : g.w[l]) flat.push_back(v * inv);
        for (double v : g.b[l]) flat.push_back(v * inv);
    }
    return {total * inv, std::move(flat)};
}

MlpTrainResult mlp_train(const FlatDataset& train, const FlatDataset& valid,
                         const TrainConfig& cfg, const std::vector<int>& hidden) {
    require(cfg.learning_rate > 0.0, ErrorCode::usage, "learning_rate must be > 0");
    require(cfg.batch_size >= 1, ErrorCode::usage, "batch_size must be >= 1");
    require(!train.x.empty(), ErrorCode::data, "empty training dataset");

    std::vector<int> sizes{train.dim};
    sizes.insert(sizes.end(), hidden.begin(), hidden.end());
    sizes.push_back(1);
    MlpModel m = MlpModel::init(sizes, cfg.seed);
    check_dataset(m, train, "training");
    check_dataset(m, valid, "validation");

    std::mt19937_64 rng(cfg.seed + 0x9e3779b97f4a7c15ULL);
    std::vector<size_t> order(train.x.size());
    std::iota(order.begin(), order.end(), 0);

    MlpTrainResult res;
    res.history.best_val_loss = std::numeric_limits<double>::infinity();
    MlpModel best = m;
    int best_epoch = 0;
    int checks_without_improvement = 0;
    int epoch = 0;

    for (epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        std::vector<double> params = m.flatten_params();
        for (size_t start = 0; start < order.size(); start += cfg.batch_size) {
            size_t end = std::min(order.size(), start + cfg.batch_size);
            std::span<const size_t> batch(order.data() + start, end - start);
            auto [loss, grad] = mlp_loss_grad(m, train, batch);
            if (!std::isfinite(loss))
                fail_data("training diverged at epoch " + std::to_string(epoch) +
                          " (non-finite loss)");
            for (size_t p = 0; p < params.size(); ++p) params[p] -= cfg.learning_rate * grad[p];
            m.set_params(params);
        }
        if (cfg.validation_check_every > 0 && epoch % cfg.validation_check_every == 0) {
            double vl = mlp_loss(m, valid);
            res.history.val_trace.emplace_back(epoch, vl);
            if (vl < res.history.best_val_loss) {
                res.history.best_val_loss = vl;
                best = m;
                best_epoch = epoch;
                checks_without_improvement = 0;
            } else {
                ++checks_without_improvement;
                if (checks_without_improvement >= cfg.early_stop_patience) break;
            }
        }
    }

    res.history.epochs_run = std::min(epoch, cfg.max_epochs);
    res.history.final_val_loss = mlp_loss(m, valid);
    if (res.history.final_val_loss < res.history.best_val_loss) {
        res.history.best_val_loss = res.history.final_val_loss;
        best = m;
        best_epoch = res.history.epochs_run;
    }
    best.trained_epochs = best_epoch;
    res.history.best_epoch = best_epoch;
    res.model = std::move(best);
    return res;
}

}  // namespace engage::learn
