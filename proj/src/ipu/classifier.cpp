#include "ipu/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <numeric>
#include <random>

#include <json.hpp>

#include "learn/model_io.hpp"
#include "util/error.hpp"
#include "util/log.hpp"
#include "util/num.hpp"

namespace engage::ipu {

using nlohmann::json;
using nlohmann::ordered_json;

const char* to_string(Task t) { return t == Task::laughter ? "laughter" : "backchannel"; }

const char* to_string(FeatureMode m) {
    return m == FeatureMode::prosody_only ? "prosody_only" : "prosody_plus_linguistic";
}

Task task_from_string(const std::string& s) {
    if (s == "laughter") return Task::laughter;
    if (s == "backchannel") return Task::backchannel;
    fail_usage("unknown task '" + s + "'");
}

FeatureMode feature_mode_from_string(const std::string& s) {
    if (s == "prosody_only" || s == "prosody") return FeatureMode::prosody_only;
    if (s == "prosody_plus_linguistic" || s == "full") return FeatureMode::prosody_plus_linguistic;
    fail_usage("unknown feature mode '" + s + "'");
}

std::vector<double> ipu_feature_vector(const core::IpuRecord& ipu, FeatureMode mode,
                                       std::span<const double> history,
                                       const core::Lexicon* lexicon) {
    auto pros = extract_prosodic(ipu);
    std::vector<double> out(pros.begin(), pros.end());
    if (mode == FeatureMode::prosody_plus_linguistic) {
        require(lexicon != nullptr, ErrorCode::model,
                "prosody_plus_linguistic mode requires a lexicon");
        auto ling = extract_linguistic(ipu, history, *lexicon);
        out.insert(out.end(), ling.begin(), ling.end());
    }
    return out;
}

namespace {

bool is_positive(const core::IpuRecord& ipu, Task task) {
    if (!ipu.label) return false;
    return task == Task::laughter ? *ipu.label == core::IpuLabel::laughter
                                  : *ipu.label == core::IpuLabel::backchannel;
}

void push_history(std::deque<double>& hist, double value) {
    hist.push_front(value);
    if (hist.size() > kPrevLabelDim) hist.pop_back();
}

std::vector<double> history_vector(const std::deque<double>& hist) {
    std::vector<double> h(kPrevLabelDim, 0.0);
    for (size_t i = 0; i < hist.size(); ++i) h[i] = hist[i];
    return h;
}

// Rows for one session with gold (teacher-forced) histories.
void session_rows(const core::Session& s, Task task, FeatureMode mode,
                  const core::Lexicon* lexicon, std::vector<std::vector<double>>& xs,
                  std::vector<int>& ys) {
    std::deque<double> hist;
    for (const core::IpuRecord& ipu : s.ipus) {
        auto h = history_vector(hist);
        if (ipu.label) {
            xs.push_back(ipu_feature_vector(ipu, mode, h, lexicon));
            ys.push_back(is_positive(ipu, task) ? 1 : 0);
        }
        push_history(hist, ipu.label && is_positive(ipu, task) ? 1.0 : 0.0);
    }
}

void normalize_row(std::vector<double>& row, const std::vector<double>& mean,
                   const std::vector<double>& stdev) {
    for (size_t i = 0; i < row.size(); ++i) row[i] = (row[i] - mean[i]) / stdev[i];
}

}  // namespace

IpuClassifierBundle train_ipu_classifier(std::span<const core::Session* const> corpus, Task task,
                                         FeatureMode mode, const IpuTrainOptions& opts,
                                         const core::Lexicon* lexicon) {
    require(!corpus.empty(), ErrorCode::data, "empty corpus");

    // Session-level split for the MLP's validation set.
    std::vector<size_t> order(corpus.size());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(opts.train.seed ^ 0xc2b2ae3d27d4eb4fULL);
    std::shuffle(order.begin(), order.end(), rng);
    size_t n_valid = corpus.size() >= 2
                         ? std::max<size_t>(1, static_cast<size_t>(std::floor(
                                                   opts.valid_fraction * corpus.size())))
                         : 0;

    std::vector<std::vector<double>> train_x, valid_x;
    std::vector<int> train_y, valid_y;
    for (size_t i = 0; i < corpus.size(); ++i) {
        bool is_valid = i < n_valid;
        session_rows(*corpus[order[i]], task, mode, lexicon, is_valid ? valid_x : train_x,
                     is_valid ? valid_y : train_y);
    }
    require(!train_x.empty(), ErrorCode::data, "no labeled ipus in training corpus");
    bool has_pos = std::find(train_y.begin(), train_y.end(), 1) != train_y.end();
    bool has_neg = std::find(train_y.begin(), train_y.end(), 0) != train_y.end();
    require(has_pos && has_neg, ErrorCode::data,
            "single-class corpus: both classes must be present");

    size_t dim = train_x[0].size();
    IpuClassifierBundle bundle;
    bundle.task = task;
    bundle.mode = mode;
    bundle.norm_mean.assign(dim, 0.0);
    bundle.norm_std.assign(dim, 0.0);
    for (const auto& row : train_x)
        for (size_t f = 0; f < dim; ++f) bundle.norm_mean[f] += row[f];
    for (double& v : bundle.norm_mean) v /= static_cast<double>(train_x.size());
    for (const auto& row : train_x)
        for (size_t f = 0; f < dim; ++f) {
            double d = row[f] - bundle.norm_mean[f];
            bundle.norm_std[f] += d * d;
        }
    for (double& v : bundle.norm_std) {
        v = std::sqrt(v / static_cast<double>(train_x.size()));
        if (v < 1e-12) v = 1.0;
    }

    for (auto& row : train_x) normalize_row(row, bundle.norm_mean, bundle.norm_std);
    for (auto& row : valid_x) normalize_row(row, bundle.norm_mean, bundle.norm_std);

    if (task == Task::laughter) {
        learn::FlatDataset train{std::move(train_x), std::move(train_y), static_cast<int>(dim)};
        learn::FlatDataset valid{std::move(valid_x), std::move(valid_y), static_cast<int>(dim)};
        if (valid.x.empty()) {
            // Single-session corpus: hold out every fifth row instead.
            learn::FlatDataset tr;
            tr.dim = train.dim;
            learn::FlatDataset va;
            va.dim = train.dim;
            for (size_t i = 0; i < train.x.size(); ++i) {
                auto& dst = (i % 5 == 4) ? va : tr;
                dst.x.push_back(std::move(train.x[i]));
                dst.y.push_back(train.y[i]);
            }
            if (va.x.empty()) {
                va.x = tr.x;
                va.y = tr.y;
            }
            train = std::move(tr);
            valid = std::move(va);
        }
        auto result = learn::mlp_train(train, valid, opts.train);
        log_info("laughter mlp: best epoch " + std::to_string(result.history.best_epoch) +
                 ", val loss " + fmt_double(result.history.best_val_loss));
        bundle.model = std::move(result.model);
    } else {
        // The forest trains on every labeled row; it does no early stopping.
        for (auto& row : valid_x) train_x.push_back(std::move(row));
        for (int y : valid_y) train_y.push_back(y);
        learn::FlatDataset all{std::move(train_x), std::move(train_y), static_cast<int>(dim)};
        learn::RfConfig rf;
        rf.n_trees = opts.rf_trees;
        rf.seed = opts.train.seed;
        bundle.model = learn::rf_train(all, rf);
    }
    return bundle;
}

double classify_ipu(const IpuClassifierBundle& bundle, const core::IpuRecord& ipu,
                    std::span<const double> history, const core::Lexicon* lexicon) {
    std::vector<double> row = ipu_feature_vector(ipu, bundle.mode, history, lexicon);
    require(static_cast<int>(row.size()) == bundle.feature_dim(), ErrorCode::model,
            "feature dim " + std::to_string(row.size()) + " != bundle dim " +
                std::to_string(bundle.feature_dim()));
    normalize_row(row, bundle.norm_mean, bundle.norm_std);
    if (const auto* mlp = std::get_if<learn::MlpModel>(&bundle.model))
        return learn::mlp_predict(*mlp, row);
    return learn::rf_predict(std::get<learn::RandomForestModel>(bundle.model), row);
}

std::vector<double> classify_session(const IpuClassifierBundle& bundle,
                                     std::span<const core::IpuRecord> ipus,
                                     const core::Lexicon* lexicon) {
    std::vector<double> probs;
    probs.reserve(ipus.size());
    std::deque<double> hist;
    for (const core::IpuRecord& ipu : ipus) {
        double p = classify_ipu(bundle, ipu, history_vector(hist), lexicon);
        probs.push_back(p);
        push_history(hist, p >= 0.5 ? 1.0 : 0.0);
    }
    return probs;
}

void save_bundle(const IpuClassifierBundle& bundle, const std::filesystem::path& file) {
    learn::DetectorModel model;
    if (const auto* mlp = std::get_if<learn::MlpModel>(&bundle.model)) model = *mlp;
    else model = std::get<learn::RandomForestModel>(bundle.model);
    ordered_json j = learn::model_to_json(model);
    require(all_finite(bundle.norm_mean) && all_finite(bundle.norm_std), ErrorCode::data,
            "non-finite normalization stats");
    j["features"] = {{"task", to_string(bundle.task)},
                     {"feature_mode", to_string(bundle.mode)},
                     {"norm_mean", bundle.norm_mean},
                     {"norm_std", bundle.norm_std},
                     {"split", {{"prosodic", kProsodicDim},
                                {"prev_labels", kPrevLabelDim},
                                {"embedding", bundle.feature_dim() > kProsodicDim
                                                  ? bundle.feature_dim() - kProsodicDim -
                                                        kPrevLabelDim - kPosDim
                                                  : 0},
                                {"pos_hist", bundle.feature_dim() > kProsodicDim ? kPosDim : 0}}}};
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) fail_io("cannot open " + file.string() + " for writing");
    out << j.dump() << '\n';
    if (!out) fail_io("write failure on " + file.string());
}

IpuClassifierBundle load_bundle(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) fail_io("cannot open " + file.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        fail_data(file.string() + ": " + e.what());
    }
    require(j.contains("features"), ErrorCode::model,
            file.string() + ": not an ipu classifier bundle (missing features block)");
    IpuClassifierBundle bundle;
    const json& f = j.at("features");
    bundle.task = task_from_string(f.at("task").get<std::string>());
    bundle.mode = feature_mode_from_string(f.at("feature_mode").get<std::string>());
    bundle.norm_mean = f.at("norm_mean").get<std::vector<double>>();
    bundle.norm_std = f.at("norm_std").get<std::vector<double>>();
    require(bundle.norm_mean.size() == bundle.norm_std.size(), ErrorCode::model,
            "normalization stats size mismatch");
    learn::DetectorModel model = learn::model_from_json(j);
    if (auto* mlp = std::get_if<learn::MlpModel>(&model)) bundle.model = std::move(*mlp);
    else if (auto* rf = std::get_if<learn::RandomForestModel>(&model))
        bundle.model = std::move(*rf);
    else fail_model(file.string() + ": bundle model must be mlp or rf");
    return bundle;
}

}  // namespace engage::ipu
