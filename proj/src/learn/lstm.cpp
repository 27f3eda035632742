#include "learn/lstm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "util/error.hpp"

namespace engage::learn {

namespace {

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

inline double clamp_prob(double p) {
    return std::min(1.0 - 1e-12, std::max(1e-12, p));
}

// Numerically stable binary cross-entropy from the logit.
inline double bce_from_logit(double z, int y) {
    return std::max(z, 0.0) - z * static_cast<double>(y) + std::log1p(std::exp(-std::abs(z)));
}

void fill_glorot(std::vector<double>& w, int fan_in, int fan_out, std::mt19937_64& rng) {
    double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (double& v : w) v = dist(rng);
}

struct StepCache {
    std::vector<double> i, f, o, g, c, tc, h;  // each [hidden]
};

// Runs the recurrence; fills caches when given. Returns the readout logit.
double forward(const LstmModel& m, std::span<const double> seq, int seq_len,
               std::vector<StepCache>* caches) {
    const int H = m.hidden_dim;
    const int D = m.input_dim;
    std::vector<double> h(H, 0.0), c(H, 0.0);
    std::vector<double> ai(H), af(H), ao(H), ag(H);
    for (int t = 0; t < seq_len; ++t) {
        const double* x = seq.data() + static_cast<size_t>(t) * D;
        for (int j = 0; j < H; ++j) {
            double si = m.bi[j], sf = m.bf[j], so = m.bo[j], sg = m.bg[j];
            const double* wi = m.wi_x.data() + static_cast<size_t>(j) * D;
            const double* wf = m.wf_x.data() + static_cast<size_t>(j) * D;
            const double* wo = m.wo_x.data() + static_cast<size_t>(j) * D;
            const double* wg = m.wg_x.data() + static_cast<size_t>(j) * D;
            for (int k = 0; k < D; ++k) {
                si += wi[k] * x[k];
                sf += wf[k] * x[k];
                so += wo[k] * x[k];
                sg += wg[k] * x[k];
            }
            const double* ui = m.wi_h.data() + static_cast<size_t>(j) * H;
            const double* uf = m.wf_h.data() + static_cast<size_t>(j) * H;
            const double* uo = m.wo_h.data() + static_cast<size_t>(j) * H;
            const double* ug = m.wg_h.data() + static_cast<size_t>(j) * H;
            for (int k = 0; k < H; ++k) {
                si += ui[k] * h[k];
                sf += uf[k] * h[k];
                so += uo[k] * h[k];
                sg += ug[k] * h[k];
            }
            ai[j] = si;
            af[j] = sf;
            ao[j] = so;
            ag[j] = sg;
        }
        StepCache cache;
        if (caches) {
            cache.i.resize(H);
            cache.f.resize(H);
            cache.o.resize(H);
            cache.g.resize(H);
            cache.c.resize(H);
            cache.tc.resize(H);
            cache.h.resize(H);
        }
        for (int j = 0; j < H; ++j) {
            double iv = sigmoid(ai[j]);
            double fv = sigmoid(af[j]);
            double ov = sigmoid(ao[j]);
            double gv = std::tanh(ag[j]);
            double cv = fv * c[j] + iv * gv;
            double tcv = std::tanh(cv);
            double hv = ov * tcv;
            if (caches) {
                cache.i[j] = iv;
                cache.f[j] = fv;
                cache.o[j] = ov;
                cache.g[j] = gv;
                cache.c[j] = cv;
                cache.tc[j] = tcv;
                cache.h[j] = hv;
            }
            c[j] = cv;
            h[j] = hv;
        }
        if (caches) caches->push_back(std::move(cache));
    }
    double z = m.b_out;
    for (int j = 0; j < H; ++j) z += m.w_out[j] * h[j];
    return z;
}

struct Grads {
    std::vector<double> wi_x, wi_h, bi, wf_x, wf_h, bf, wo_x, wo_h, bo, wg_x, wg_h, bg, w_out;
    double b_out = 0.0;

    explicit Grads(const LstmModel& m)
        : wi_x(m.wi_x.size(), 0.0), wi_h(m.wi_h.size(), 0.0), bi(m.bi.size(), 0.0),
          wf_x(m.wf_x.size(), 0.0), wf_h(m.wf_h.size(), 0.0), bf(m.bf.size(), 0.0),
          wo_x(m.wo_x.size(), 0.0), wo_h(m.wo_h.size(), 0.0), bo(m.bo.size(), 0.0),
          wg_x(m.wg_x.size(), 0.0), wg_h(m.wg_h.size(), 0.0), bg(m.bg.size(), 0.0),
          w_out(m.w_out.size(), 0.0) {}
};

// Accumulates dL/dparams of one sequence into g. Returns the sample loss.
double backward_one(const LstmModel& m, std::span<const double> seq, int seq_len, int y,
                    Grads& g) {
    const int H = m.hidden_dim;
    const int D = m.input_dim;
    std::vector<StepCache> caches;
    caches.reserve(seq_len);
    double z = forward(m, seq, seq_len, &caches);
    double loss = bce_from_logit(z, y);
    double dz = sigmoid(z) - static_cast<double>(y);

    const std::vector<double>& h_last = caches.back().h;
    for (int j = 0; j < H; ++j) g.w_out[j] += dz * h_last[j];
    g.b_out += dz;

    std::vector<double> dh(H), dc(H, 0.0);
    for (int j = 0; j < H; ++j) dh[j] = dz * m.w_out[j];

    std::vector<double> dai(H), daf(H), dao(H), dag(H), dh_prev(H), dc_prev(H);
    for (int t = seq_len - 1; t >= 0; --t) {
        const StepCache& s = caches[t];
        const double* c_prev = t > 0 ? caches[t - 1].c.data() : nullptr;
        const double* h_prev = t > 0 ? caches[t - 1].h.data() : nullptr;
        const double* x = seq.data() + static_cast<size_t>(t) * D;
        for (int j = 0; j < H; ++j) {
            double do_ = dh[j] * s.tc[j];
            double dcj = dc[j] + dh[j] * s.o[j] * (1.0 - s.tc[j] * s.tc[j]);
            double di = dcj * s.g[j];
            double dg = dcj * s.i[j];
            double df = dcj * (t > 0 ? c_prev[j] : 0.0);
            dc_prev[j] = dcj * s.f[j];
            dai[j] = di * s.i[j] * (1.0 - s.i[j]);
            daf[j] = df * s.f[j] * (1.0 - s.f[j]);
            dao[j] = do_ * s.o[j] * (1.0 - s.o[j]);
            dag[j] = dg * (1.0 - s.g[j] * s.g[j]);
        }
        for (int j = 0; j < H; ++j) {
            double* gwi = g.wi_x.data() + static_cast<size_t>(j) * D;
            double* gwf = g.wf_x.data() + static_cast<size_t>(j) * D;
            double* gwo = g.wo_x.data() + static_cast<size_t>(j) * D;
            double* gwg = g.wg_x.data() + static_cast<size_t>(j) * D;
            for (int k = 0; k < D; ++k) {
                gwi[k] += dai[j] * x[k];
                gwf[k] += daf[j] * x[k];
                gwo[k] += dao[j] * x[k];
                gwg[k] += dag[j] * x[k];
            }
            g.bi[j] += dai[j];
            g.bf[j] += daf[j];
            g.bo[j] += dao[j];
            g.bg[j] += dag[j];
            if (t > 0) {
                double* gui = g.wi_h.data() + static_cast<size_t>(j) * H;
                double* guf = g.wf_h.data() + static_cast<size_t>(j) * H;
                double* guo = g.wo_h.data() + static_cast<size_t>(j) * H;
                double* gug = g.wg_h.data() + static_cast<size_t>(j) * H;
                for (int k = 0; k < H; ++k) {
                    gui[k] += dai[j] * h_prev[k];
                    guf[k] += daf[j] * h_prev[k];
                    guo[k] += dao[j] * h_prev[k];
                    gug[k] += dag[j] * h_prev[k];
                }
            }
        }
        std::fill(dh_prev.begin(), dh_prev.end(), 0.0);
        for (int j = 0; j < H; ++j) {
            const double* ui = m.wi_h.data() + static_cast<size_t>(j) * H;
            const double* uf = m.wf_h.data() + static_cast<size_t>(j) * H;
            const double* uo = m.wo_h.data() + static_cast<size_t>(j) * H;
            const double* ug = m.wg_h.data() + static_cast<size_t>(j) * H;
            for (int k = 0; k < H; ++k)
                dh_prev[k] += ui[k] * dai[j] + uf[k] * daf[j] + uo[k] * dao[j] + ug[k] * dag[j];
        }
        dh = dh_prev;
        dc = dc_prev;
    }
    return loss;
}

void check_dataset(const LstmModel& m, const SequenceDataset& d, const char* what) {
    require(!d.x.empty(), ErrorCode::data, std::string("empty ") + what + " dataset");
    require(d.input_dim == m.input_dim, ErrorCode::model,
            "sequence feature dim " + std::to_string(d.input_dim) + " != model input dim " +
                std::to_string(m.input_dim));
    require(d.x.size() == d.y.size(), ErrorCode::data, "dataset x/y size mismatch");
    for (size_t i = 0; i < d.x.size(); ++i) {
        require(d.x[i].size() == static_cast<size_t>(d.seq_len) * d.input_dim, ErrorCode::data,
                "sequence length mismatch at sample " + std::to_string(i));
        require(d.y[i] == 0 || d.y[i] == 1, ErrorCode::data,
                "label must be 0/1 at sample " + std::to_string(i));
    }
}

}  // namespace

LstmModel LstmModel::zeros(int input_dim, int hidden_dim) {
    require(input_dim > 0 && hidden_dim > 0, ErrorCode::usage, "lstm dims must be positive");
    LstmModel m;
    m.input_dim = input_dim;
    m.hidden_dim = hidden_dim;
    size_t wx = static_cast<size_t>(hidden_dim) * input_dim;
    size_t wh = static_cast<size_t>(hidden_dim) * hidden_dim;
    for (auto* v : {&m.wi_x, &m.wf_x, &m.wo_x, &m.wg_x}) v->assign(wx, 0.0);
    for (auto* v : {&m.wi_h, &m.wf_h, &m.wo_h, &m.wg_h}) v->assign(wh, 0.0);
    for (auto* v : {&m.bi, &m.bf, &m.bo, &m.bg, &m.w_out}) v->assign(hidden_dim, 0.0);
    return m;
}

LstmModel LstmModel::init(int input_dim, int hidden_dim, std::uint64_t seed) {
    LstmModel m = zeros(input_dim, hidden_dim);
    std::mt19937_64 rng(seed);
    for (auto* v : {&m.wi_x, &m.wf_x, &m.wo_x, &m.wg_x}) fill_glorot(*v, input_dim, hidden_dim, rng);
    for (auto* v : {&m.wi_h, &m.wf_h, &m.wo_h, &m.wg_h})
        fill_glorot(*v, hidden_dim, hidden_dim, rng);
    fill_glorot(m.w_out, hidden_dim, 1, rng);
    std::fill(m.bf.begin(), m.bf.end(), 1.0);
    return m;
}

size_t LstmModel::param_count() const {
    return 4 * (wi_x.size() + wi_h.size() + bi.size()) + w_out.size() + 1;
}

std::vector<double> LstmModel::flatten_params() const {
    std::vector<double> flat;
    flat.reserve(param_count());
    for (const auto* v : {&wi_x, &wi_h, &bi, &wf_x, &wf_h, &bf, &wo_x, &wo_h, &bo, &wg_x, &wg_h,
                          &bg, &w_out})
        flat.insert(flat.end(), v->begin(), v->end());
    flat.push_back(b_out);
    return flat;
}

void LstmModel::set_params(std::span<const double> flat) {
    require(flat.size() == param_count(), ErrorCode::model, "lstm parameter count mismatch");
    size_t pos = 0;
    for (auto* v : {&wi_x, &wi_h, &bi, &wf_x, &wf_h, &bf, &wo_x, &wo_h, &bo, &wg_x, &wg_h, &bg,
                    &w_out}) {
        std::copy(flat.begin() + pos, flat.begin() + pos + v->size(), v->begin());
        pos += v->size();
    }
    b_out = flat[pos];
}

double lstm_predict(const LstmModel& m, std::span<const double> seq, int seq_len, int input_dim) {
    require(input_dim == m.input_dim, ErrorCode::model,
            "input dim " + std::to_string(input_dim) + " != model input dim " +
                std::to_string(m.input_dim));
    require(seq.size() == static_cast<size_t>(seq_len) * input_dim, ErrorCode::model,
            "sequence buffer size mismatch");
    require(seq_len > 0, ErrorCode::model, "empty sequence");
    double z = forward(m, seq, seq_len, nullptr);
    return clamp_prob(sigmoid(z));
}

double lstm_predict(const LstmModel& m, const SequenceDataset& d, size_t index) {
    return lstm_predict(m, d.x[index], d.seq_len, d.input_dim);
}

double lstm_loss(const LstmModel& m, const SequenceDataset& d) {
    check_dataset(m, d, "evaluation");
    double total = 0.0;
    for (size_t i = 0; i < d.x.size(); ++i) {
        double z = forward(m, d.x[i], d.seq_len, nullptr);
        total += bce_from_logit(z, d.y[i]);
    }
    return total / static_cast<double>(d.x.size());
}

std::pair<double, std::vector<double>> lstm_loss_grad(const LstmModel& m, const SequenceDataset& d,
                                                      std::span<const size_t> indices) {
    require(!indices.empty(), ErrorCode::usage, "empty batch");
    Grads g(m);
    double total = 0.0;
    for (size_t idx : indices) total += backward_one(m, d.x[idx], d.seq_len, d.y[idx], g);
    double inv = 1.0 / static_cast<double>(indices.size());
    std::vector<double> flat;
    flat.reserve(m.param_count());
    for (const auto* v : {&g.wi_x, &g.wi_h, &g.bi, &g.wf_x, &g.wf_h, &g.bf, &g.wo_x, &g.wo_h,
                          &g.bo, &g.wg_x, &g.wg_h, &g.bg, &g.w_out})
        for (double x : *v) flat.push_back(x * inv);
    flat.push_back(g.b_out * inv);
    return {total * inv, std::move(flat)};
}

LstmTrainResult lstm_train(const SequenceDataset& train, const SequenceDataset& valid,
                           const TrainConfig& cfg, int hidden_dim) {
    require(cfg.learning_rate > 0.0, ErrorCode::usage, "learning_rate must be > 0");
    require(cfg.batch_size >= 1, ErrorCode::usage, "batch_size must be >= 1");
    LstmModel m = LstmModel::init(train.input_dim, hidden_dim, cfg.seed);
    check_dataset(m, train, "training");
    check_dataset(m, valid, "validation");
    require(train.seq_len == valid.seq_len, ErrorCode::data, "train/valid sequence length differ");

    std::mt19937_64 rng(cfg.seed + 0x9e3779b97f4a7c15ULL);
    std::vector<size_t> order(train.x.size());
    std::iota(order.begin(), order.end(), 0);

    LstmTrainResult res;
    res.history.best_val_loss = std::numeric_limits<double>::infinity();
    LstmModel best = m;
    int best_epoch = 0;
    int checks_without_improvement = 0;
    int epoch = 0;

    for (epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        std::vector<double> params = m.flatten_params();
        for (size_t start = 0; start < order.size(); start += cfg.batch_size) {
            size_t end = std::min(order.size(), start + cfg.batch_size);
            std::span<const size_t> batch(order.data() + start, end - start);
            auto [loss, grad] = lstm_loss_grad(m, train, batch);
            if (!std::isfinite(loss))
                fail_data("training diverged at epoch " + std::to_string(epoch) +
                          " (non-finite loss)");
            for (size_t p = 0; p < params.size(); ++p)
                params[p] -= cfg.learning_rate * grad[p];
            m.set_params(params);
        }
        if (cfg.validation_check_every > 0 && epoch % cfg.validation_check_every == 0) {
            double vl = lstm_loss(m, valid);
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
    res.history.final_val_loss = lstm_loss(m, valid);
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
