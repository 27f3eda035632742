#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "learn/forest.hpp"
#include "learn/lstm.hpp"
#include "learn/mlp.hpp"
#include "learn/model_io.hpp"
#include "test_util.hpp"
#include "util/error.hpp"

using namespace engage;
using learn::FlatDataset;
using learn::SequenceDataset;

namespace {

// Plain scalar re-implementation of the recurrence, kept independent of the
// library code on purpose.
double lstm_forward_oracle(const learn::LstmModel& m, const std::vector<double>& seq, int T) {
    int H = m.hidden_dim, D = m.input_dim;
    std::vector<double> h(H, 0.0), c(H, 0.0);
    auto sig = [](double z) { return 1.0 / (1.0 + std::exp(-z)); };
    for (int t = 0; t < T; ++t) {
        std::vector<double> hn(H), cn(H);
        for (int j = 0; j < H; ++j) {
            double ai = m.bi[j], af = m.bf[j], ao = m.bo[j], ag = m.bg[j];
            for (int k = 0; k < D; ++k) {
                ai += m.wi_x[j * D + k] * seq[t * D + k];
                af += m.wf_x[j * D + k] * seq[t * D + k];
                ao += m.wo_x[j * D + k] * seq[t * D + k];
                ag += m.wg_x[j * D + k] * seq[t * D + k];
            }
            for (int k = 0; k < H; ++k) {
                ai += m.wi_h[j * H + k] * h[k];
                af += m.wf_h[j * H + k] * h[k];
                ao += m.wo_h[j * H + k] * h[k];
                ag += m.wg_h[j * H + k] * h[k];
            }
            cn[j] = sig(af) * c[j] + sig(ai) * std::tanh(ag);
            hn[j] = sig(ao) * std::tanh(cn[j]);
        }
        h = hn;
        c = cn;
    }
    double z = m.b_out;
    for (int j = 0; j < H; ++j) z += m.w_out[j] * h[j];
    return sig(z);
}

SequenceDataset mean_sign_dataset(int n, int T, int D, std::uint64_t seed, double margin) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    SequenceDataset d;
    d.seq_len = T;
    d.input_dim = D;
    for (int i = 0; i < n; ++i) {
        int label = u(rng) < 0.5 ? 1 : 0;
        double shift = (label ? 1.0 : -1.0) * (margin + 0.3 * u(rng));
        std::vector<double> seq(static_cast<size_t>(T) * D);
        for (int t = 0; t < T; ++t)
            for (int f = 0; f < D; ++f)
                seq[static_cast<size_t>(t) * D + f] = 0.4 * g(rng) + (f == 0 ? shift : 0.0);
        d.x.push_back(std::move(seq));
        d.y.push_back(label);
    }
    return d;
}

// Relative-error central finite-difference check over every parameter.
template <typename Model, typename LossFn>
double max_grad_rel_error(Model& m, const std::vector<double>& analytic, LossFn&& loss) {
    std::vector<double> params = m.flatten_params();
    double worst = 0.0;
    const double step = 1e-5;
    for (size_t p = 0; p < params.size(); ++p) {
        double keep = params[p];
        params[p] = keep + step;
        m.set_params(params);
        double up = loss();
        params[p] = keep - step;
        m.set_params(params);
        double down = loss();
        params[p] = keep;
        m.set_params(params);
        double fd = (up - down) / (2.0 * step);
        double denom = std::max({1e-8, std::abs(fd), std::abs(analytic[p])});
        worst = std::max(worst, std::abs(fd - analytic[p]) / denom);
    }
    return worst;
}

}  // namespace

TEST_CASE("zero lstm answers one half") {
    auto m = learn::LstmModel::zeros(7, 16);
    std::vector<double> seq(30 * 7, 1.25);
    CHECK(learn::lstm_predict(m, seq, 30, 7) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("lstm forward matches the scalar recurrence oracle") {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> g(0.0, 0.7);
    for (int round = 0; round < 5; ++round) {
        auto m = learn::LstmModel::init(5, 9, 100 + round);
        std::vector<double> seq(12 * 5);
        for (double& v : seq) v = g(rng);
        double got = learn::lstm_predict(m, seq, 12, 5);
        double want = lstm_forward_oracle(m, seq, 12);
        CHECK(got == doctest::Approx(want).epsilon(1e-9));
    }
}

TEST_CASE("lstm prediction is pure") {
    auto m = learn::LstmModel::init(7, 16, 4);
    std::vector<double> seq(30 * 7, 0.3);
    CHECK(learn::lstm_predict(m, seq, 30, 7) == learn::lstm_predict(m, seq, 30, 7));
}

TEST_CASE("lstm gradient matches central finite differences") {
    std::mt19937_64 rng(21);
    std::normal_distribution<double> g(0.0, 0.8);
    for (int round = 0; round < 4; ++round) {
        SequenceDataset d;
        d.seq_len = 6;
        d.input_dim = 3;
        for (int i = 0; i < 5; ++i) {
            std::vector<double> seq(18);
            for (double& v : seq) v = g(rng);
            d.x.push_back(std::move(seq));
            d.y.push_back(i % 2);
        }
        auto m = learn::LstmModel::init(3, 4, 300 + round);
        std::vector<size_t> idx(d.x.size());
        std::iota(idx.begin(), idx.end(), 0);
        auto [loss, grad] = learn::lstm_loss_grad(m, d, idx);
        (void)loss;
        double err = max_grad_rel_error(m, grad, [&] { return learn::lstm_loss(m, d); });
        CHECK(err < 1e-4);
    }
}

TEST_CASE("lstm learns a separable sequence rule") {
    auto train = mean_sign_dataset(240, 30, 7, 1, 0.8);
    auto valid = mean_sign_dataset(80, 30, 7, 2, 0.8);
    learn::TrainConfig cfg;
    cfg.learning_rate = 0.05;  // the default 0.001 also converges, just slower
    cfg.max_epochs = 60;
    cfg.seed = 3;
    auto result = learn::lstm_train(train, valid, cfg, 16);
    int correct = 0;
    for (size_t i = 0; i < valid.size(); ++i) {
        double p = learn::lstm_predict(result.model, valid, i);
        correct += (p >= 0.5) == (valid.y[i] == 1);
    }
    double acc = static_cast<double>(correct) / static_cast<double>(valid.size());
    CHECK(acc >= 0.95);
    // Early-stopping contract: returned model is at least as good as the last one.
    CHECK(result.history.best_val_loss <= result.history.final_val_loss + 1e-12);
}

TEST_CASE("one sgd epoch on one sample decreases the loss") {
    auto d = mean_sign_dataset(1, 8, 3, 5, 0.5);
    learn::TrainConfig cfg;
    cfg.max_epochs = 1;
    cfg.learning_rate = 0.05;
    cfg.seed = 9;
    cfg.validation_check_every = 0;
    auto before = learn::LstmModel::init(3, 4, cfg.seed);
    double loss0 = learn::lstm_loss(before, d);
    auto result = learn::lstm_train(d, d, cfg, 4);
    double loss1 = learn::lstm_loss(result.model, d);
    CHECK(loss1 < loss0);
}

TEST_CASE("lstm training is bitwise deterministic per seed") {
    auto train = mean_sign_dataset(40, 10, 4, 6, 0.6);
    auto valid = mean_sign_dataset(20, 10, 4, 7, 0.6);
    learn::TrainConfig cfg;
    cfg.max_epochs = 6;
    cfg.seed = 42;
    auto a = learn::lstm_train(train, valid, cfg, 8);
    auto b = learn::lstm_train(train, valid, cfg, 8);
    CHECK(a.model.flatten_params() == b.model.flatten_params());
}

TEST_CASE("empty datasets are rejected") {
    SequenceDataset empty;
    empty.seq_len = 30;
    empty.input_dim = 7;
    learn::TrainConfig cfg;
    CHECK_THROWS_AS(learn::lstm_train(empty, empty, cfg, 16), Error);
}

TEST_CASE("zero mlp answers one half") {
    auto m = learn::MlpModel::zeros({5, 8, 8, 1});
    std::vector<double> x(5, 2.0);
    CHECK(learn::mlp_predict(m, x) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("mlp gradient matches central finite differences on a 10-sample batch") {
    std::mt19937_64 rng(31);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int round = 0; round < 4; ++round) {
        FlatDataset d;
        d.dim = 4;
        bool clean = false;
        learn::MlpModel m;
        while (!clean) {
            d.x.clear();
            d.y.clear();
            for (int i = 0; i < 10; ++i) {
                std::vector<double> x(4);
                for (double& v : x) v = g(rng);
                d.x.push_back(std::move(x));
                d.y.push_back(i % 2);
            }
            m = learn::MlpModel::init({4, 6, 5, 1}, 400 + round);
            // keep pre-activations away from the rectifier kink so the
            // finite-difference comparison is valid
            clean = true;
            for (const auto& x : d.x) {
                std::vector<double> cur = x;
                for (size_t l = 0; l + 1 < m.sizes.size() && clean; ++l) {
                    std::vector<double> nxt(m.sizes[l + 1]);
                    for (int j = 0; j < m.sizes[l + 1]; ++j) {
                        double s = m.b[l][j];
                        for (int k = 0; k < m.sizes[l]; ++k)
                            s += m.w[l][static_cast<size_t>(j) * m.sizes[l] + k] * cur[k];
                        if (l + 2 < m.sizes.size() && std::abs(s) < 1e-3) clean = false;
                        nxt[j] = std::max(0.0, s);
                    }
                    cur = nxt;
                }
            }
        }
        std::vector<size_t> idx(d.x.size());
        std::iota(idx.begin(), idx.end(), 0);
        auto [loss, grad] = learn::mlp_loss_grad(m, d, idx);
        (void)loss;
        double err = max_grad_rel_error(m, grad, [&] { return learn::mlp_loss(m, d); });
        CHECK(err < 1e-4);
    }
}

TEST_CASE("mlp solves replicated xor") {
    FlatDataset train;
    train.dim = 2;
    for (int rep = 0; rep < 100; ++rep)
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b) {
                train.x.push_back({static_cast<double>(a), static_cast<double>(b)});
                train.y.push_back(a ^ b);
            }
    learn::TrainConfig cfg;
    cfg.learning_rate = 0.3;
    cfg.max_epochs = 120;
    cfg.seed = 17;
    auto result = learn::mlp_train(train, train, cfg, {128, 128});
    int correct = 0;
    for (size_t i = 0; i < train.size(); ++i)
        correct += (learn::mlp_predict(result.model, train.x[i]) >= 0.5) == (train.y[i] == 1);
    CHECK(correct == static_cast<int>(train.size()));
}

TEST_CASE("mlp training deterministic per seed") {
    FlatDataset d;
    d.dim = 3;
    std::mt19937_64 rng(77);
    std::normal_distribution<double> g;
    for (int i = 0; i < 60; ++i) {
        d.x.push_back({g(rng), g(rng), g(rng)});
        d.y.push_back(i % 2);
    }
    learn::TrainConfig cfg;
    cfg.max_epochs = 8;
    cfg.seed = 5;
    auto a = learn::mlp_train(d, d, cfg, {8});
    auto b = learn::mlp_train(d, d, cfg, {8});
    CHECK(a.model.flatten_params() == b.model.flatten_params());
}

TEST_CASE("random forest separates axis-aligned classes") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    FlatDataset train, test;
    train.dim = test.dim = 3;
    auto fill = [&](FlatDataset& d, int n) {
        for (int i = 0; i < n; ++i) {
            int y = i % 2;
            double x0 = y ? 1.0 + u(rng) : -1.0 - u(rng);
            d.x.push_back({x0, u(rng), u(rng)});
            d.y.push_back(y);
        }
    };
    fill(train, 200);
    fill(test, 100);
    auto m = learn::rf_train(train, 56, 3);
    int correct = 0;
    for (size_t i = 0; i < test.size(); ++i)
        correct += (learn::rf_predict(m, test.x[i]) >= 0.5) == (test.y[i] == 1);
    CHECK(correct == static_cast<int>(test.size()));
}

TEST_CASE("fully grown single tree memorizes its training points") {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    FlatDataset d;
    d.dim = 2;
    for (int i = 0; i < 40; ++i) {
        d.x.push_back({u(rng), u(rng)});
        d.y.push_back(i % 2);
    }
    learn::RfConfig cfg;
    cfg.n_trees = 1;
    cfg.min_leaf = 1;
    cfg.bootstrap = false;
    cfg.seed = 4;
    auto m = learn::rf_train(d, cfg);
    for (size_t i = 0; i < d.size(); ++i) {
        double p = learn::rf_predict(m, d.x[i]);
        CHECK(p == doctest::Approx(static_cast<double>(d.y[i])).epsilon(1e-12));
    }
}

TEST_CASE("forest training deterministic per seed, refuses one class") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    FlatDataset d;
    d.dim = 4;
    for (int i = 0; i < 80; ++i) {
        d.x.push_back({u(rng), u(rng), u(rng), u(rng)});
        d.y.push_back(i % 2);
    }
    auto a = learn::rf_train(d, 12, 9);
    auto b = learn::rf_train(d, 12, 9);
    auto ja = learn::model_to_json(learn::DetectorModel(a));
    auto jb = learn::model_to_json(learn::DetectorModel(b));
    CHECK(ja == jb);

    FlatDataset single = d;
    std::fill(single.y.begin(), single.y.end(), 1);
    CHECK_THROWS_WITH_AS(learn::rf_train(single, 12, 9), doctest::Contains("single-class"), Error);
}

TEST_CASE("model json round-trip preserves predictions") {
    testutil::TempDir tmp("models");
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g;

    auto lstm = learn::LstmModel::init(7, 16, 1);
    learn::save_model(lstm, tmp.path / "lstm.json");
    auto lstm2 = std::get<learn::LstmModel>(learn::load_model(tmp.path / "lstm.json"));
    std::vector<double> seq(30 * 7);
    for (double& v : seq) v = g(rng);
    CHECK(learn::lstm_predict(lstm, seq, 30, 7) == learn::lstm_predict(lstm2, seq, 30, 7));

    auto mlp = learn::MlpModel::init({5, 12, 12, 1}, 2);
    learn::save_model(mlp, tmp.path / "mlp.json");
    auto mlp2 = std::get<learn::MlpModel>(learn::load_model(tmp.path / "mlp.json"));
    std::vector<double> x(5);
    for (double& v : x) v = g(rng);
    CHECK(learn::mlp_predict(mlp, x) == learn::mlp_predict(mlp2, x));

    FlatDataset d;
    d.dim = 3;
    for (int i = 0; i < 50; ++i) {
        d.x.push_back({g(rng), g(rng), g(rng)});
        d.y.push_back(i % 2);
    }
    auto rf = learn::rf_train(d, 7, 11);
    learn::save_model(rf, tmp.path / "rf.json");
    auto rf2 = std::get<learn::RandomForestModel>(learn::load_model(tmp.path / "rf.json"));
    for (int i = 0; i < 20; ++i) {
        std::vector<double> q{g(rng), g(rng), g(rng)};
        CHECK(learn::rf_predict(rf, q) == learn::rf_predict(rf2, q));
    }

    // serialized models must be finite
    auto bad = learn::LstmModel::init(3, 4, 3);
    bad.w_out[0] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(learn::save_model(bad, tmp.path / "bad.json"), Error);
}
