#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "ipu/classifier.hpp"
#include "ipu/features.hpp"
#include "test_util.hpp"
#include "util/error.hpp"

using namespace engage;
using core::IpuRecord;

namespace {

IpuRecord make_ipu(std::vector<double> f0, std::vector<double> intensity,
                   std::int64_t t_start = 1000) {
    IpuRecord ipu;
    ipu.ipu_id = "i";
    ipu.t_start_ms = t_start;
    ipu.t_end_ms = t_start + static_cast<std::int64_t>(f0.size()) * 10;
    ipu.f0_hz = std::move(f0);
    ipu.intensity_db = std::move(intensity);
    return ipu;
}

core::Lexicon tiny_lexicon() {
    core::Lexicon lex;
    lex.pos_tags = {"noun", "verb", "adjective", "adverb", "particle",
                    "auxiliary", "pronoun", "conjunction", "interjection", "symbol"};
    lex.embeddings["w1"] = {3.0, 4.0, 0.0};
    lex.embeddings["w2"] = {0.0, 0.0, 2.0};
    return lex;
}

}  // namespace

TEST_CASE("constant tracks give degenerate statistics") {
    auto ipu = make_ipu(std::vector<double>(60, 120.0), std::vector<double>(60, 58.0));
    auto f = ipu::extract_prosodic(ipu);
    CHECK(f[0] == doctest::Approx(0.6));          // duration
    CHECK(f[2] == doctest::Approx(120.0));        // pitch mean
    CHECK(f[3] == doctest::Approx(120.0));        // median
    CHECK(f[4] == doctest::Approx(0.0));          // slope
    CHECK(f[5] == doctest::Approx(120.0));        // min
    CHECK(f[6] == doctest::Approx(120.0));        // max
    CHECK(f[7] == doctest::Approx(0.0));          // range
    CHECK(f[8] == doctest::Approx(58.0));
    CHECK(f[10] == doctest::Approx(0.0));
    CHECK(f[13] == doctest::Approx(0.0));
    CHECK(f[1] == 0.0);  // fully voiced -> no unvoiced mean, ratio defined as 0
}

TEST_CASE("linear pitch rise gives its slope and midpoint mean") {
    std::vector<double> f0(100), inten(100, 60.0);
    for (int i = 0; i < 100; ++i) f0[i] = 100.0 + 100.0 * (i * 0.01);
    auto f = ipu::extract_prosodic(make_ipu(std::move(f0), std::move(inten)));
    CHECK(f[4] == doctest::Approx(100.0).epsilon(1e-9));
    CHECK(f[2] == doctest::Approx(149.5).epsilon(1e-9));
    CHECK(f[7] == doctest::Approx(99.0).epsilon(1e-9));
}

TEST_CASE("no voiced frames zeroes the pitch block") {
    auto f = ipu::extract_prosodic(make_ipu(std::vector<double>(40, 0.0),
                                            std::vector<double>(40, 55.0)));
    for (int k = 2; k <= 7; ++k) CHECK(f[k] == 0.0);
    CHECK(f[1] == 0.0);
}

TEST_CASE("voiced-unvoiced ratio works in the energy domain") {
    // voiced frames at 60 dB, unvoiced at 50 dB -> energy ratio 10
    std::vector<double> f0{120, 120, 0, 0}, inten{60, 60, 50, 50};
    auto f = ipu::extract_prosodic(make_ipu(std::move(f0), std::move(inten)));
    CHECK(f[1] == doctest::Approx(10.0).epsilon(1e-9));
}

TEST_CASE("pitch features are exactly linear in f0 scaling") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(80.0, 300.0);
    std::vector<double> f0(80), inten(80);
    for (int i = 0; i < 80; ++i) {
        f0[i] = i % 4 == 0 ? 0.0 : u(rng);  // fixed voicing pattern
        inten[i] = 50.0 + 0.1 * i;
    }
    auto base = ipu::extract_prosodic(make_ipu(f0, inten));
    const double c = 1.7;
    for (double& v : f0)
        if (v > 0.0) v *= c;
    auto scaled = ipu::extract_prosodic(make_ipu(f0, inten));
    for (int k = 2; k <= 7; ++k) CHECK(scaled[k] == doctest::Approx(base[k] * c).epsilon(1e-9));
    // intensity block unchanged
    for (int k = 8; k <= 13; ++k) CHECK(scaled[k] == base[k]);
}

TEST_CASE("prosody invariant to a uniform time shift") {
    std::vector<double> f0(50, 140.0), inten(50, 61.0);
    auto a = ipu::extract_prosodic(make_ipu(f0, inten, 1000));
    auto b = ipu::extract_prosodic(make_ipu(f0, inten, 901000));
    for (int k = 0; k < ipu::kProsodicDim; ++k) CHECK(a[k] == b[k]);
}

TEST_CASE("empty track is an error") {
    CHECK_THROWS_WITH_AS(ipu::extract_prosodic(make_ipu({}, {})), doctest::Contains("empty"),
                         Error);
}

TEST_CASE("linguistic features: history passthrough, embedding, pos histogram") {
    auto lex = tiny_lexicon();
    IpuRecord ipu = make_ipu(std::vector<double>(30, 120.0), std::vector<double>(30, 60.0));

    std::vector<double> hist{1, 0, 0, 1, 1};
    auto empty_tokens = ipu::extract_linguistic(ipu, hist, lex);
    REQUIRE(empty_tokens.size() == 5 + 3 + 10);
    for (int k = 0; k < 5; ++k) CHECK(empty_tokens[k] == hist[k]);
    for (size_t k = 5; k < empty_tokens.size(); ++k) CHECK(empty_tokens[k] == 0.0);

    ipu.tokens.push_back({"hello", "noun", "w1"});
    auto one = ipu::extract_linguistic(ipu, hist, lex);
    CHECK(one[5] == doctest::Approx(0.6));  // (3,4,0)/5
    CHECK(one[6] == doctest::Approx(0.8));
    CHECK(one[7] == doctest::Approx(0.0));
    CHECK(one[8] == doctest::Approx(1.0));  // pos_hist[noun]

    // unknown embedding id contributes a zero vector to the mean
    ipu.tokens.push_back({"mystery", "verb", "nope"});
    auto two = ipu::extract_linguistic(ipu, hist, lex);
    CHECK(two[5] == doctest::Approx(0.6));  // mean halves then renormalizes
    CHECK(two[6] == doctest::Approx(0.8));
    CHECK(two[8] == doctest::Approx(0.5));
    CHECK(two[9] == doctest::Approx(0.5));
    double sum = 0.0;
    for (int k = 0; k < 10; ++k) sum += two[8 + k];
    CHECK(sum == doctest::Approx(1.0));

    ipu.tokens.push_back({"x", "martian", "w2"});
    CHECK_THROWS_WITH_AS(ipu::extract_linguistic(ipu, hist, lex),
                         doctest::Contains("outside the 10-tag inventory"), Error);
}

namespace {

// Tiny two-class corpus: positives get a wide pitch oscillation and a marker
// token; negatives stay flat.
std::vector<core::Session> separable_corpus(int n_sessions, double spread, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<core::Session> sessions;
    for (int sidx = 0; sidx < n_sessions; ++sidx) {
        core::Session s;
        s.session_id = "c" + std::to_string(sidx);
        s.frames = testutil::still_frames(400);
        s.turns.push_back({"t1", core::Speaker::robot, 0, 13000});
        std::int64_t t = 100;
        for (int i = 0; i < 24; ++i) {
            bool pos = u(rng) < 0.3;
            IpuRecord ipu;
            ipu.ipu_id = "i" + std::to_string(i);
            ipu.t_start_ms = t;
            std::int64_t dur = 300 + static_cast<std::int64_t>(u(rng) * 200);
            ipu.t_end_ms = t + dur;
            t += dur + 60;
            size_t len = static_cast<size_t>(dur / 10);
            for (size_t k = 0; k < len; ++k) {
                double osc = pos ? spread * 60.0 * std::sin(0.4 * static_cast<double>(k)) : 0.0;
                ipu.f0_hz.push_back(140.0 + osc + 4.0 * u(rng));
                ipu.intensity_db.push_back(60.0 + (pos ? spread * 6.0 * std::sin(0.8 * k) : 0.0) +
                                           u(rng));
            }
            ipu.tokens.push_back(pos && u(rng) < spread ? core::Token{"haha", "interjection", "w_pos"}
                                                        : core::Token{"word", "noun", "w_neg"});
            ipu.label = pos ? core::IpuLabel::laughter : core::IpuLabel::other;
            s.ipus.push_back(std::move(ipu));
        }
        sessions.push_back(std::move(s));
    }
    return sessions;
}

core::Lexicon marker_lexicon() {
    core::Lexicon lex = tiny_lexicon();
    lex.embeddings.clear();
    lex.embeddings["w_pos"] = {1.0, 0.0, 0.0};
    lex.embeddings["w_neg"] = {0.0, 1.0, 0.0};
    return lex;
}

}  // namespace

TEST_CASE("laughter bundle beats the always-positive baseline on separable prosody") {
    auto sessions = separable_corpus(8, 1.0, 5);
    std::vector<const core::Session*> train, test;
    for (size_t i = 0; i < sessions.size(); ++i)
        (i < 6 ? train : test).push_back(&sessions[i]);

    ipu::IpuTrainOptions opts;
    opts.train.seed = 1;
    opts.train.max_epochs = 40;
    opts.train.learning_rate = 0.05;
    auto bundle =
        ipu::train_ipu_classifier(train, ipu::Task::laughter, ipu::FeatureMode::prosody_only,
                                  opts, nullptr);
    CHECK(bundle.feature_dim() == 14);

    int tp = 0, fp = 0, fn = 0, n_pos = 0, n = 0;
    for (const core::Session* s : test) {
        auto probs = ipu::classify_session(bundle, s->ipus, nullptr);
        for (size_t i = 0; i < probs.size(); ++i) {
            bool truth = s->ipus[i].label == core::IpuLabel::laughter;
            bool pred = probs[i] >= 0.5;
            n += 1;
            n_pos += truth;
            if (pred && truth) ++tp;
            else if (pred) ++fp;
            else if (truth) ++fn;
        }
    }
    double prec = tp + fp ? static_cast<double>(tp) / (tp + fp) : 0.0;
    double rec = tp + fn ? static_cast<double>(tp) / (tp + fn) : 0.0;
    double f1 = prec + rec > 0 ? 2 * prec * rec / (prec + rec) : 0.0;
    double base_prec = static_cast<double>(n_pos) / n;
    double base_f1 = 2 * base_prec / (base_prec + 1.0);
    CHECK(f1 > base_f1);
}

TEST_CASE("linguistic markers lift the backchannel bundle over prosody-only") {
    // reuse the corpus but label positives as backchannel
    auto sessions = separable_corpus(8, 0.7, 11);
    for (auto& s : sessions)
        for (auto& ipu : s.ipus)
            if (ipu.label == core::IpuLabel::laughter) ipu.label = core::IpuLabel::backchannel;
    auto lex = marker_lexicon();
    std::vector<const core::Session*> train, test;
    for (size_t i = 0; i < sessions.size(); ++i)
        (i < 6 ? train : test).push_back(&sessions[i]);

    ipu::IpuTrainOptions opts;
    opts.train.seed = 2;

    auto eval_f1 = [&](ipu::FeatureMode mode, const core::Lexicon* lexicon) {
        auto bundle =
            ipu::train_ipu_classifier(train, ipu::Task::backchannel, mode, opts, lexicon);
        int tp = 0, fp = 0, fn = 0;
        for (const core::Session* s : test) {
            auto probs = ipu::classify_session(bundle, s->ipus, lexicon);
            for (size_t i = 0; i < probs.size(); ++i) {
                bool truth = s->ipus[i].label == core::IpuLabel::backchannel;
                bool pred = probs[i] >= 0.5;
                if (pred && truth) ++tp;
                else if (pred) ++fp;
                else if (truth) ++fn;
            }
        }
        double prec = tp + fp ? static_cast<double>(tp) / (tp + fp) : 0.0;
        double rec = tp + fn ? static_cast<double>(tp) / (tp + fn) : 0.0;
        return prec + rec > 0 ? 2 * prec * rec / (prec + rec) : 0.0;
    };

    double prosody_only = eval_f1(ipu::FeatureMode::prosody_only, nullptr);
    double full = eval_f1(ipu::FeatureMode::prosody_plus_linguistic, &lex);
    CHECK(full >= prosody_only);
    CHECK(full > 0.6);
}

TEST_CASE("classification composes feature extraction with the raw model") {
    auto sessions = separable_corpus(4, 1.0, 21);
    std::vector<const core::Session*> all;
    for (auto& s : sessions) all.push_back(&s);
    ipu::IpuTrainOptions opts;
    opts.train.seed = 3;
    opts.train.max_epochs = 10;
    auto bundle = ipu::train_ipu_classifier(all, ipu::Task::laughter,
                                            ipu::FeatureMode::prosody_only, opts, nullptr);

    const IpuRecord& probe = sessions[0].ipus[3];
    std::vector<double> hist{0, 1, 0, 0, 0};
    double via_classify = ipu::classify_ipu(bundle, probe, hist, nullptr);

    auto row = ipu::ipu_feature_vector(probe, bundle.mode, hist, nullptr);
    for (size_t i = 0; i < row.size(); ++i)
        row[i] = (row[i] - bundle.norm_mean[i]) / bundle.norm_std[i];
    double direct = learn::mlp_predict(std::get<learn::MlpModel>(bundle.model), row);
    CHECK(via_classify == doctest::Approx(direct).epsilon(1e-15));

    // purity
    CHECK(ipu::classify_ipu(bundle, probe, hist, nullptr) == via_classify);
}

TEST_CASE("bundle serialization round-trips and training is deterministic") {
    testutil::TempDir tmp("bundles");
    auto sessions = separable_corpus(4, 1.0, 31);
    std::vector<const core::Session*> all;
    for (auto& s : sessions) all.push_back(&s);
    ipu::IpuTrainOptions opts;
    opts.train.seed = 4;
    opts.train.max_epochs = 8;

    auto a = ipu::train_ipu_classifier(all, ipu::Task::laughter, ipu::FeatureMode::prosody_only,
                                       opts, nullptr);
    auto b = ipu::train_ipu_classifier(all, ipu::Task::laughter, ipu::FeatureMode::prosody_only,
                                       opts, nullptr);
    ipu::save_bundle(a, tmp.path / "a.json");
    ipu::save_bundle(b, tmp.path / "b.json");
    std::ifstream fa(tmp.path / "a.json"), fb(tmp.path / "b.json");
    std::string ca((std::istreambuf_iterator<char>(fa)), std::istreambuf_iterator<char>());
    std::string cb((std::istreambuf_iterator<char>(fb)), std::istreambuf_iterator<char>());
    CHECK(ca == cb);

    auto loaded = ipu::load_bundle(tmp.path / "a.json");
    const IpuRecord& probe = sessions[1].ipus[0];
    std::vector<double> hist{0, 0, 0, 0, 0};
    CHECK(ipu::classify_ipu(loaded, probe, hist, nullptr) ==
          ipu::classify_ipu(a, probe, hist, nullptr));
}

TEST_CASE("single-class corpus is refused") {
    auto sessions = separable_corpus(2, 1.0, 41);
    for (auto& s : sessions)
        for (auto& ipu : s.ipus) ipu.label = core::IpuLabel::other;
    std::vector<const core::Session*> all;
    for (auto& s : sessions) all.push_back(&s);
    ipu::IpuTrainOptions opts;
    CHECK_THROWS_WITH_AS(ipu::train_ipu_classifier(all, ipu::Task::laughter,
                                                   ipu::FeatureMode::prosody_only, opts, nullptr),
                         doctest::Contains("single-class"), Error);
}
