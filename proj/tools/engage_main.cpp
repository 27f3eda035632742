// Command-line front end for the engage engine. Links only the C API.
#include <chrono>
#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "engage.h"

namespace {

int status_to_exit(engage_status st) {
    switch (st) {
        case ENGAGE_OK: return 0;
        case ENGAGE_ERR_USAGE: return 1;
        case ENGAGE_ERR_DATA: return 2;
        case ENGAGE_ERR_MODEL: return 3;
        case ENGAGE_ERR_IO: return 2;
        default: return 4;
    }
}

int finish(engage_status st) {
    if (st != ENGAGE_OK) std::fprintf(stderr, "engage: %s\n", engage_last_error());
    return status_to_exit(st);
}

std::string json_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '"' || c == '\\') out.push_back('\\');
        out.push_back(c);
    }
    return out;
}

// Resolves geometry.json next to the session (session dir, its parent, the
// corpus root) and finally the models dir.
std::string resolve_geometry(const std::string& session_dir, const std::string& models_dir,
                             const std::string& explicit_path) {
    namespace fs = std::filesystem;
    if (!explicit_path.empty()) return explicit_path;
    fs::path sdir(session_dir);
    for (const fs::path& p : {sdir / "geometry.json", sdir.parent_path() / "geometry.json",
                              sdir.parent_path().parent_path() / "geometry.json",
                              fs::path(models_dir) / "geometry.json"})
        if (fs::exists(p)) return p.string();
    return (sdir.parent_path().parent_path() / "geometry.json").string();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"social-signal detection and engagement estimation"};
    app.require_subcommand(1);

    // ---- generate ----
    auto* gen = app.add_subcommand("generate", "write a synthetic corpus");
    std::string gen_config, gen_out;
    std::uint64_t gen_seed = 0;
    gen->add_option("--config", gen_config, "synth config JSON (defaults when omitted)");
    gen->add_option("--out", gen_out, "output corpus directory")->required();
    gen->add_option("--seed", gen_seed, "master seed");

    // ---- train ----
    auto* train = app.add_subcommand("train", "train one model from a corpus");
    std::string train_task, train_corpus, train_out, train_mode;
    std::uint64_t train_seed = 0;
    int train_epochs = 0, train_k = 3, train_restarts = 10;
    bool train_context = false;
    train->add_option("task", train_task, "nod|laughter|backchannel|engagement")->required();
    train->add_option("--corpus", train_corpus, "corpus directory")->required();
    train->add_option("--out", train_out, "output model JSON path")->required();
    train->add_option("--feature-mode", train_mode, "prosody|full (laughter/backchannel)");
    train->add_flag("--context", train_context, "context-aware engagement model");
    train->add_option("--seed", train_seed, "training seed");
    train->add_option("--epochs", train_epochs, "max training epochs (0 = default)");
    train->add_option("--k", train_k, "character count for engagement");
    train->add_option("--restarts", train_restarts, "EM restarts for engagement");

    // ---- detect ----
    auto* detect = app.add_subcommand("detect", "run detectors + engagement over one session");
    std::string det_session, det_models, det_geometry, det_out;
    detect->add_option("--session", det_session, "session directory")->required();
    detect->add_option("--models", det_models, "models directory")->required();
    detect->add_option("--geometry", det_geometry, "geometry.json path")->required();
    detect->add_option("--out", det_out, "output states.jsonl path")->required();

    // ---- evaluate ----
    auto* evaluate = app.add_subcommand("evaluate", "cross-validated evaluation");
    std::string ev_task, ev_corpus, ev_folds = "10:2:2", ev_out, ev_mode;
    std::uint64_t ev_seed = 0;
    int ev_epochs = 0, ev_k = 3, ev_restarts = 10;
    bool ev_context = false;
    evaluate->add_option("task", ev_task, "nod|laughter|backchannel|gaze|engagement")->required();
    evaluate->add_option("--corpus", ev_corpus, "corpus directory")->required();
    evaluate->add_option("--folds", ev_folds, "folds:test:valid (e.g. 10:2:2) or loso; ignored for gaze");
    evaluate->add_option("--out", ev_out, "output report.json path")->required();
    evaluate->add_option("--feature-mode", ev_mode, "prosody|full");
    evaluate->add_flag("--context", ev_context, "context-aware engagement");
    evaluate->add_option("--seed", ev_seed, "seed");
    evaluate->add_option("--epochs", ev_epochs, "max training epochs (0 = default)");
    evaluate->add_option("--k", ev_k, "character count for engagement");
    evaluate->add_option("--restarts", ev_restarts, "EM restarts");

    // ---- replay ----
    auto* replay = app.add_subcommand("replay", "stream a session in simulated time");
    std::string rp_session, rp_models, rp_geometry;
    double rp_speed = 1.0;
    replay->add_option("--session", rp_session, "session directory")->required();
    replay->add_option("--models", rp_models, "models directory")->required();
    replay->add_option("--speed", rp_speed, "time factor; 0 = no pacing")->required();
    replay->add_option("--geometry", rp_geometry, "geometry.json (default: found near the session)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;  // usage problems exit 1, --help exits 0
    }

    if (gen->parsed())
        return finish(engage_generate_corpus(gen_config.empty() ? nullptr : gen_config.c_str(),
                                             gen_out.c_str(), gen_seed));

    if (train->parsed()) {
        std::string opts = "{\"seed\":" + std::to_string(train_seed) +
                           ",\"max_epochs\":" + std::to_string(train_epochs) +
                           ",\"k\":" + std::to_string(train_k) +
                           ",\"restarts\":" + std::to_string(train_restarts) +
                           ",\"context\":" + (train_context ? "true" : "false");
        if (!train_mode.empty()) opts += ",\"feature_mode\":\"" + json_escape(train_mode) + "\"";
        opts += "}";
        return finish(engage_train(train_task.c_str(), train_corpus.c_str(), train_out.c_str(),
                                   opts.c_str()));
    }

    if (detect->parsed())
        return finish(engage_detect(det_session.c_str(), det_models.c_str(), det_geometry.c_str(),
                                    det_out.c_str()));

    if (evaluate->parsed()) {
        std::string opts = "{\"seed\":" + std::to_string(ev_seed) +
                           ",\"max_epochs\":" + std::to_string(ev_epochs) +
                           ",\"k\":" + std::to_string(ev_k) +
                           ",\"restarts\":" + std::to_string(ev_restarts) +
                           ",\"context\":" + (ev_context ? "true" : "false");
        if (!ev_mode.empty()) opts += ",\"feature_mode\":\"" + json_escape(ev_mode) + "\"";
        opts += "}";
        return finish(engage_evaluate(ev_task.c_str(), ev_corpus.c_str(), ev_folds.c_str(),
                                      opts.c_str(), ev_out.c_str()));
    }

    if (replay->parsed()) {
        if (rp_speed < 0.0) {
            std::fprintf(stderr, "engage: --speed must be >= 0\n");
            return 1;
        }
        std::string geometry = resolve_geometry(rp_session, rp_models, rp_geometry);

        engage_session* session = nullptr;
        if (auto st = engage_session_open(rp_session.c_str(), &session); st != ENGAGE_OK)
            return finish(st);
        engage_recognizer* rec = nullptr;
        std::filesystem::path sdir(rp_session);
        std::string lexicon_dir = sdir.parent_path().parent_path().string();
        if (auto st = engage_recognizer_create(rp_models.c_str(), geometry.c_str(),
                                               lexicon_dir.c_str(), &rec);
            st != ENGAGE_OK) {
            engage_session_free(session);
            return finish(st);
        }

        const int64_t end_ms = engage_session_end_ms(session) + 100;
        const int64_t tick_ms = 20;
        double max_latency_ms = 0.0;
        char buf[512];
        engage_status st = ENGAGE_OK;
        for (int64_t now = 0; now <= end_ms && st == ENGAGE_OK; now += tick_ms) {
            auto t0 = std::chrono::steady_clock::now();
            st = engage_session_feed(session, rec, now);
            int got;
            while ((got = engage_recognizer_poll(rec, buf, sizeof buf)) == 1) {
                double lat = std::chrono::duration<double, std::milli>(
                                 std::chrono::steady_clock::now() - t0)
                                 .count();
                max_latency_ms = std::max(max_latency_ms, lat);
                std::printf("%s\n", buf);
                std::fflush(stdout);
            }
            if (got < 0) st = static_cast<engage_status>(-got);
            if (rp_speed > 0.0) {
                auto elapsed = std::chrono::steady_clock::now() - t0;
                auto budget = std::chrono::duration<double, std::milli>(tick_ms / rp_speed);
                if (elapsed < budget)
                    std::this_thread::sleep_for(budget - elapsed);
            }
        }
        engage_recognizer_free(rec);
        engage_session_free(session);
        if (st == ENGAGE_OK)
            std::fprintf(stderr, "replay: max per-turn compute latency %.1f ms\n", max_latency_ms);
        return finish(st);
    }

    return 1;
}
