#include "engage.h"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <deque>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "core/session_io.hpp"
#include "engagement/model.hpp"
#include "eval/harness.hpp"
#include "ipu/classifier.hpp"
#include "learn/model_io.hpp"
#include "pipeline/evaluate.hpp"
#include "pipeline/models.hpp"
#include "pipeline/recognizer.hpp"
#include "pipeline/train.hpp"
#include "synth/generator.hpp"
#include "util/error.hpp"

using nlohmann::json;

namespace {

thread_local std::string g_last_error;

engage_status to_status(engage::ErrorCode code) {
    switch (code) {
        case engage::ErrorCode::usage: return ENGAGE_ERR_USAGE;
        case engage::ErrorCode::data: return ENGAGE_ERR_DATA;
        case engage::ErrorCode::model: return ENGAGE_ERR_MODEL;
        case engage::ErrorCode::io: return ENGAGE_ERR_IO;
        case engage::ErrorCode::internal: return ENGAGE_ERR_INTERNAL;
    }
    return ENGAGE_ERR_INTERNAL;
}

template <typename Fn>
engage_status guarded(Fn&& fn) {
    try {
        fn();
        g_last_error.clear();
        return ENGAGE_OK;
    } catch (const engage::Error& e) {
        g_last_error = e.what();
        return to_status(e.code());
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return ENGAGE_ERR_INTERNAL;
    }
}

engage_status require_args(std::initializer_list<const char*> args) {
    for (const char* a : args)
        if (a == nullptr) {
            g_last_error = "null argument";
            return ENGAGE_ERR_USAGE;
        }
    return ENGAGE_OK;
}

json parse_options(const char* options_json) {
    if (!options_json || !*options_json) return json::object();
    try {
        json j = json::parse(options_json);
        engage::require(j.is_object(), engage::ErrorCode::usage,
                        "options_json must be a JSON object");
        return j;
    } catch (const json::exception& e) {
        engage::fail_usage(std::string("bad options_json: ") + e.what());
    }
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) engage::fail_io("cannot open " + path.string() + " for writing");
    out << content;
    if (!out) engage::fail_io("write failure on " + path.string());
}

}  // namespace

struct engage_recognizer {
    engage::pipeline::ModelSet models;
    engage::pipeline::Recognizer rec;
    std::deque<std::string> pending;

    explicit engage_recognizer(engage::pipeline::ModelSet m)
        : models(std::move(m)), rec(models) {}

    void collect() {
        for (const auto& out : rec.drain()) pending.push_back(engage::pipeline::to_states_line(out));
    }
};

struct engage_session {
    engage::core::Session session;
    // Merged event stream (time, kind, index), feed cursor.
    struct Event {
        std::int64_t time;
        int kind;
        size_t index;
    };
    std::vector<Event> events;
    size_t cursor = 0;

    explicit engage_session(engage::core::Session s) : session(std::move(s)) {
        for (size_t i = 0; i < session.frames.size(); ++i)
            events.push_back({session.frames[i].timestamp_ms, 0, i});
        for (size_t i = 0; i < session.ipus.size(); ++i)
            events.push_back({session.ipus[i].t_end_ms, 1, i});
        for (size_t i = 0; i < session.turns.size(); ++i)
            events.push_back({session.turns[i].t_end_ms, 2, i});
        std::stable_sort(events.begin(), events.end(), [](const Event& a, const Event& b) {
            if (a.time != b.time) return a.time < b.time;
            return a.kind < b.kind;
        });
    }
};

extern "C" {

const char* engage_version(void) { return "1.0.0"; }

const char* engage_last_error(void) { return g_last_error.c_str(); }

engage_status engage_generate_corpus(const char* config_json_path, const char* out_dir,
                                     uint64_t seed) {
    if (auto st = require_args({out_dir}); st != ENGAGE_OK) return st;
    return guarded([&] {
        engage::synth::SynthConfig cfg;
        if (config_json_path && *config_json_path)
            cfg = engage::synth::load_synth_config(config_json_path);
        engage::synth::generate_corpus(cfg, out_dir, seed);
    });
}

engage_status engage_train(const char* task, const char* corpus_dir, const char* out_model_path,
                           const char* options_json) {
    if (auto st = require_args({task, corpus_dir, out_model_path}); st != ENGAGE_OK) return st;
    return guarded([&] {
        json opts = parse_options(options_json);
        std::uint64_t seed = opts.value("seed", std::uint64_t{0});
        std::string which(task);
        engage::pipeline::Corpus corpus = engage::pipeline::load_corpus(corpus_dir);

        if (which == "nod") {
            engage::pipeline::NodTrainOptions topts;
            topts.train.seed = seed;
            topts.train.max_epochs = opts.value("max_epochs", 0);
            topts.train.learning_rate = opts.value("learning_rate", topts.train.learning_rate);
            topts.train.batch_size = opts.value("batch_size", topts.train.batch_size);
            topts.hidden_dim = opts.value("hidden_dim", topts.hidden_dim);
            topts.max_train_windows =
                opts.value("max_train_windows", topts.max_train_windows);
            topts.max_valid_windows =
                opts.value("max_valid_windows", topts.max_valid_windows);
            auto [train_set, valid_set] =
                engage::pipeline::split_sessions(corpus.sessions, 0.2, seed);
            auto model = engage::pipeline::train_nod(train_set, valid_set, topts);
            engage::learn::save_model(model, out_model_path);
        } else if (which == "laughter" || which == "backchannel") {
            engage::ipu::IpuTrainOptions topts;
            topts.train.seed = seed;
            topts.train.max_epochs = opts.value("max_epochs", 60);
            topts.train.learning_rate = opts.value("learning_rate", topts.train.learning_rate);
            topts.rf_trees = opts.value("rf_trees", topts.rf_trees);
            auto mode = engage::ipu::feature_mode_from_string(
                opts.value("feature_mode", std::string("full")));
            engage::require(mode == engage::ipu::FeatureMode::prosody_only ||
                                corpus.lexicon.has_value(),
                            engage::ErrorCode::model,
                            "corpus has no lexicon; use feature_mode=prosody");
            std::vector<const engage::core::Session*> all;
            for (const auto& s : corpus.sessions) all.push_back(&s);
            auto bundle = engage::ipu::train_ipu_classifier(
                all, engage::ipu::task_from_string(which), mode, topts, corpus.lexicon_ptr());
            engage::ipu::save_bundle(bundle, out_model_path);
        } else if (which == "engagement") {
            bool context = opts.value("context", false);
            engage::engagement::EmConfig em;
            em.K = opts.value("k", em.K);
            em.seed = seed;
            em.restarts = opts.value("restarts", em.restarts);
            std::vector<const engage::core::Session*> all;
            for (const auto& s : corpus.sessions) all.push_back(&s);
            auto records = engage::pipeline::annotation_records(all, corpus.geometry, context);
            auto model = engage::engagement::fit_em(records, context, em);
            engage::engagement::save_engagement_model(model, out_model_path);
        } else {
            engage::fail_usage("unknown training task '" + which +
                               "' (expected nod|laughter|backchannel|engagement)");
        }
    });
}

engage_status engage_detect(const char* session_dir, const char* models_dir,
                            const char* geometry_path, const char* out_states_path) {
    if (auto st = require_args({session_dir, models_dir, geometry_path, out_states_path});
        st != ENGAGE_OK)
        return st;
    return guarded([&] {
        std::filesystem::path sdir(session_dir);
        engage::core::Session s = engage::core::load_session(sdir);
        std::vector<std::filesystem::path> hints{sdir, sdir.parent_path(),
                                                 sdir.parent_path().parent_path()};
        auto models = engage::pipeline::load_models(models_dir, geometry_path, hints);
        auto outs = engage::pipeline::detect_session(s, models);
        write_file(out_states_path, engage::pipeline::to_states_jsonl(outs));
    });
}

engage_status engage_evaluate(const char* task, const char* corpus_dir, const char* folds_spec,
                              const char* options_json, const char* out_report_path) {
    if (auto st = require_args({task, corpus_dir, folds_spec, out_report_path}); st != ENGAGE_OK)
        return st;
    return guarded([&] {
        json jopts = parse_options(options_json);
        engage::pipeline::EvalOptions opts;
        opts.seed = jopts.value("seed", std::uint64_t{0});
        opts.max_epochs = jopts.value("max_epochs", 0);
        opts.context = jopts.value("context", false);
        opts.k = jopts.value("k", opts.k);
        opts.restarts = jopts.value("restarts", opts.restarts);
        opts.rf_trees = jopts.value("rf_trees", opts.rf_trees);
        opts.threshold = jopts.value("threshold", opts.threshold);
        if (jopts.contains("feature_mode"))
            opts.feature_mode =
                engage::ipu::feature_mode_from_string(jopts["feature_mode"].get<std::string>());

        engage::pipeline::Corpus corpus = engage::pipeline::load_corpus(corpus_dir);
        std::string which(task);
        engage::eval::EvalReport report;
        if (which == "gaze") {
            report = engage::pipeline::evaluate_gaze(corpus);
        } else {
            auto spec = engage::eval::FoldsSpec::parse(folds_spec);
            if (which == "nod") report = engage::pipeline::evaluate_nod(corpus, spec, opts);
            else if (which == "laughter")
                report = engage::pipeline::evaluate_ipu(corpus, engage::ipu::Task::laughter, spec,
                                                        opts);
            else if (which == "backchannel")
                report = engage::pipeline::evaluate_ipu(corpus, engage::ipu::Task::backchannel,
                                                        spec, opts);
            else if (which == "engagement")
                report = engage::pipeline::evaluate_engagement(corpus, spec, opts);
            else
                engage::fail_usage("unknown evaluation task '" + which + "'");
        }
        report.save(out_report_path);
        std::ostringstream table;
        report.print(table);
        std::fputs(table.str().c_str(), stdout);
    });
}

engage_status engage_recognizer_create(const char* models_dir, const char* geometry_path,
                                       const char* lexicon_dir, engage_recognizer** out) {
    if (auto st = require_args({models_dir, geometry_path}); st != ENGAGE_OK) return st;
    if (!out) {
        g_last_error = "null output pointer";
        return ENGAGE_ERR_USAGE;
    }
    *out = nullptr;
    return guarded([&] {
        std::vector<std::filesystem::path> hints;
        if (lexicon_dir && *lexicon_dir) hints.push_back(lexicon_dir);
        auto models = engage::pipeline::load_models(models_dir, geometry_path, hints);
        *out = new engage_recognizer(std::move(models));
    });
}

void engage_recognizer_free(engage_recognizer* rec) { delete rec; }

engage_status engage_recognizer_push_frame(engage_recognizer* rec, int64_t timestamp_ms,
                                           double head_x_m, double head_y_m, double head_z_m,
                                           double yaw_deg, double roll_deg, double pitch_deg) {
    if (!rec) {
        g_last_error = "null recognizer";
        return ENGAGE_ERR_USAGE;
    }
    return guarded([&] {
        engage::core::PoseFrame f;
        f.timestamp_ms = timestamp_ms;
        f.head_pos = {head_x_m, head_y_m, head_z_m};
        f.yaw_deg = yaw_deg;
        f.roll_deg = roll_deg;
        f.pitch_deg = pitch_deg;
        rec->rec.push_frame(f);
        rec->collect();
    });
}

engage_status engage_recognizer_push_ipu(engage_recognizer* rec, const char* ipu_json) {
    if (!rec || !ipu_json) {
        g_last_error = "null argument";
        return ENGAGE_ERR_USAGE;
    }
    return guarded([&] {
        json j;
        try {
            j = json::parse(ipu_json);
        } catch (const json::exception& e) {
            engage::fail_data(std::string("bad ipu json: ") + e.what());
        }
        engage::core::IpuRecord ipu;
        try {
            ipu.ipu_id = j.at("ipu_id").get<std::string>();
            ipu.t_start_ms = j.at("t_start_ms").get<std::int64_t>();
            ipu.t_end_ms = j.at("t_end_ms").get<std::int64_t>();
            for (const json& jt : j.at("tokens"))
                ipu.tokens.push_back({jt.at("surface").get<std::string>(),
                                      jt.at("pos").get<std::string>(),
                                      jt.at("embedding_id").get<std::string>()});
            ipu.f0_hz = j.at("f0_hz").get<std::vector<double>>();
            ipu.intensity_db = j.at("intensity_db").get<std::vector<double>>();
            ipu.hop_ms = j.at("hop_ms").get<int>();
            if (j.contains("label"))
                ipu.label = engage::core::ipu_label_from_string(j["label"].get<std::string>());
        } catch (const json::exception& e) {
            engage::fail_data(std::string("bad ipu json: ") + e.what());
        }
        rec->rec.push_ipu(ipu);
        rec->collect();
    });
}

engage_status engage_recognizer_push_turn(engage_recognizer* rec, const char* turn_json) {
    if (!rec || !turn_json) {
        g_last_error = "null argument";
        return ENGAGE_ERR_USAGE;
    }
    return guarded([&] {
        json j;
        try {
            j = json::parse(turn_json);
        } catch (const json::exception& e) {
            engage::fail_data(std::string("bad turn json: ") + e.what());
        }
        engage::core::Turn t;
        try {
            t.turn_id = j.at("turn_id").get<std::string>();
            t.speaker = engage::core::speaker_from_string(j.at("speaker").get<std::string>());
            t.t_start_ms = j.at("t_start_ms").get<std::int64_t>();
            t.t_end_ms = j.at("t_end_ms").get<std::int64_t>();
        } catch (const json::exception& e) {
            engage::fail_data(std::string("bad turn json: ") + e.what());
        }
        rec->rec.push_turn(t);
        rec->collect();
    });
}

int engage_recognizer_poll(engage_recognizer* rec, char* buf, size_t buf_len) {
    if (!rec || !buf) {
        g_last_error = "null argument";
        return -ENGAGE_ERR_USAGE;
    }
    rec->collect();
    if (rec->pending.empty()) return 0;
    const std::string& line = rec->pending.front();
    if (line.size() + 1 > buf_len) {
        g_last_error = "poll buffer too small (need " + std::to_string(line.size() + 1) + " bytes)";
        return -ENGAGE_ERR_USAGE;
    }
    std::memcpy(buf, line.c_str(), line.size() + 1);
    rec->pending.pop_front();
    return 1;
}

engage_status engage_session_open(const char* session_dir, engage_session** out) {
    if (auto st = require_args({session_dir}); st != ENGAGE_OK) return st;
    if (!out) {
        g_last_error = "null output pointer";
        return ENGAGE_ERR_USAGE;
    }
    *out = nullptr;
    return guarded([&] { *out = new engage_session(engage::core::load_session(session_dir)); });
}

void engage_session_free(engage_session* s) { delete s; }

int64_t engage_session_end_ms(const engage_session* s) {
    if (!s || s->events.empty()) return 0;
    return s->events.back().time;
}

int64_t engage_session_robot_turn_count(const engage_session* s) {
    if (!s) return 0;
    return static_cast<int64_t>(engage::core::robot_turns(s->session).size());
}

engage_status engage_session_feed(engage_session* s, engage_recognizer* rec, int64_t upto_ms) {
    if (!s || !rec) {
        g_last_error = "null argument";
        return ENGAGE_ERR_USAGE;
    }
    return guarded([&] {
        while (s->cursor < s->events.size() && s->events[s->cursor].time <= upto_ms) {
            const auto& e = s->events[s->cursor];
            switch (e.kind) {
                case 0: rec->rec.push_frame(s->session.frames[e.index]); break;
                case 1: rec->rec.push_ipu(s->session.ipus[e.index]); break;
                default: rec->rec.push_turn(s->session.turns[e.index]); break;
            }
            ++s->cursor;
        }
        rec->collect();
    });
}

}  // extern "C"
