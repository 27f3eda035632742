/* engage — social-signal detection and engagement estimation for
 * human-robot conversation streams.
 *
 * C interface to the engine: corpus generation, detector training, batch
 * detection, evaluation, and a streaming recognizer for live use. All
 * functions return ENGAGE_OK on success; on failure they return a status
 * code and engage_last_error() carries a message (thread-local).
 */
#ifndef ENGAGE_H
#define ENGAGE_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum engage_status {
    ENGAGE_OK = 0,
    ENGAGE_ERR_USAGE = 1,    /* bad arguments */
    ENGAGE_ERR_DATA = 2,     /* malformed or invalid input data */
    ENGAGE_ERR_MODEL = 3,    /* model/feature mismatch or missing model */
    ENGAGE_ERR_IO = 4,       /* filesystem failure */
    ENGAGE_ERR_INTERNAL = 5
} engage_status;

const char* engage_version(void);

/* Message for the last failure on this thread; empty string if none. */
const char* engage_last_error(void);

/* Writes a synthetic corpus (sessions + lexicon + geometry + annotations)
 * under out_dir. config_json_path may be NULL for the built-in defaults. */
engage_status engage_generate_corpus(const char* config_json_path, const char* out_dir,
                                     uint64_t seed);

/* Trains one model from a corpus directory and writes it to out_model_path.
 * task: "nod" | "laughter" | "backchannel" | "engagement".
 * options_json (may be NULL) is a JSON object; recognized keys:
 *   seed, max_epochs, learning_rate, batch_size, hidden_dim,
 *   max_train_windows, max_valid_windows      (nod)
 *   feature_mode ("prosody"|"full"), rf_trees (laughter/backchannel)
 *   context (bool), k, restarts               (engagement)
 */
engage_status engage_train(const char* task, const char* corpus_dir,
                           const char* out_model_path, const char* options_json);

/* Runs all four detectors plus the engagement model over one session and
 * writes one JSON line per robot turn to out_states_path:
 *   {"turn_id","nod","laughter","backchannel","gaze","engagement"} */
engage_status engage_detect(const char* session_dir, const char* models_dir,
                            const char* geometry_path, const char* out_states_path);

/* Cross-validated evaluation over a corpus; folds_spec is "folds:test:valid"
 * (e.g. "10:2:2") or "loso". Writes report JSON and prints a table to stdout.
 * options_json as for engage_train. */
engage_status engage_evaluate(const char* task, const char* corpus_dir, const char* folds_spec,
                              const char* options_json, const char* out_report_path);

/* ---- streaming recognizer ---- */

typedef struct engage_recognizer engage_recognizer;

/* lexicon_dir may be NULL; the lexicon is then searched in models_dir. */
engage_status engage_recognizer_create(const char* models_dir, const char* geometry_path,
                                       const char* lexicon_dir, engage_recognizer** out);
void engage_recognizer_free(engage_recognizer* rec);

engage_status engage_recognizer_push_frame(engage_recognizer* rec, int64_t timestamp_ms,
                                           double head_x_m, double head_y_m, double head_z_m,
                                           double yaw_deg, double roll_deg, double pitch_deg);

/* ipu_json: one line in the ipus.jsonl schema. */
engage_status engage_recognizer_push_ipu(engage_recognizer* rec, const char* ipu_json);

/* turn_json: one line in the turns.jsonl schema; push when the turn ends. */
engage_status engage_recognizer_push_turn(engage_recognizer* rec, const char* turn_json);

/* Pops one pending per-turn result as a states.jsonl line into buf.
 * Returns 1 when a line was written, 0 when none is pending, negative
 * engage_status on error (e.g. buffer too small). */
int engage_recognizer_poll(engage_recognizer* rec, char* buf, size_t buf_len);

/* ---- session files (for feeding a recognizer from disk) ---- */

typedef struct engage_session engage_session;

engage_status engage_session_open(const char* session_dir, engage_session** out);
void engage_session_free(engage_session* s);

int64_t engage_session_end_ms(const engage_session* s);
int64_t engage_session_robot_turn_count(const engage_session* s);

/* Pushes every not-yet-fed event with time <= upto_ms into the recognizer,
 * in stream order. Feeding is stateful: each event is delivered once. */
engage_status engage_session_feed(engage_session* s, engage_recognizer* rec, int64_t upto_ms);

#ifdef __cplusplus
}
#endif

#endif /* ENGAGE_H */
