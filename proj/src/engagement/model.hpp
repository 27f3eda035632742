#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "core/types.hpp"

namespace engage::engagement {

// One annotator judgment of one robot turn: the turn's behavior-state index
// and the binary engaged label. turn_key identifies the turn globally
// (session_id/turn_id) so the state prior counts each turn once.
struct AnnotationRecord {
    std::string annotator_id;
    std::string turn_key;
    int state = 0;
    int engaged = 0;
};

// Latent-character mixture: theta rows give each annotator's distribution
// over K characters, phi[k][x] the probability that character k perceives
// behavior state x as engaged. state_prior is the smoothed empirical
// frequency of states over training turns, used for live marginalization.
struct EngagementModel {
    int K = 3;
    bool context_enabled = false;
    std::vector<std::string> annotator_ids;         // sorted
    std::vector<std::vector<double>> theta;         // [annotator][K]
    std::vector<std::vector<double>> phi;           // [K][S]
    std::vector<double> state_prior;                // [S]
    std::vector<double> loglik_trace;               // MAP objective per EM iteration

    int state_dim() const { return core::state_count(context_enabled); }
};

struct EmConfig {
    int K = 3;
    std::uint64_t seed = 0;
    int restarts = 10;
    int max_iters = 500;
    double tol = 1e-6;  // stop when the objective gain falls below this
};

// EM with add-one MAP smoothing (Dirichlet on theta rows, Beta(2,2) on phi).
// Deterministic given the seed; keeps the best of `restarts` seeded runs.
// The recorded objective (log-likelihood plus log prior) is non-decreasing
// per iteration within each run.
EngagementModel fit_em(std::span<const AnnotationRecord> records, bool context_enabled,
                       const EmConfig& cfg);

// Data log-likelihood of records under the model (no prior term).
double data_loglik(const EngagementModel& m, std::span<const AnnotationRecord> records);

// sum_k theta[i][k] * phi[k][x].
double posterior(const EngagementModel& m, const std::string& annotator_id, int state);

// Zero or more observed signals; the rest are marginalized over state_prior.
struct PartialState {
    std::optional<bool> nod, laughter, backchannel, gaze, prev_engaged;
};

// Population prediction: character weights are the mean of theta over
// annotators; unobserved state bits are marginalized with the renormalized
// state prior. A fully observed state reduces to sum_k pi_k phi[k][x].
double predict_live(const EngagementModel& m, const PartialState& observed);

// Sequential filtering for a context model over one session's robot turns:
// the first turn uses prev_engaged = 0, later turns use (p_prev >= 0.5).
// Input states must not carry prev_engaged.
std::vector<double> predict_session_with_context(const EngagementModel& m,
                                                 std::span<const core::BehaviorState> turn_states);

void save_engagement_model(const EngagementModel& m, const std::filesystem::path& file);
EngagementModel load_engagement_model(const std::filesystem::path& file);

}  // namespace engage::engagement
