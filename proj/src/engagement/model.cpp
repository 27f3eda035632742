#include "engagement/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <random>
#include <set>

#include <json.hpp>

#include "util/error.hpp"
#include "util/num.hpp"

namespace engage::engagement {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

struct IndexedRecords {
    std::vector<std::string> annotator_ids;
    std::vector<int> annotator;  // per record
    std::vector<int> state;
    std::vector<int> engaged;
};

IndexedRecords index_records(std::span<const AnnotationRecord> records, int S) {
    require(!records.empty(), ErrorCode::data, "empty annotation records");
    std::set<std::string> ids;
    for (const auto& r : records) {
        require(r.state >= 0 && r.state < S, ErrorCode::data,
                "state index " + std::to_string(r.state) + " out of range for S=" +
                    std::to_string(S));
        require(r.engaged == 0 || r.engaged == 1, ErrorCode::data, "engaged must be 0 or 1");
        ids.insert(r.annotator_id);
    }
    require(ids.size() >= 2, ErrorCode::data, "need at least 2 annotators");
    bool any0 = false, any1 = false;
    for (const auto& r : records) (r.engaged ? any1 : any0) = true;
    require(any0 && any1, ErrorCode::data, "both engaged labels must be present");

    IndexedRecords out;
    out.annotator_ids.assign(ids.begin(), ids.end());
    std::map<std::string, int> lookup;
    for (size_t i = 0; i < out.annotator_ids.size(); ++i) lookup[out.annotator_ids[i]] = static_cast<int>(i);
    out.annotator.reserve(records.size());
    for (const auto& r : records) {
        out.annotator.push_back(lookup[r.annotator_id]);
        out.state.push_back(r.state);
        out.engaged.push_back(r.engaged);
    }
    return out;
}

// MAP objective: data log-likelihood plus the smoothing-prior log density
// (up to an additive constant).
long double map_objective(const std::vector<std::vector<double>>& theta,
                          const std::vector<std::vector<double>>& phi,
                          const IndexedRecords& rec) {
    long double obj = 0.0L;
    size_t n = rec.annotator.size();
    size_t K = phi.size();
    for (size_t r = 0; r < n; ++r) {
        long double p = 0.0L;
        int i = rec.annotator[r], x = rec.state[r], y = rec.engaged[r];
        for (size_t k = 0; k < K; ++k) {
            double ph = phi[k][x];
            p += static_cast<long double>(theta[i][k]) * (y ? ph : 1.0 - ph);
        }
        obj += std::log(p);
    }
    for (const auto& row : theta)
        for (double t : row) obj += std::log(static_cast<long double>(t));
    for (const auto& row : phi)
        for (double p : row) obj += std::log(static_cast<long double>(p)) +
                                    std::log(static_cast<long double>(1.0 - p));
    return obj;
}

struct EmRun {
    std::vector<std::vector<double>> theta, phi;
    std::vector<double> trace;
    long double objective = 0.0L;
};

EmRun run_em(const IndexedRecords& rec, int K, int S, std::uint64_t seed, int max_iters,
             double tol) {
    size_t n = rec.annotator.size();
    size_t A = rec.annotator_ids.size();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.5, 1.5);
    std::uniform_real_distribution<double> up(0.25, 0.75);

    EmRun run;
    run.theta.assign(A, std::vector<double>(K));
    for (auto& row : run.theta) {
        double sum = 0.0;
        for (double& v : row) {
            v = u(rng);
            sum += v;
        }
        for (double& v : row) v /= sum;
    }
    run.phi.assign(K, std::vector<double>(S));
    for (auto& row : run.phi)
        for (double& v : row) v = up(rng);

    std::vector<int> count_i(A, 0);
    for (size_t r = 0; r < n; ++r) ++count_i[rec.annotator[r]];

    std::vector<double> resp(K);
    long double prev_obj = -std::numeric_limits<long double>::infinity();
    bool converged = false;
    for (int iter = 0; iter < max_iters; ++iter) {
        long double obj = map_objective(run.theta, run.phi, rec);
        run.trace.push_back(static_cast<double>(obj));
        if (iter > 0 && obj - prev_obj < static_cast<long double>(tol)) {
            converged = true;
            break;
        }
        prev_obj = obj;

        std::vector<std::vector<double>> theta_num(A, std::vector<double>(K, 0.0));
        std::vector<std::vector<double>> phi_num(K, std::vector<double>(S, 0.0));
        std::vector<std::vector<double>> phi_den(K, std::vector<double>(S, 0.0));
        for (size_t r = 0; r < n; ++r) {
            int i = rec.annotator[r], x = rec.state[r], y = rec.engaged[r];
            double norm = 0.0;
            for (int k = 0; k < K; ++k) {
                double ph = run.phi[k][x];
                resp[k] = run.theta[i][k] * (y ? ph : 1.0 - ph);
                norm += resp[k];
            }
            for (int k = 0; k < K; ++k) {
                double w = resp[k] / norm;
                theta_num[i][k] += w;
                phi_num[k][x] += w * y;
                phi_den[k][x] += w;
            }
        }
        for (size_t i = 0; i < A; ++i)
            for (int k = 0; k < K; ++k)
                run.theta[i][k] = (theta_num[i][k] + 1.0) / (count_i[i] + K);
        for (int k = 0; k < K; ++k)
            for (int x = 0; x < S; ++x)
                run.phi[k][x] = (phi_num[k][x] + 1.0) / (phi_den[k][x] + 2.0);
    }
    run.objective = map_objective(run.theta, run.phi, rec);
    if (!converged) run.trace.push_back(static_cast<double>(run.objective));
    return run;
}

int annotator_index(const EngagementModel& m, const std::string& id) {
    auto it = std::lower_bound(m.annotator_ids.begin(), m.annotator_ids.end(), id);
    require(it != m.annotator_ids.end() && *it == id, ErrorCode::model,
            "unknown annotator id '" + id + "'");
    return static_cast<int>(it - m.annotator_ids.begin());
}

bool state_consistent(int x, const PartialState& obs, bool context) {
    auto bit = [&](int shift) { return ((x >> shift) & 1) != 0; };
    if (obs.nod && *obs.nod != bit(0)) return false;
    if (obs.laughter && *obs.laughter != bit(1)) return false;
    if (obs.backchannel && *obs.backchannel != bit(2)) return false;
    if (obs.gaze && *obs.gaze != bit(3)) return false;
    if (context && obs.prev_engaged && *obs.prev_engaged != bit(4)) return false;
    return true;
}

}  // namespace

EngagementModel fit_em(std::span<const AnnotationRecord> records, bool context_enabled,
                       const EmConfig& cfg) {
    require(cfg.K >= 1, ErrorCode::usage, "K must be >= 1");
    require(cfg.restarts >= 1, ErrorCode::usage, "restarts must be >= 1");
    int S = core::state_count(context_enabled);
    IndexedRecords rec = index_records(records, S);

    std::mt19937_64 master(cfg.seed);
    std::vector<std::uint64_t> seeds(cfg.restarts);
    for (auto& s : seeds) s = master();

    EmRun best;
    bool have_best = false;
    for (int r = 0; r < cfg.restarts; ++r) {
        EmRun run = run_em(rec, cfg.K, S, seeds[r], cfg.max_iters, cfg.tol);
        if (!have_best || run.objective > best.objective) {
            best = std::move(run);
            have_best = true;
        }
    }

    EngagementModel m;
    m.K = cfg.K;
    m.context_enabled = context_enabled;
    m.annotator_ids = rec.annotator_ids;
    m.theta = std::move(best.theta);
    m.phi = std::move(best.phi);
    m.loglik_trace = std::move(best.trace);

    // State prior over distinct training turns, add-one smoothed.
    std::map<std::string, int> turn_state;
    for (const auto& r : records) turn_state.emplace(r.turn_key, r.state);
    m.state_prior.assign(S, 0.0);
    for (const auto& [key, x] : turn_state) m.state_prior[x] += 1.0;
    double denom = static_cast<double>(turn_state.size()) + S;
    for (double& p : m.state_prior) p = (p + 1.0) / denom;
    return m;
}

double data_loglik(const EngagementModel& m, std::span<const AnnotationRecord> records) {
    long double obj = 0.0L;
    for (const auto& r : records) {
        require(r.state >= 0 && r.state < m.state_dim(), ErrorCode::data, "state out of range");
        int i = annotator_index(m, r.annotator_id);
        long double p = 0.0L;
        for (int k = 0; k < m.K; ++k) {
            double ph = m.phi[k][r.state];
            p += static_cast<long double>(m.theta[i][k]) * (r.engaged ? ph : 1.0 - ph);
        }
        obj += std::log(p);
    }
    return static_cast<double>(obj);
}

double posterior(const EngagementModel& m, const std::string& annotator_id, int state) {
    require(state >= 0 && state < m.state_dim(), ErrorCode::model,
            "state index " + std::to_string(state) + " out of range");
    int i = annotator_index(m, annotator_id);
    double p = 0.0;
    for (int k = 0; k < m.K; ++k) p += m.theta[i][k] * m.phi[k][state];
    return p;
}

double predict_live(const EngagementModel& m, const PartialState& observed) {
    require(m.context_enabled || !observed.prev_engaged.has_value(), ErrorCode::model,
            "prev_engaged observed but model has no context");
    int S = m.state_dim();
    std::vector<double> pi(m.K, 0.0);
    for (const auto& row : m.theta)
        for (int k = 0; k < m.K; ++k) pi[k] += row[k];
    for (double& v : pi) v /= static_cast<double>(m.theta.size());

    double mass = 0.0, acc = 0.0;
    for (int x = 0; x < S; ++x) {
        if (!state_consistent(x, observed, m.context_enabled)) continue;
        double px = m.state_prior[x];
        double post = 0.0;
        for (int k = 0; k < m.K; ++k) post += pi[k] * m.phi[k][x];
        acc += px * post;
        mass += px;
    }
    require(mass > 0.0, ErrorCode::internal, "no state consistent with observation");
    return acc / mass;
}

std::vector<double> predict_session_with_context(
    const EngagementModel& m, std::span<const core::BehaviorState> turn_states) {
    require(m.context_enabled, ErrorCode::model, "model was fitted without context");
    std::vector<double> out;
    out.reserve(turn_states.size());
    bool prev = false;
    for (const core::BehaviorState& s : turn_states) {
        require(!s.prev_engaged.has_value(), ErrorCode::usage,
                "turn states must not carry prev_engaged; the filter supplies it");
        PartialState obs;
        obs.nod = s.nod;
        obs.laughter = s.laughter;
        obs.backchannel = s.backchannel;
        obs.gaze = s.gaze;
        obs.prev_engaged = prev;
        double p = predict_live(m, obs);
        out.push_back(p);
        prev = p >= 0.5;
    }
    return out;
}

void save_engagement_model(const EngagementModel& m, const std::filesystem::path& file) {
    ordered_json j;
    j["K"] = m.K;
    j["annotator_ids"] = m.annotator_ids;
    j["theta"] = m.theta;
    j["phi"] = m.phi;
    j["state_prior"] = m.state_prior;
    j["context_enabled"] = m.context_enabled;
    j["loglik_trace"] = m.loglik_trace;
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) fail_io("cannot open " + file.string() + " for writing");
    out << j.dump() << '\n';
    if (!out) fail_io("write failure on " + file.string());
}

EngagementModel load_engagement_model(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) fail_io("cannot open " + file.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        fail_data(file.string() + ": " + e.what());
    }
    EngagementModel m;
    try {
        m.K = j.at("K").get<int>();
        m.annotator_ids = j.at("annotator_ids").get<std::vector<std::string>>();
        m.theta = j.at("theta").get<std::vector<std::vector<double>>>();
        m.phi = j.at("phi").get<std::vector<std::vector<double>>>();
        m.state_prior = j.at("state_prior").get<std::vector<double>>();
        m.context_enabled = j.at("context_enabled").get<bool>();
        m.loglik_trace = j.value("loglik_trace", std::vector<double>{});
    } catch (const json::exception& e) {
        fail_data(file.string() + ": " + e.what());
    }
    int S = m.state_dim();
    require(m.theta.size() == m.annotator_ids.size(), ErrorCode::model, "theta row count mismatch");
    for (const auto& row : m.theta) {
        require(static_cast<int>(row.size()) == m.K, ErrorCode::model, "theta column count mismatch");
        double sum = 0.0;
        for (double v : row) sum += v;
        require(std::abs(sum - 1.0) <= 1e-9, ErrorCode::model, "theta row does not sum to 1");
    }
    require(static_cast<int>(m.phi.size()) == m.K, ErrorCode::model, "phi row count mismatch");
    for (const auto& row : m.phi) {
        require(static_cast<int>(row.size()) == S, ErrorCode::model, "phi column count mismatch");
        for (double v : row)
            require(v >= 0.0 && v <= 1.0, ErrorCode::model, "phi entry outside [0,1]");
    }
    require(static_cast<int>(m.state_prior.size()) == S, ErrorCode::model,
            "state_prior size mismatch");
    double sum = 0.0;
    for (double v : m.state_prior) sum += v;
    require(std::abs(sum - 1.0) <= 1e-9, ErrorCode::model, "state_prior does not sum to 1");
    return m;
}

}  // namespace engage::engagement
