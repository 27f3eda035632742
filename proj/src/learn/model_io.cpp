#include "learn/model_io.hpp"

#include <fstream>

#include "util/error.hpp"
#include "util/num.hpp"

namespace engage::learn {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

ordered_json tensor(const std::string& name, std::vector<std::int64_t> shape,
                    const std::vector<double>& data) {
    std::int64_t expect = 1;
    for (auto s : shape) expect *= s;
    require(expect == static_cast<std::int64_t>(data.size()), ErrorCode::internal,
            "tensor shape/data mismatch for " + name);
    require(all_finite(data), ErrorCode::data, "non-finite value in tensor " + name);
    ordered_json t;
    t["name"] = name;
    t["shape"] = shape;
    t["data"] = data;
    return t;
}

std::vector<double> take_tensor(const json& weights, const std::string& name,
                                std::vector<std::int64_t> shape) {
    for (const json& t : weights) {
        if (t.at("name").get<std::string>() != name) continue;
        auto got_shape = t.at("shape").get<std::vector<std::int64_t>>();
        require(got_shape == shape, ErrorCode::model, "tensor shape mismatch for " + name);
        auto data = t.at("data").get<std::vector<double>>();
        std::int64_t expect = 1;
        for (auto s : shape) expect *= s;
        require(expect == static_cast<std::int64_t>(data.size()), ErrorCode::model,
                "tensor data size mismatch for " + name);
        require(all_finite(data), ErrorCode::model, "non-finite value in tensor " + name);
        return data;
    }
    fail_model("missing tensor " + name);
}

ordered_json lstm_to_json(const LstmModel& m) {
    ordered_json j;
    j["kind"] = "lstm";
    j["hyperparams"] = {{"input_dim", m.input_dim},
                        {"hidden_dim", m.hidden_dim},
                        {"trained_epochs", m.trained_epochs}};
    ordered_json w = json::array();
    const std::int64_t H = m.hidden_dim, D = m.input_dim;
    w.push_back(tensor("wi_x", {H, D}, m.wi_x));
    w.push_back(tensor("wi_h", {H, H}, m.wi_h));
    w.push_back(tensor("bi", {H}, m.bi));
    w.push_back(tensor("wf_x", {H, D}, m.wf_x));
    w.push_back(tensor("wf_h", {H, H}, m.wf_h));
    w.push_back(tensor("bf", {H}, m.bf));
    w.push_back(tensor("wo_x", {H, D}, m.wo_x));
    w.push_back(tensor("wo_h", {H, H}, m.wo_h));
    w.push_back(tensor("bo", {H}, m.bo));
    w.push_back(tensor("wg_x", {H, D}, m.wg_x));
    w.push_back(tensor("wg_h", {H, H}, m.wg_h));
    w.push_back(tensor("bg", {H}, m.bg));
    w.push_back(tensor("w_out", {H}, m.w_out));
    w.push_back(tensor("b_out", {1}, {m.b_out}));
    j["weights"] = std::move(w);
    return j;
}

LstmModel lstm_from_json(const json& j) {
    const json& hp = j.at("hyperparams");
    int D = hp.at("input_dim").get<int>();
    int H = hp.at("hidden_dim").get<int>();
    LstmModel m = LstmModel::zeros(D, H);
    m.trained_epochs = hp.value("trained_epochs", 0);
    const json& w = j.at("weights");
    const std::int64_t h = H, d = D;
    m.wi_x = take_tensor(w, "wi_x", {h, d});
    m.wi_h = take_tensor(w, "wi_h", {h, h});
    m.bi = take_tensor(w, "bi", {h});
    m.wf_x = take_tensor(w, "wf_x", {h, d});
    m.wf_h = take_tensor(w, "wf_h", {h, h});
    m.bf = take_tensor(w, "bf", {h});
    m.wo_x = take_tensor(w, "wo_x", {h, d});
    m.wo_h = take_tensor(w, "wo_h", {h, h});
    m.bo = take_tensor(w, "bo", {h});
    m.wg_x = take_tensor(w, "wg_x", {h, d});
    m.wg_h = take_tensor(w, "wg_h", {h, h});
    m.bg = take_tensor(w, "bg", {h});
    m.w_out = take_tensor(w, "w_out", {h});
    m.b_out = take_tensor(w, "b_out", {1})[0];
    return m;
}

ordered_json mlp_to_json(const MlpModel& m) {
    ordered_json j;
    j["kind"] = "mlp";
    j["hyperparams"] = {{"sizes", m.sizes}, {"trained_epochs", m.trained_epochs}};
    ordered_json w = json::array();
    for (size_t l = 0; l < m.w.size(); ++l) {
        w.push_back(tensor("w" + std::to_string(l), {m.sizes[l + 1], m.sizes[l]}, m.w[l]));
        w.push_back(tensor("b" + std::to_string(l), {m.sizes[l + 1]}, m.b[l]));
    }
    j["weights"] = std::move(w);
    return j;
}

MlpModel mlp_from_json(const json& j) {
    const json& hp = j.at("hyperparams");
    auto sizes = hp.at("sizes").get<std::vector<int>>();
    MlpModel m = MlpModel::zeros(sizes);
    m.trained_epochs = hp.value("trained_epochs", 0);
    const json& w = j.at("weights");
    for (size_t l = 0; l + 1 < sizes.size(); ++l) {
        m.w[l] = take_tensor(w, "w" + std::to_string(l), {sizes[l + 1], sizes[l]});
        m.b[l] = take_tensor(w, "b" + std::to_string(l), {sizes[l + 1]});
    }
    return m;
}

ordered_json rf_to_json(const RandomForestModel& m) {
    ordered_json j;
    j["kind"] = "rf";
    j["hyperparams"] = {{"n_trees", m.cfg.n_trees},     {"min_leaf", m.cfg.min_leaf},
                        {"bootstrap", m.cfg.bootstrap}, {"max_depth", m.cfg.max_depth},
                        {"seed", m.cfg.seed},           {"n_features", m.n_features}};
    ordered_json w = json::array();
    for (size_t t = 0; t < m.trees.size(); ++t) {
        const auto& nodes = m.trees[t].nodes;
        std::int64_t n = static_cast<std::int64_t>(nodes.size());
        std::vector<double> feature(nodes.size()), threshold(nodes.size()), left(nodes.size()),
            right(nodes.size()), leaf(nodes.size());
        for (size_t i = 0; i < nodes.size(); ++i) {
            feature[i] = nodes[i].feature;
            threshold[i] = nodes[i].threshold;
            left[i] = nodes[i].left;
            right[i] = nodes[i].right;
            leaf[i] = nodes[i].leaf_value;
        }
        std::string p = "tree_" + std::to_string(t) + "_";
        w.push_back(tensor(p + "feature", {n}, feature));
        w.push_back(tensor(p + "threshold", {n}, threshold));
        w.push_back(tensor(p + "left", {n}, left));
        w.push_back(tensor(p + "right", {n}, right));
        w.push_back(tensor(p + "leaf", {n}, leaf));
    }
    j["weights"] = std::move(w);
    return j;
}

RandomForestModel rf_from_json(const json& j) {
    const json& hp = j.at("hyperparams");
    RandomForestModel m;
    m.cfg.n_trees = hp.at("n_trees").get<int>();
    m.cfg.min_leaf = hp.value("min_leaf", 2);
    m.cfg.bootstrap = hp.value("bootstrap", true);
    m.cfg.max_depth = hp.value("max_depth", 0);
    m.cfg.seed = hp.value("seed", std::uint64_t{0});
    m.n_features = hp.at("n_features").get<int>();
    const json& w = j.at("weights");
    m.trees.resize(m.cfg.n_trees);
    for (int t = 0; t < m.cfg.n_trees; ++t) {
        std::string p = "tree_" + std::to_string(t) + "_";
        std::int64_t n = -1;
        for (const json& tj : w)
            if (tj.at("name").get<std::string>() == p + "feature")
                n = tj.at("shape").get<std::vector<std::int64_t>>()[0];
        require(n >= 1, ErrorCode::model, "missing nodes for tree " + std::to_string(t));
        auto feature = take_tensor(w, p + "feature", {n});
        auto threshold = take_tensor(w, p + "threshold", {n});
        auto left = take_tensor(w, p + "left", {n});
        auto right = take_tensor(w, p + "right", {n});
        auto leaf = take_tensor(w, p + "leaf", {n});
        auto& nodes = m.trees[t].nodes;
        nodes.resize(n);
        for (std::int64_t i = 0; i < n; ++i) {
            nodes[i].feature = static_cast<int>(feature[i]);
            nodes[i].threshold = threshold[i];
            nodes[i].left = static_cast<int>(left[i]);
            nodes[i].right = static_cast<int>(right[i]);
            nodes[i].leaf_value = leaf[i];
            require(nodes[i].leaf_value >= 0.0 && nodes[i].leaf_value <= 1.0, ErrorCode::model,
                    "leaf fraction outside [0,1]");
        }
    }
    return m;
}

}  // namespace

ordered_json model_to_json(const DetectorModel& m) {
    return std::visit(
        [](const auto& model) -> ordered_json {
            using T = std::decay_t<decltype(model)>;
            if constexpr (std::is_same_v<T, LstmModel>) return lstm_to_json(model);
            else if constexpr (std::is_same_v<T, MlpModel>) return mlp_to_json(model);
            else return rf_to_json(model);
        },
        m);
}

DetectorModel model_from_json(const json& j) {
    std::string kind = j.at("kind").get<std::string>();
    if (kind == "lstm") return lstm_from_json(j);
    if (kind == "mlp") return mlp_from_json(j);
    if (kind == "rf") return rf_from_json(j);
    fail_model("unknown model kind '" + kind + "'");
}

void save_model(const DetectorModel& m, const std::filesystem::path& file) {
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) fail_io("cannot open " + file.string() + " for writing");
    out << model_to_json(m).dump() << '\n';
    if (!out) fail_io("write failure on " + file.string());
}

DetectorModel load_model(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) fail_io("cannot open " + file.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        fail_data(file.string() + ": " + e.what());
    }
    return model_from_json(j);
}

}  // namespace engage::learn
