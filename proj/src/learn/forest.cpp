#include "learn/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "util/error.hpp"

namespace engage::learn {

namespace {

struct SplitResult {
    bool found = false;
    int feature = -1;
    double threshold = 0.0;
    double impurity_decrease = 0.0;
};

double gini(size_t pos, size_t n) {
    if (n == 0) return 0.0;
    double p = static_cast<double>(pos) / static_cast<double>(n);
    return 2.0 * p * (1.0 - p);
}

// Best gini split over the sampled features; children must keep >= min_leaf rows.
SplitResult best_split(const FlatDataset& d, const std::vector<size_t>& rows,
                       const std::vector<int>& features, int min_leaf) {
    SplitResult best;
    size_t n = rows.size();
    size_t pos_total = 0;
    for (size_t r : rows) pos_total += static_cast<size_t>(d.y[r]);
    double parent = gini(pos_total, n);

    std::vector<std::pair<double, int>> vals(n);
    for (int f : features) {
        for (size_t i = 0; i < n; ++i) vals[i] = {d.x[rows[i]][f], d.y[rows[i]]};
        std::sort(vals.begin(), vals.end());
        size_t pos_left = 0;
        for (size_t i = 0; i + 1 < n; ++i) {
            pos_left += static_cast<size_t>(vals[i].second);
            if (vals[i].first == vals[i + 1].first) continue;
            size_t nl = i + 1, nr = n - nl;
            if (nl < static_cast<size_t>(min_leaf) || nr < static_cast<size_t>(min_leaf)) continue;
            double wl = static_cast<double>(nl) / static_cast<double>(n);
            double wr = 1.0 - wl;
            double dec = parent - wl * gini(pos_left, nl) - wr * gini(pos_total - pos_left, nr);
            if (dec > best.impurity_decrease + 1e-15) {
                best.found = true;
                best.feature = f;
                best.threshold = (vals[i].first + vals[i + 1].first) / 2.0;
                best.impurity_decrease = dec;
            }
        }
    }
    return best;
}

int grow(const FlatDataset& d, std::vector<size_t>& rows, const RfConfig& cfg, int depth,
         int n_sub, std::mt19937_64& rng, RfTree& tree) {
    size_t pos = 0;
    for (size_t r : rows) pos += static_cast<size_t>(d.y[r]);

    int node_id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    tree.nodes[node_id].leaf_value = rows.empty()
                                         ? 0.0
                                         : static_cast<double>(pos) / static_cast<double>(rows.size());

    bool pure = pos == 0 || pos == rows.size();
    bool depth_stop = cfg.max_depth > 0 && depth >= cfg.max_depth;
    if (pure || depth_stop || rows.size() < 2 * static_cast<size_t>(std::max(1, cfg.min_leaf)))
        return node_id;

    // Sample n_sub distinct feature indices for this node.
    std::vector<int> candidates(d.dim);
    std::iota(candidates.begin(), candidates.end(), 0);
    for (int i = 0; i < n_sub; ++i) {
        std::uniform_int_distribution<int> pick(i, d.dim - 1);
        std::swap(candidates[i], candidates[pick(rng)]);
    }
    candidates.resize(n_sub);
    std::sort(candidates.begin(), candidates.end());

    SplitResult split = best_split(d, rows, candidates, std::max(1, cfg.min_leaf));
    if (!split.found) return node_id;

    std::vector<size_t> left_rows, right_rows;
    for (size_t r : rows)
        (d.x[r][split.feature] <= split.threshold ? left_rows : right_rows).push_back(r);
    rows.clear();
    rows.shrink_to_fit();

    int left = grow(d, left_rows, cfg, depth + 1, n_sub, rng, tree);
    int right = grow(d, right_rows, cfg, depth + 1, n_sub, rng, tree);
    tree.nodes[node_id].feature = split.feature;
    tree.nodes[node_id].threshold = split.threshold;
    tree.nodes[node_id].left = left;
    tree.nodes[node_id].right = right;
    return node_id;
}

}  // namespace

RandomForestModel rf_train(const FlatDataset& data, const RfConfig& cfg) {
    require(cfg.n_trees >= 1, ErrorCode::usage, "n_trees must be >= 1");
    require(!data.x.empty(), ErrorCode::data, "empty training dataset");
    require(data.x.size() == data.y.size(), ErrorCode::data, "dataset x/y size mismatch");
    require(data.dim >= 1, ErrorCode::data, "dataset has no features");
    size_t pos = 0;
    for (int y : data.y) {
        require(y == 0 || y == 1, ErrorCode::data, "labels must be 0/1");
        pos += static_cast<size_t>(y);
    }
    require(pos > 0 && pos < data.y.size(), ErrorCode::data,
            "single-class dataset: both classes must be present");

    RandomForestModel model;
    model.n_features = data.dim;
    model.cfg = cfg;
    int n_sub = std::max(1, static_cast<int>(std::ceil(std::sqrt(static_cast<double>(data.dim)))));

    std::mt19937_64 master(cfg.seed);
    std::vector<std::uint64_t> tree_seeds(cfg.n_trees);
    for (auto& s : tree_seeds) s = master();

    model.trees.resize(cfg.n_trees);
    for (int t = 0; t < cfg.n_trees; ++t) {
        std::mt19937_64 rng(tree_seeds[t]);
        std::vector<size_t> rows;
        rows.reserve(data.x.size());
        if (cfg.bootstrap) {
            std::uniform_int_distribution<size_t> pick(0, data.x.size() - 1);
            for (size_t i = 0; i < data.x.size(); ++i) rows.push_back(pick(rng));
        } else {
            rows.resize(data.x.size());
            std::iota(rows.begin(), rows.end(), 0);
        }
        grow(data, rows, cfg, 0, n_sub, rng, model.trees[t]);
    }
    return model;
}

RandomForestModel rf_train(const FlatDataset& data, int n_trees, std::uint64_t seed) {
    RfConfig cfg;
    cfg.n_trees = n_trees;
    cfg.seed = seed;
    return rf_train(data, cfg);
}

double rf_predict(const RandomForestModel& m, std::span<const double> x) {
    require(static_cast<int>(x.size()) == m.n_features, ErrorCode::model,
            "feature dim " + std::to_string(x.size()) + " != forest feature count " +
                std::to_string(m.n_features));
    require(!m.trees.empty(), ErrorCode::model, "empty forest");
    double sum = 0.0;
    for (const RfTree& tree : m.trees) {
        int node = 0;
        while (tree.nodes[node].feature >= 0) {
            const RfNode& nd = tree.nodes[node];
            node = x[nd.feature] <= nd.threshold ? nd.left : nd.right;
        }
        sum += tree.nodes[node].leaf_value;
    }
    return sum / static_cast<double>(m.trees.size());
}

}  // namespace engage::learn
