#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "learn/data.hpp"

namespace engage::learn {

struct RfConfig {
    int n_trees = 56;
    int min_leaf = 2;       // minimum samples per leaf; 1 grows trees to purity
    bool bootstrap = true;  // resample n training rows with replacement per tree
    int max_depth = 0;      // 0 = unlimited
    std::uint64_t seed = 0;
};

// Binary tree over flat arrays; feature < 0 marks a leaf carrying the
// positive-class fraction of its training samples.
struct RfNode {
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double leaf_value = 0.0;
};

struct RfTree {
    std::vector<RfNode> nodes;
};

struct RandomForestModel {
    int n_features = 0;
    RfConfig cfg;
    std::vector<RfTree> trees;
};

// Gini-impurity splits over ceil(sqrt(d)) features sampled per node.
// Per-tree seeds derive deterministically from cfg.seed.
RandomForestModel rf_train(const FlatDataset& data, const RfConfig& cfg);
RandomForestModel rf_train(const FlatDataset& data, int n_trees, std::uint64_t seed);

// Mean of leaf positive-fractions across trees.
double rf_predict(const RandomForestModel& m, std::span<const double> x);

}  // namespace engage::learn
