#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "dfsel/dataset.hpp"
#include "dfsel/features.hpp"

namespace dfsel {

// Flat node storage; nodes[0] is the root. feature < 0 marks a leaf.
struct TreeNode {
    int feature = -1;       // position in TreeParams::feature_subset
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    Dataflow label = Dataflow::IP;
    std::array<std::int64_t, 3> class_counts{};  // samples routed here, by class
};

struct TreeParams {
    int max_depth = 9;
    int min_samples_leaf = 1;
    // global feature indices the tree may split on; defaults to the top five
    std::vector<int> feature_subset{feature::kTopFive.begin(), feature::kTopFive.end()};
    std::array<double, 3> class_weights = {1.0, 1.0, 1.0};

    void validate() const;
};

struct DecisionTree {
    std::vector<TreeNode> nodes;
    TreeParams params;
    Scaler scaler;  // the training scaler, kept so raw features can be classified

    bool empty() const { return nodes.empty(); }
    int depth() const;

    Dataflow predict_scaled(const FeatureVector& scaled) const;
    Dataflow predict_raw(const FeatureVector& raw) const { return predict_scaled(scaler.apply(raw)); }
};

// Greedy weighted-Gini CART on min-max scaled features. Candidate thresholds
// are midpoints between consecutive distinct values; equal-scoring splits
// resolve to the lower feature position, then the lower threshold; boundary
// samples (value == threshold) go left. Zero-gain splits of impure nodes are
// allowed, which is how redundant same-label subtrees can appear.
DecisionTree fit_tree(const Dataset& train, const TreeParams& params);

// Mean-decrease-in-impurity importance per global feature, normalized to sum
// to 1 over the features the tree actually splits on; all zeros for a stump.
std::array<double, feature::kCount> feature_importance(const DecisionTree& tree,
                                                       const Dataset& train);

struct CvResult {
    std::vector<double> fold_accuracy;
    double mean_accuracy = 0.0;
};

// Grouped (by pair_id) k-fold cross-validation, stratified on each group's
// majority label. Scaler and class weights are refitted on each fold's
// training side.
CvResult kfold_cv(const Dataset& d, int k, const TreeParams& params, std::uint64_t seed);

// Nested if/elif rule text for the tree truncated to depth_limit. Truncated
// internal nodes become leaves labeled by weighted majority. Leaves print as
// predicted.append('<code>').
std::string export_rules(const DecisionTree& tree, int depth_limit);

void save_tree(const DecisionTree& tree, const std::string& path);
DecisionTree load_tree(const std::string& path);

}  // namespace dfsel
