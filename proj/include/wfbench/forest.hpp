#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "wfbench/features.hpp"

namespace wfbench {

struct ForestParams {
    int n_trees = 100;
    int max_features = 0;        // 0 = sqrt(feature count)
    int min_samples_leaf = 1;
    int max_depth = 0;           // 0 = unlimited
    std::uint64_t seed = 0;
    int threads = 0;             // 0 = hardware concurrency
};

// Axis-aligned decision tree over Gini impurity. Internal nodes test
// value[feature] <= threshold; leaves carry a class index.
struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    int klass = -1;
};

struct Tree {
    std::vector<TreeNode> nodes;  // node 0 is the root

    int predict(const std::vector<double>& row) const;
};

struct Forest {
    std::vector<Tree> trees;
    std::vector<std::string> class_list;  // sorted distinct labels
    std::string schema_version;
    std::size_t n_features = 0;
    std::vector<double> importance;       // per feature, sums to 1 (or all 0)
    // accuracy over training samples with at least one out-of-bag vote
    std::optional<double> oob_accuracy;
};

struct Prediction {
    std::string label;
    std::vector<double> votes;  // per class, sums to 1
};

// Trains a forest deterministically: tree i draws all randomness from
// mix_seed(params.seed, i) (bootstrap first, then per-node feature
// subsets), so the result is independent of thread scheduling. Splits
// maximize Gini gain over a max_features-sized random feature subset;
// gain ties prefer the lowest feature index, then the lowest threshold.
Forest train(const FeatureMatrix& matrix, const ForestParams& params);

// Majority vote of the trees; vote ties prefer the earlier class in
// class_list.
Prediction predict(const Forest& forest, const FeatureVector& vector);
Prediction predict_row(const Forest& forest, const std::vector<double>& row);

// Mean decrease in Gini impurity, weighted by node sample counts,
// averaged over trees and normalized to sum 1.
std::map<std::string, double> feature_importance(const Forest& forest);

}  // namespace wfbench
