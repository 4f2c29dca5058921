#pragma once

#include "rankfs/dataset.hpp"

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace rankfs {

enum class SplitCriterion { Gini, Entropy };
enum class ClassWeighting { Uniform, Balanced };

struct MaxFeatures {
    enum class Rule { Sqrt, All, Fixed };
    Rule rule = Rule::Sqrt;
    std::size_t k = 0; // used by Fixed

    static MaxFeatures sqrt() { return {Rule::Sqrt, 0}; }
    static MaxFeatures all() { return {Rule::All, 0}; }
    static MaxFeatures fixed(std::size_t k) { return {Rule::Fixed, k}; }

    // Number of candidate features examined per node out of `n_features`.
    std::size_t resolve(std::size_t n_features) const;
};

struct ForestConfig {
    std::size_t n_trees = 100;
    std::size_t max_depth = 12;
    std::size_t min_samples_split = 2;
    std::size_t min_samples_leaf = 1;
    MaxFeatures max_features = MaxFeatures::sqrt();
    ClassWeighting class_weight = ClassWeighting::Uniform;
    bool bootstrap = false;
    SplitCriterion criterion = SplitCriterion::Gini;
    std::uint64_t seed = 0;

    // Throws InvalidArgument when an invariant is broken.
    void validate() const;

    // Forest used inside feature selection: min split 6, min leaf 3, sqrt,
    // balanced class weights, no bootstrap, gini.
    static ForestConfig for_selection(std::size_t max_depth = 5);
    // Standalone classifier: 100 trees, entropy, depth 12, sqrt, no bootstrap.
    static ForestConfig for_classification();
};

nlohmann::json to_json(const ForestConfig& cfg);
ForestConfig forest_config_from_json(const nlohmann::json& j);

struct TreeNode {
    // Internal nodes: feature is a column of the training matrix, samples with
    // value <= threshold go left. Leaves: feature == -1, distribution holds one
    // probability per class.
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    std::vector<double> distribution;

    bool is_leaf() const noexcept { return feature < 0; }
};

class DecisionTree {
public:
    DecisionTree() = default;
    explicit DecisionTree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {}

    const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }
    std::size_t depth() const;
    std::size_t leaf_count() const;

    // Leaf reached by row `row` of `x`.
    const TreeNode& leaf_for(const Matrix& x, Eigen::Index row) const;

private:
    std::vector<TreeNode> nodes_;
};

// Immutable result of train_forest.
struct TrainedForest {
    std::vector<DecisionTree> trees;
    // trees x features; column j refers to features[j].
    Matrix per_tree_importances;
    // Training-matrix columns the forest was allowed to use.
    std::vector<std::size_t> features;
    std::size_t n_classes = 0;
    ForestConfig config;
};

// Trains on the columns listed in `features` (indices into ds). Tree i draws
// from an RNG seeded by (cfg.seed, i), so output does not depend on the worker
// count and a forest with fewer trees is a prefix of one with more.
TrainedForest train_forest(const ExpressionDataset& ds, std::span<const std::size_t> features, const ForestConfig& cfg);

// Same, on a bare matrix with class codes in [0, n_classes).
TrainedForest train_forest(const Matrix& x, std::span<const int> labels, std::size_t n_classes,
                           std::span<const std::size_t> features, const ForestConfig& cfg);

// Mean of the per-tree leaf distributions. Rows sum to 1.
Matrix predict_proba(const TrainedForest& forest, const ExpressionDataset& ds);
Matrix predict_proba(const TrainedForest& forest, const Matrix& x);

// Per-feature mean(importance) / sd(importance) across trees, sample sd.
// When sd < 1e-12 the score is 0 for a zero mean, otherwise mean / 1e-12.
std::vector<double> z_scores(const TrainedForest& forest);
std::vector<double> z_scores(const Matrix& per_tree_importances);

nlohmann::json to_json(const TrainedForest& forest);
TrainedForest forest_from_json(const nlohmann::json& j);

} // namespace rankfs
