#include "rankfs/forest.hpp"

#include "rankfs/error.hpp"
#include "rankfs/parallel.hpp"
#include "rankfs/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <utility>

namespace rankfs {

std::size_t MaxFeatures::resolve(std::size_t n_features) const
{
    std::size_t k = n_features;
    switch (rule) {
    case Rule::Sqrt: k = static_cast<std::size_t>(std::sqrt(static_cast<double>(n_features))); break;
    case Rule::All: k = n_features; break;
    case Rule::Fixed: k = this->k; break;
    }
    return std::clamp<std::size_t>(k, 1, std::max<std::size_t>(1, n_features));
}

void ForestConfig::validate() const
{
    if (n_trees < 1) throw InvalidArgument("forest: n_trees must be >= 1");
    if (max_depth < 1) throw InvalidArgument("forest: max_depth must be >= 1");
    if (min_samples_split < 2) throw InvalidArgument("forest: min_samples_split must be >= 2");
    if (min_samples_leaf < 1) throw InvalidArgument("forest: min_samples_leaf must be >= 1");
    if (max_features.rule == MaxFeatures::Rule::Fixed && max_features.k < 1) {
        throw InvalidArgument("forest: fixed max_features must be >= 1");
    }
}

ForestConfig ForestConfig::for_selection(std::size_t max_depth)
{
    ForestConfig cfg;
    cfg.n_trees = 100;
    cfg.max_depth = max_depth;
    cfg.min_samples_split = 6;
    cfg.min_samples_leaf = 3;
    cfg.max_features = MaxFeatures::sqrt();
    cfg.class_weight = ClassWeighting::Balanced;
    cfg.bootstrap = false;
    cfg.criterion = SplitCriterion::Gini;
    return cfg;
}

ForestConfig ForestConfig::for_classification()
{
    ForestConfig cfg;
    cfg.n_trees = 100;
    cfg.max_depth = 12;
    cfg.min_samples_split = 2;
    cfg.min_samples_leaf = 1;
    cfg.max_features = MaxFeatures::sqrt();
    cfg.class_weight = ClassWeighting::Uniform;
    cfg.bootstrap = false;
    cfg.criterion = SplitCriterion::Entropy;
    return cfg;
}

nlohmann::json to_json(const ForestConfig& cfg)
{
    nlohmann::json mf;
    switch (cfg.max_features.rule) {
    case MaxFeatures::Rule::Sqrt: mf = "sqrt"; break;
    case MaxFeatures::Rule::All: mf = "all"; break;
    case MaxFeatures::Rule::Fixed: mf = cfg.max_features.k; break;
    }
    return nlohmann::json{
        {"n_trees", cfg.n_trees},
        {"max_depth", cfg.max_depth},
        {"min_samples_split", cfg.min_samples_split},
        {"min_samples_leaf", cfg.min_samples_leaf},
        {"max_features", mf},
        {"class_weight", cfg.class_weight == ClassWeighting::Balanced ? "balanced" : "uniform"},
        {"bootstrap", cfg.bootstrap},
        {"criterion", cfg.criterion == SplitCriterion::Entropy ? "entropy" : "gini"},
        {"seed", cfg.seed},
    };
}

ForestConfig forest_config_from_json(const nlohmann::json& j)
{
    ForestConfig cfg;
    cfg.n_trees = j.value("n_trees", cfg.n_trees);
    cfg.max_depth = j.value("max_depth", cfg.max_depth);
    cfg.min_samples_split = j.value("min_samples_split", cfg.min_samples_split);
    cfg.min_samples_leaf = j.value("min_samples_leaf", cfg.min_samples_leaf);
    if (j.contains("max_features")) {
        const auto& mf = j.at("max_features");
        if (mf.is_number_integer()) {
            cfg.max_features = MaxFeatures::fixed(mf.get<std::size_t>());
        } else if (mf == "sqrt") {
            cfg.max_features = MaxFeatures::sqrt();
        } else if (mf == "all") {
            cfg.max_features = MaxFeatures::all();
        } else {
            throw InvalidArgument("forest: unknown max_features rule");
        }
    }
    if (j.contains("class_weight")) {
        const auto w = j.at("class_weight").get<std::string>();
        if (w != "balanced" && w != "uniform") throw InvalidArgument("forest: unknown class_weight '" + w + "'");
        cfg.class_weight = w == "balanced" ? ClassWeighting::Balanced : ClassWeighting::Uniform;
    }
    cfg.bootstrap = j.value("bootstrap", cfg.bootstrap);
    if (j.contains("criterion")) {
        const auto c = j.at("criterion").get<std::string>();
        if (c != "gini" && c != "entropy") throw InvalidArgument("forest: unknown criterion '" + c + "'");
        cfg.criterion = c == "entropy" ? SplitCriterion::Entropy : SplitCriterion::Gini;
    }
    cfg.seed = j.value("seed", cfg.seed);
    cfg.validate();
    return cfg;
}

std::size_t DecisionTree::depth() const
{
    if (nodes_.empty()) {
        return 0;
    }
    std::size_t best = 0;
    std::vector<std::pair<int, std::size_t>> stack{{0, 0}};
    while (!stack.empty()) {
        auto [id, d] = stack.back();
        stack.pop_back();
        const auto& n = nodes_[static_cast<std::size_t>(id)];
        best = std::max(best, d);
        if (!n.is_leaf()) {
            stack.emplace_back(n.left, d + 1);
            stack.emplace_back(n.right, d + 1);
        }
    }
    return best;
}

std::size_t DecisionTree::leaf_count() const
{
    return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

const TreeNode& DecisionTree::leaf_for(const Matrix& x, Eigen::Index row) const
{
    const TreeNode* node = &nodes_.front();
    while (!node->is_leaf()) {
        const double v = x(row, node->feature);
        node = &nodes_[static_cast<std::size_t>(v <= node->threshold ? node->left : node->right)];
    }
    return *node;
}

namespace {

double impurity(std::span<const double> counts, double total, SplitCriterion criterion)
{
    if (total <= 0.0) {
        return 0.0;
    }
    if (criterion == SplitCriterion::Gini) {
        double sq = 0.0;
        for (double c : counts) {
            sq += c * c;
        }
        return 1.0 - sq / (total * total);
    }
    double h = 0.0;
    for (double c : counts) {
        if (c > 0.0) {
            const double p = c / total;
            h -= p * std::log2(p);
        }
    }
    return h;
}

struct SplitChoice {
    bool found = false;
    std::size_t position = 0; // index into the tree's feature list
    std::size_t column = 0;
    double threshold = 0.0;
    double gain = 0.0;
};

class TreeGrower {
public:
    TreeGrower(const Matrix& x, std::span<const int> labels, std::size_t n_classes,
               std::span<const std::size_t> features, std::span<const double> class_weights,
               const ForestConfig& cfg, Rng& rng)
        : x_(x)
        , labels_(labels)
        , n_classes_(n_classes)
        , features_(features)
        , class_weights_(class_weights)
        , cfg_(cfg)
        , rng_(rng)
        , n_candidates_(cfg.max_features.resolve(features.size()))
        , importance_(features.size(), 0.0)
        , order_(features.size())
    {
    }

    DecisionTree grow(std::vector<std::size_t> samples)
    {
        build(samples, 0);
        double total = std::accumulate(importance_.begin(), importance_.end(), 0.0);
        if (total > 0.0) {
            for (double& v : importance_) {
                v /= total;
            }
        }
        return DecisionTree(std::move(nodes_));
    }

    const std::vector<double>& importance() const noexcept { return importance_; }

private:
    std::vector<double> class_counts(std::span<const std::size_t> samples) const
    {
        std::vector<double> counts(n_classes_, 0.0);
        for (std::size_t s : samples) {
            const auto c = static_cast<std::size_t>(labels_[s]);
            counts[c] += class_weights_[c];
        }
        return counts;
    }

    int build(std::vector<std::size_t>& samples, std::size_t depth)
    {
        const int id = static_cast<int>(nodes_.size());
        nodes_.emplace_back();

        auto counts = class_counts(samples);
        const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
        const double node_impurity = impurity(counts, total, cfg_.criterion);

        SplitChoice split;
        if (depth < cfg_.max_depth && samples.size() >= cfg_.min_samples_split
            && samples.size() >= 2 * cfg_.min_samples_leaf && node_impurity > 1e-15) {
            split = find_split(samples, counts, total, node_impurity);
        }

        if (!split.found) {
            for (double& c : counts) {
                c = total > 0.0 ? c / total : 0.0;
            }
            nodes_[static_cast<std::size_t>(id)].distribution = std::move(counts);
            return id;
        }

        importance_[split.position] += split.gain;
        std::vector<std::size_t> left;
        std::vector<std::size_t> right;
        const auto col = static_cast<Eigen::Index>(split.column);
        for (std::size_t s : samples) {
            (x_(static_cast<Eigen::Index>(s), col) <= split.threshold ? left : right).push_back(s);
        }
        samples.clear();
        samples.shrink_to_fit();

        const int l = build(left, depth + 1);
        const int r = build(right, depth + 1);
        auto& node = nodes_[static_cast<std::size_t>(id)];
        node.feature = static_cast<int>(split.column);
        node.threshold = split.threshold;
        node.left = l;
        node.right = r;
        return id;
    }

    // Candidate features are drawn without replacement. As with the usual
    // random-forest rule, drawing continues past the quota until at least one
    // valid split is found or the features run out.
    SplitChoice find_split(std::span<const std::size_t> samples, std::span<const double> counts,
                           double total, double node_impurity)
    {
        std::iota(order_.begin(), order_.end(), std::size_t{0});
        SplitChoice best;
        const std::size_t n_features = features_.size();
        for (std::size_t t = 0; t < n_features; ++t) {
            if (t >= n_candidates_ && best.found) {
                break;
            }
            const std::size_t j = t + rng_.index(n_features - t);
            std::swap(order_[t], order_[j]);
            evaluate_feature(order_[t], samples, counts, total, node_impurity, best);
        }
        return best;
    }

    void evaluate_feature(std::size_t position, std::span<const std::size_t> samples,
                          std::span<const double> counts, double total, double node_impurity,
                          SplitChoice& best)
    {
        const std::size_t column = features_[position];
        const auto col = static_cast<Eigen::Index>(column);
        sorted_.clear();
        for (std::size_t s : samples) {
            sorted_.emplace_back(x_(static_cast<Eigen::Index>(s), col), s);
        }
        std::sort(sorted_.begin(), sorted_.end());
        if (sorted_.front().first == sorted_.back().first) {
            return;
        }

        left_.assign(n_classes_, 0.0);
        right_.assign(counts.begin(), counts.end());
        double left_total = 0.0;
        const std::size_t n = sorted_.size();
        const double min_gain = 1e-12 * std::max(total, 1.0);
        for (std::size_t p = 0; p + 1 < n; ++p) {
            const auto c = static_cast<std::size_t>(labels_[sorted_[p].second]);
            const double w = class_weights_[c];
            left_[c] += w;
            right_[c] -= w;
            left_total += w;
            const double a = sorted_[p].first;
            const double b = sorted_[p + 1].first;
            if (a == b) {
                continue;
            }
            const std::size_t n_left = p + 1;
            if (n_left < cfg_.min_samples_leaf || n - n_left < cfg_.min_samples_leaf) {
                continue;
            }
            const double right_total = std::max(0.0, total - left_total);
            const double gain = total * node_impurity - weighted_impurity(left_, left_total)
                - weighted_impurity(right_, right_total);
            if (!(gain > min_gain)) {
                continue;
            }
            double threshold = a + (b - a) / 2.0;
            if (!(threshold < b)) {
                threshold = a;
            }
            const bool better = !best.found || gain > best.gain
                || (gain == best.gain && (column < best.column || (column == best.column && threshold < best.threshold)));
            if (better) {
                best = {true, position, column, threshold, gain};
            }
        }
    }

    // total * impurity; Gini reduces to total - sum(c^2) / total.
    double weighted_impurity(std::span<const double> counts, double total) const
    {
        if (total <= 0.0) {
            return 0.0;
        }
        if (cfg_.criterion == SplitCriterion::Gini) {
            double sq = 0.0;
            for (double c : counts) {
                sq += c * c;
            }
            return total - sq / total;
        }
        return total * impurity(counts, total, cfg_.criterion);
    }

    const Matrix& x_;
    std::span<const int> labels_;
    std::size_t n_classes_;
    std::span<const std::size_t> features_;
    std::span<const double> class_weights_;
    const ForestConfig& cfg_;
    Rng& rng_;
    std::size_t n_candidates_;
    std::vector<double> importance_;
    std::vector<std::size_t> order_;
    std::vector<TreeNode> nodes_;
    std::vector<std::pair<double, std::size_t>> sorted_;
    std::vector<double> left_;
    std::vector<double> right_;
};

} // namespace

TrainedForest train_forest(const Matrix& x, std::span<const int> labels, std::size_t n_classes,
                           std::span<const std::size_t> features, const ForestConfig& cfg)
{
    cfg.validate();
    if (features.empty()) {
        throw InvalidArgument("train_forest: feature subset is empty");
    }
    if (static_cast<std::size_t>(x.rows()) != labels.size()) {
        throw InvalidArgument("train_forest: label count does not match rows");
    }
    for (std::size_t f : features) {
        if (f >= static_cast<std::size_t>(x.cols())) {
            throw InvalidArgument("train_forest: feature index out of range");
        }
    }
    std::vector<std::size_t> class_count(n_classes, 0);
    for (int y : labels) {
        if (y < 0 || static_cast<std::size_t>(y) >= n_classes) {
            throw InvalidArgument("train_forest: label code out of range");
        }
        ++class_count[static_cast<std::size_t>(y)];
    }
    const auto present = static_cast<std::size_t>(std::count_if(class_count.begin(), class_count.end(), [](std::size_t c) { return c > 0; }));
    if (present < 2) {
        throw InvalidArgument("train_forest: need at least two classes");
    }

    // Balanced weights: n / (n_present_classes * count_c).
    std::vector<double> weights(n_classes, 1.0);
    if (cfg.class_weight == ClassWeighting::Balanced) {
        const double n = static_cast<double>(labels.size());
        for (std::size_t c = 0; c < n_classes; ++c) {
            weights[c] = class_count[c] > 0 ? n / (static_cast<double>(present) * static_cast<double>(class_count[c])) : 0.0;
        }
    }

    TrainedForest forest;
    forest.trees.resize(cfg.n_trees);
    forest.per_tree_importances = Matrix::Zero(static_cast<Eigen::Index>(cfg.n_trees), static_cast<Eigen::Index>(features.size()));
    forest.features.assign(features.begin(), features.end());
    forest.n_classes = n_classes;
    forest.config = cfg;

    const std::size_t n_rows = labels.size();
    parallel_for(cfg.n_trees, [&](std::size_t t) {
        Rng rng(derive_seed(cfg.seed, {t}));
        std::vector<std::size_t> samples(n_rows);
        if (cfg.bootstrap) {
            for (auto& s : samples) {
                s = rng.index(n_rows);
            }
            std::sort(samples.begin(), samples.end());
        } else {
            std::iota(samples.begin(), samples.end(), std::size_t{0});
        }
        TreeGrower grower(x, labels, n_classes, forest.features, weights, cfg, rng);
        forest.trees[t] = grower.grow(std::move(samples));
        const auto& imp = grower.importance();
        for (std::size_t j = 0; j < imp.size(); ++j) {
            forest.per_tree_importances(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j)) = imp[j];
        }
    });
    return forest;
}

TrainedForest train_forest(const ExpressionDataset& ds, std::span<const std::size_t> features, const ForestConfig& cfg)
{
    return train_forest(ds.values(), ds.labels(), ds.n_classes(), features, cfg);
}

Matrix predict_proba(const TrainedForest& forest, const Matrix& x)
{
    for (std::size_t f : forest.features) {
        if (f >= static_cast<std::size_t>(x.cols())) {
            throw InvalidArgument("predict_proba: input lacks feature column " + std::to_string(f));
        }
    }
    if (forest.trees.empty()) {
        throw InvalidArgument("predict_proba: forest has no trees");
    }
    Matrix out = Matrix::Zero(x.rows(), static_cast<Eigen::Index>(forest.n_classes));
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        for (const auto& tree : forest.trees) {
            const auto& dist = tree.leaf_for(x, i).distribution;
            for (std::size_t c = 0; c < dist.size(); ++c) {
                out(i, static_cast<Eigen::Index>(c)) += dist[c];
            }
        }
        const double s = out.row(i).sum();
        out.row(i) /= s;
    }
    return out;
}

Matrix predict_proba(const TrainedForest& forest, const ExpressionDataset& ds)
{
    return predict_proba(forest, ds.values());
}

std::vector<double> z_scores(const Matrix& imp)
{
    if (imp.rows() < 2) {
        throw InvalidArgument("z_scores: need at least two trees");
    }
    const double n = static_cast<double>(imp.rows());
    std::vector<double> z(static_cast<std::size_t>(imp.cols()));
    for (Eigen::Index j = 0; j < imp.cols(); ++j) {
        const double mean = imp.col(j).mean();
        const double ss = (imp.col(j).array() - mean).square().sum();
        const double sd = std::sqrt(ss / (n - 1.0));
        constexpr double floor = 1e-12;
        double value = 0.0;
        if (sd < floor) {
            value = std::abs(mean) < floor ? 0.0 : mean / floor;
        } else {
            value = mean / sd;
        }
        z[static_cast<std::size_t>(j)] = value;
    }
    return z;
}

std::vector<double> z_scores(const TrainedForest& forest)
{
    return z_scores(forest.per_tree_importances);
}

nlohmann::json to_json(const TrainedForest& forest)
{
    nlohmann::json trees = nlohmann::json::array();
    for (const auto& tree : forest.trees) {
        nlohmann::json nodes = nlohmann::json::array();
        for (const auto& n : tree.nodes()) {
            if (n.is_leaf()) {
                nodes.push_back({{"leaf", n.distribution}});
            } else {
                nodes.push_back({{"feature", n.feature}, {"threshold", n.threshold}, {"left", n.left}, {"right", n.right}});
            }
        }
        trees.push_back(std::move(nodes));
    }
    nlohmann::json importances = nlohmann::json::array();
    for (Eigen::Index t = 0; t < forest.per_tree_importances.rows(); ++t) {
        std::vector<double> row(forest.per_tree_importances.row(t).begin(), forest.per_tree_importances.row(t).end());
        importances.push_back(row);
    }
    return nlohmann::json{
        {"config", to_json(forest.config)},
        {"n_classes", forest.n_classes},
        {"features", forest.features},
        {"trees", std::move(trees)},
        {"per_tree_importances", std::move(importances)},
    };
}

TrainedForest forest_from_json(const nlohmann::json& j)
{
    TrainedForest forest;
    forest.config = forest_config_from_json(j.at("config"));
    forest.n_classes = j.at("n_classes").get<std::size_t>();
    forest.features = j.at("features").get<std::vector<std::size_t>>();
    for (const auto& jt : j.at("trees")) {
        std::vector<TreeNode> nodes;
        for (const auto& jn : jt) {
            TreeNode n;
            if (jn.contains("leaf")) {
                n.distribution = jn.at("leaf").get<std::vector<double>>();
            } else {
                n.feature = jn.at("feature").get<int>();
                n.threshold = jn.at("threshold").get<double>();
                n.left = jn.at("left").get<int>();
                n.right = jn.at("right").get<int>();
            }
            nodes.push_back(std::move(n));
        }
        forest.trees.emplace_back(std::move(nodes));
    }
    const auto& imp = j.at("per_tree_importances");
    forest.per_tree_importances = Matrix::Zero(static_cast<Eigen::Index>(imp.size()), static_cast<Eigen::Index>(forest.features.size()));
    for (std::size_t t = 0; t < imp.size(); ++t) {
        for (std::size_t f = 0; f < imp[t].size(); ++f) {
            forest.per_tree_importances(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(f)) = imp[t][f].get<double>();
        }
    }
    return forest;
}

} // namespace rankfs
