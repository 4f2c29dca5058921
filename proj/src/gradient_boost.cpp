#include "models.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>

namespace rankfs::detail {

namespace {

struct RegressionNode {
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0; // leaf output, shrinkage already applied
};

struct RegressionTree {
    std::size_t target_class = 0;
    std::vector<RegressionNode> nodes;

    double evaluate(const Matrix& x, Eigen::Index row) const
    {
        const RegressionNode* n = &nodes.front();
        while (n->feature >= 0) {
            n = &nodes[static_cast<std::size_t>(x(row, n->feature) <= n->threshold ? n->left : n->right)];
        }
        return n->value;
    }
};

class GradientBoostModel final : public Model {
public:
    GradientBoostModel(std::size_t n_classes, std::vector<RegressionTree> trees)
        : n_classes_(n_classes)
        , trees_(std::move(trees))
    {
    }

    Matrix predict_proba(const Matrix& x) const override
    {
        Matrix scores = Matrix::Zero(x.rows(), static_cast<Eigen::Index>(n_classes_));
        for (const auto& t : trees_) {
            const auto k = static_cast<Eigen::Index>(t.target_class);
            for (Eigen::Index i = 0; i < x.rows(); ++i) {
                scores(i, k) += t.evaluate(x, i);
            }
        }
        return softmax_rows(scores);
    }

    nlohmann::json to_json() const override
    {
        nlohmann::json trees = nlohmann::json::array();
        for (const auto& t : trees_) {
            nlohmann::json nodes = nlohmann::json::array();
            for (const auto& n : t.nodes) {
                if (n.feature < 0) {
                    nodes.push_back({{"value", n.value}});
                } else {
                    nodes.push_back({{"feature", n.feature}, {"threshold", n.threshold}, {"left", n.left}, {"right", n.right}});
                }
            }
            trees.push_back({{"class", t.target_class}, {"nodes", std::move(nodes)}});
        }
        return {{"n_classes", n_classes_}, {"trees", std::move(trees)}};
    }

private:
    std::size_t n_classes_;
    std::vector<RegressionTree> trees_;
};

struct SplitCandidate {
    bool found = false;
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
};

// Exact greedy tree growth, level by level, over presorted feature columns.
class BoostTreeBuilder {
public:
    BoostTreeBuilder(const Matrix& x, const std::vector<std::vector<std::uint32_t>>& sorted,
                     const GradientBoostParams& params)
        : x_(x)
        , sorted_(sorted)
        , params_(params)
        , node_of_(static_cast<std::size_t>(x.rows()))
    {
    }

    // Returns the tree; leaf_of()[i] is the leaf reached by training row i.
    RegressionTree build(std::span<const double> grad, std::span<const double> hess, std::size_t target_class)
    {
        const std::size_t n = node_of_.size();
        RegressionTree tree;
        tree.target_class = target_class;
        tree.nodes.emplace_back();
        std::fill(node_of_.begin(), node_of_.end(), 0);
        sum_g_.assign(1, std::accumulate(grad.begin(), grad.end(), 0.0));
        sum_h_.assign(1, std::accumulate(hess.begin(), hess.end(), 0.0));
        std::vector<int> frontier{0};

        for (std::size_t depth = 0; depth < params_.max_depth && !frontier.empty(); ++depth) {
            const std::size_t n_nodes = tree.nodes.size();
            active_.assign(n_nodes, 0);
            for (int id : frontier) {
                active_[static_cast<std::size_t>(id)] = 1;
            }
            best_.assign(n_nodes, SplitCandidate{});
            acc_g_.resize(n_nodes);
            acc_h_.resize(n_nodes);
            last_.resize(n_nodes);
            seen_.resize(n_nodes);

            for (std::size_t f = 0; f < sorted_.size(); ++f) {
                for (int id : frontier) {
                    const auto u = static_cast<std::size_t>(id);
                    acc_g_[u] = 0.0;
                    acc_h_[u] = 0.0;
                    seen_[u] = 0;
                }
                const auto col = static_cast<Eigen::Index>(f);
                for (std::uint32_t i : sorted_[f]) {
                    const auto nd = static_cast<std::size_t>(node_of_[i]);
                    if (nd >= n_nodes || !active_[nd]) {
                        continue;
                    }
                    const double v = x_(static_cast<Eigen::Index>(i), col);
                    if (seen_[nd] && v > last_[nd]) {
                        consider(nd, static_cast<int>(f), last_[nd], v);
                    }
                    acc_g_[nd] += grad[i];
                    acc_h_[nd] += hess[i];
                    last_[nd] = v;
                    seen_[nd] = 1;
                }
            }

            std::vector<int> next;
            for (int id : frontier) {
                const auto u = static_cast<std::size_t>(id);
                const SplitCandidate split = best_[u];
                if (!split.found) {
                    continue;
                }
                const int left = static_cast<int>(tree.nodes.size());
                tree.nodes.emplace_back();
                tree.nodes.emplace_back();
                auto& node = tree.nodes[u];
                node.feature = split.feature;
                node.threshold = split.threshold;
                node.left = left;
                node.right = left + 1;
                sum_g_.resize(tree.nodes.size(), 0.0);
                sum_h_.resize(tree.nodes.size(), 0.0);
                next.push_back(left);
                next.push_back(left + 1);
            }
            if (next.empty()) {
                break;
            }
            for (std::size_t i = 0; i < n; ++i) {
                const auto& node = tree.nodes[static_cast<std::size_t>(node_of_[i])];
                if (node.feature < 0) {
                    continue;
                }
                const double v = x_(static_cast<Eigen::Index>(i), node.feature);
                const int child = v <= node.threshold ? node.left : node.right;
                node_of_[i] = child;
                sum_g_[static_cast<std::size_t>(child)] += grad[i];
                sum_h_[static_cast<std::size_t>(child)] += hess[i];
            }
            frontier = std::move(next);
        }

        for (std::size_t id = 0; id < tree.nodes.size(); ++id) {
            auto& node = tree.nodes[id];
            if (node.feature < 0) {
                node.value = -sum_g_[id] / (sum_h_[id] + params_.lambda) * params_.learning_rate;
            }
        }
        return tree;
    }

    const std::vector<int>& leaf_of() const noexcept { return node_of_; }

private:
    double score(double g, double h) const { return g * g / (h + params_.lambda); }

    void consider(std::size_t node, int feature, double below, double above)
    {
        const double gl = acc_g_[node];
        const double hl = acc_h_[node];
        const double gr = sum_g_[node] - gl;
        const double hr = sum_h_[node] - hl;
        if (hl < params_.min_child_weight || hr < params_.min_child_weight) {
            return;
        }
        const double gain = 0.5 * (score(gl, hl) + score(gr, hr) - score(sum_g_[node], sum_h_[node]));
        if (!(gain > 1e-12)) {
            return;
        }
        auto& best = best_[node];
        if (!best.found || gain > best.gain) {
            double threshold = below + (above - below) / 2.0;
            if (!(threshold < above)) {
                threshold = below;
            }
            best = {true, feature, threshold, gain};
        }
    }

    const Matrix& x_;
    const std::vector<std::vector<std::uint32_t>>& sorted_;
    const GradientBoostParams& params_;
    std::vector<int> node_of_;
    std::vector<double> sum_g_;
    std::vector<double> sum_h_;
    std::vector<char> active_;
    std::vector<SplitCandidate> best_;
    std::vector<double> acc_g_;
    std::vector<double> acc_h_;
    std::vector<double> last_;
    std::vector<char> seen_;
};

double softmax_loss(const Matrix& prob, std::span<const int> labels)
{
    double loss = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        loss -= std::log(std::max(prob(static_cast<Eigen::Index>(i), labels[i]), 1e-300));
    }
    return loss;
}

} // namespace

// Softmax boosting: each round computes gradients p - y and hessians
// 2p(1 - p) from the current scores, then fits one tree per class.
Fit fit_gradient_boost(const Matrix& x, std::span<const int> labels, std::size_t n_classes,
                       const GradientBoostParams& params)
{
    const auto n = static_cast<std::size_t>(x.rows());
    std::vector<std::vector<std::uint32_t>> sorted(static_cast<std::size_t>(x.cols()));
    for (std::size_t f = 0; f < sorted.size(); ++f) {
        auto& idx = sorted[f];
        idx.resize(n);
        std::iota(idx.begin(), idx.end(), std::uint32_t{0});
        const auto col = static_cast<Eigen::Index>(f);
        std::stable_sort(idx.begin(), idx.end(), [&](std::uint32_t a, std::uint32_t b) { return x(a, col) < x(b, col); });
    }

    Fit fit;
    Matrix scores = Matrix::Zero(x.rows(), static_cast<Eigen::Index>(n_classes));
    Matrix prob = softmax_rows(scores);
    fit.loss_history.push_back(softmax_loss(prob, labels));

    std::vector<RegressionTree> trees;
    trees.reserve(params.n_rounds * n_classes);
    std::vector<double> grad(n);
    std::vector<double> hess(n);
    BoostTreeBuilder builder(x, sorted, params);
    for (std::size_t round = 0; round < params.n_rounds; ++round) {
        Matrix update = Matrix::Zero(x.rows(), static_cast<Eigen::Index>(n_classes));
        for (std::size_t k = 0; k < n_classes; ++k) {
            const auto kk = static_cast<Eigen::Index>(k);
            for (std::size_t i = 0; i < n; ++i) {
                const double p = prob(static_cast<Eigen::Index>(i), kk);
                grad[i] = p - (static_cast<std::size_t>(labels[i]) == k ? 1.0 : 0.0);
                hess[i] = std::max(2.0 * p * (1.0 - p), 1e-16);
            }
            RegressionTree tree = builder.build(grad, hess, k);
            const auto& leaf = builder.leaf_of();
            for (std::size_t i = 0; i < n; ++i) {
                update(static_cast<Eigen::Index>(i), kk) = tree.nodes[static_cast<std::size_t>(leaf[i])].value;
            }
            trees.push_back(std::move(tree));
        }
        scores += update;
        prob = softmax_rows(scores);
        fit.loss_history.push_back(softmax_loss(prob, labels));
    }
    fit.model = std::make_shared<GradientBoostModel>(n_classes, std::move(trees));
    return fit;
}

std::shared_ptr<const Model> gradient_boost_from_json(const nlohmann::json& j)
{
    std::vector<RegressionTree> trees;
    for (const auto& jt : j.at("trees")) {
        RegressionTree t;
        t.target_class = jt.at("class").get<std::size_t>();
        for (const auto& jn : jt.at("nodes")) {
            RegressionNode n;
            if (jn.contains("value")) {
                n.value = jn.at("value").get<double>();
            } else {
                n.feature = jn.at("feature").get<int>();
                n.threshold = jn.at("threshold").get<double>();
                n.left = jn.at("left").get<int>();
                n.right = jn.at("right").get<int>();
            }
            t.nodes.push_back(n);
        }
        trees.push_back(std::move(t));
    }
    return std::make_shared<GradientBoostModel>(j.at("n_classes").get<std::size_t>(), std::move(trees));
}

} // namespace rankfs::detail
