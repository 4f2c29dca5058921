#include "models.hpp"

#include "rankfs/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace rankfs::detail {

namespace {

struct PairMachine {
    int positive = 0; // wins when the decision value is >= 0
    int negative = 0;
    Eigen::VectorXd weights; // features followed by bias
};

// One-vs-one linear machines; probabilities are each class's share of the
// pairwise wins.
class LinearSvmModel final : public Model {
public:
    LinearSvmModel(std::size_t n_classes, std::vector<PairMachine> machines)
        : n_classes_(n_classes)
        , machines_(std::move(machines))
    {
    }

    Matrix predict_proba(const Matrix& x) const override
    {
        const Eigen::Index d = x.cols();
        Matrix wins = Matrix::Zero(x.rows(), static_cast<Eigen::Index>(n_classes_));
        for (const auto& m : machines_) {
            const Eigen::VectorXd decision = (x * m.weights.head(d)).array() + m.weights(d);
            for (Eigen::Index i = 0; i < x.rows(); ++i) {
                wins(i, decision(i) >= 0.0 ? m.positive : m.negative) += 1.0;
            }
        }
        if (machines_.empty()) {
            wins.setConstant(1.0);
        }
        for (Eigen::Index i = 0; i < wins.rows(); ++i) {
            wins.row(i) /= wins.row(i).sum();
        }
        return wins;
    }

    nlohmann::json to_json() const override
    {
        nlohmann::json ms = nlohmann::json::array();
        for (const auto& m : machines_) {
            std::vector<double> w(m.weights.data(), m.weights.data() + m.weights.size());
            ms.push_back({{"positive", m.positive}, {"negative", m.negative}, {"weights", w}});
        }
        return {{"n_classes", n_classes_}, {"machines", std::move(ms)}};
    }

private:
    std::size_t n_classes_;
    std::vector<PairMachine> machines_;
};

// Dual coordinate descent for the L1-loss (hinge) linear SVM with the bias
// folded in as a constant feature:
//   min_a 0.5 a'Qa - e'a,  0 <= a_i <= C,  Q_ij = y_i y_j x_i.x_j
// Stops once the projected-gradient spread drops below tol.
bool solve_pair(const Matrix& x, std::span<const std::size_t> rows, std::span<const double> y,
                const LinearSvmParams& params, Rng& rng, Eigen::VectorXd& w)
{
    const Eigen::Index d = x.cols();
    const std::size_t n = rows.size();
    w = Eigen::VectorXd::Zero(d + 1);
    std::vector<double> alpha(n, 0.0);
    std::vector<double> q_diag(n);
    for (std::size_t i = 0; i < n; ++i) {
        q_diag[i] = x.row(static_cast<Eigen::Index>(rows[i])).squaredNorm() + 1.0;
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});

    for (std::size_t epoch = 0; epoch < params.max_epochs; ++epoch) {
        rng.shuffle(std::span<std::size_t>(order));
        double pg_max = -std::numeric_limits<double>::infinity();
        double pg_min = std::numeric_limits<double>::infinity();
        for (std::size_t i : order) {
            const auto r = static_cast<Eigen::Index>(rows[i]);
            const double g = y[i] * (x.row(r).dot(w.head(d)) + w(d)) - 1.0;
            double pg = g;
            if (alpha[i] <= 0.0) {
                pg = std::min(g, 0.0);
            } else if (alpha[i] >= params.C) {
                pg = std::max(g, 0.0);
            }
            pg_max = std::max(pg_max, pg);
            pg_min = std::min(pg_min, pg);
            if (std::abs(pg) > 1e-12) {
                const double old = alpha[i];
                alpha[i] = std::clamp(old - g / q_diag[i], 0.0, params.C);
                const double delta = (alpha[i] - old) * y[i];
                w.head(d) += delta * x.row(r).transpose();
                w(d) += delta;
            }
        }
        if (pg_max - pg_min < params.tol) {
            return true;
        }
    }
    return false;
}

} // namespace

Fit fit_linear_svm(const Matrix& x, std::span<const int> labels, std::size_t n_classes, const LinearSvmParams& params,
                   std::uint64_t seed)
{
    std::vector<std::vector<std::size_t>> by_class(n_classes);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        by_class[static_cast<std::size_t>(labels[i])].push_back(i);
    }
    Fit fit;
    std::vector<PairMachine> machines;
    for (std::size_t a = 0; a < n_classes; ++a) {
        for (std::size_t b = a + 1; b < n_classes; ++b) {
            std::vector<std::size_t> rows;
            std::vector<double> y;
            // Rows in original order so the pair problem does not depend on class order.
            std::merge(by_class[a].begin(), by_class[a].end(), by_class[b].begin(), by_class[b].end(), std::back_inserter(rows));
            for (std::size_t r : rows) {
                y.push_back(static_cast<std::size_t>(labels[r]) == a ? 1.0 : -1.0);
            }
            Rng rng(derive_seed(seed, {a, b}));
            PairMachine m;
            m.positive = static_cast<int>(a);
            m.negative = static_cast<int>(b);
            if (!solve_pair(x, rows, y, params, rng, m.weights)) {
                fit.converged = false;
            }
            machines.push_back(std::move(m));
        }
    }
    fit.model = std::make_shared<LinearSvmModel>(n_classes, std::move(machines));
    return fit;
}

std::shared_ptr<const Model> linear_svm_from_json(const nlohmann::json& j)
{
    std::vector<PairMachine> machines;
    for (const auto& jm : j.at("machines")) {
        PairMachine m;
        m.positive = jm.at("positive").get<int>();
        m.negative = jm.at("negative").get<int>();
        auto w = jm.at("weights").get<std::vector<double>>();
        m.weights = Eigen::Map<Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
        machines.push_back(std::move(m));
    }
    return std::make_shared<LinearSvmModel>(j.at("n_classes").get<std::size_t>(), std::move(machines));
}

} // namespace rankfs::detail
