#include "models.hpp"

#include "rankfs/error.hpp"

#include <cmath>
#include <deque>
#include <limits>

namespace rankfs {

double softmax_lr_objective(const Matrix& weights, const Matrix& x, std::span<const int> labels, double C,
                            Matrix* gradient)
{
    const Eigen::Index d = x.cols();
    const Eigen::Index n_classes = weights.rows();
    if (weights.cols() != d + 1) {
        throw InvalidArgument("softmax_lr_objective: weight shape does not match features");
    }
    Matrix scores = x * weights.leftCols(d).transpose();
    scores.rowwise() += weights.col(d).transpose();

    double loss = 0.0;
    for (Eigen::Index i = 0; i < scores.rows(); ++i) {
        const double m = scores.row(i).maxCoeff();
        const double lse = m + std::log((scores.row(i).array() - m).exp().sum());
        loss += lse - scores(i, labels[static_cast<std::size_t>(i)]);
        scores.row(i) = (scores.row(i).array() - lse).exp().matrix();
    }
    loss += 0.5 / C * weights.leftCols(d).squaredNorm();

    if (gradient != nullptr) {
        for (Eigen::Index i = 0; i < scores.rows(); ++i) {
            scores(i, labels[static_cast<std::size_t>(i)]) -= 1.0;
        }
        gradient->resize(n_classes, d + 1);
        gradient->leftCols(d) = scores.transpose() * x + weights.leftCols(d) / C;
        gradient->col(d) = scores.colwise().sum().transpose();
    }
    return loss;
}

namespace detail {

namespace {

class SoftmaxLrModel final : public Model {
public:
    explicit SoftmaxLrModel(Matrix weights) : weights_(std::move(weights)) {}

    Matrix predict_proba(const Matrix& x) const override
    {
        const Eigen::Index d = x.cols();
        Matrix scores = x * weights_.leftCols(d).transpose();
        scores.rowwise() += weights_.col(d).transpose();
        return softmax_rows(scores);
    }

    nlohmann::json to_json() const override { return {{"weights", matrix_to_json(weights_)}}; }

private:
    Matrix weights_;
};

} // namespace

// L-BFGS with Armijo backtracking; convex objective, so the curvature
// condition is enforced by skipping pairs with s.y <= 0.
Fit fit_softmax_lr(const Matrix& x, std::span<const int> labels, std::size_t n_classes, const SoftmaxLrParams& params)
{
    const Eigen::Index rows = static_cast<Eigen::Index>(n_classes);
    const Eigen::Index cols = x.cols() + 1;
    const Eigen::Index dim = rows * cols;

    Matrix w = Matrix::Zero(rows, cols);
    Matrix g;
    double f = softmax_lr_objective(w, x, labels, params.C, &g);

    auto flat = [](Matrix& m) { return Eigen::Map<Eigen::VectorXd>(m.data(), m.size()); };
    auto cflat = [](const Matrix& m) { return Eigen::Map<const Eigen::VectorXd>(m.data(), m.size()); };

    std::deque<std::pair<Eigen::VectorXd, Eigen::VectorXd>> memory; // (s, y)
    Fit fit;
    fit.converged = false;
    fit.loss_history.push_back(f);

    Eigen::VectorXd direction(dim);
    Matrix w_next;
    Matrix g_next;
    for (std::size_t iter = 0; iter < params.max_iter; ++iter) {
        if (cflat(g).lpNorm<Eigen::Infinity>() <= params.tol) {
            fit.converged = true;
            break;
        }
        // Two-loop recursion.
        Eigen::VectorXd q = -cflat(g);
        std::vector<double> a(memory.size());
        for (std::size_t k = memory.size(); k-- > 0;) {
            const auto& [s, y] = memory[k];
            a[k] = s.dot(q) / s.dot(y);
            q -= a[k] * y;
        }
        if (!memory.empty()) {
            const auto& [s, y] = memory.back();
            q *= s.dot(y) / y.squaredNorm();
        } else {
            q /= std::max(1.0, cflat(g).norm());
        }
        for (std::size_t k = 0; k < memory.size(); ++k) {
            const auto& [s, y] = memory[k];
            const double b = y.dot(q) / s.dot(y);
            q += (a[k] - b) * s;
        }
        direction = q;
        double slope = cflat(g).dot(direction);
        if (!(slope < 0.0)) {
            memory.clear();
            direction = -cflat(g) / std::max(1.0, cflat(g).norm());
            slope = cflat(g).dot(direction);
        }

        double step = 1.0;
        double f_next = std::numeric_limits<double>::infinity();
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls) {
            w_next = w;
            flat(w_next) += step * direction;
            f_next = softmax_lr_objective(w_next, x, labels, params.C, &g_next);
            if (std::isfinite(f_next) && f_next <= f + 1e-4 * step * slope) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            break;
        }

        Eigen::VectorXd s = cflat(w_next) - cflat(w);
        Eigen::VectorXd y = cflat(g_next) - cflat(g);
        if (s.dot(y) > 1e-12 * s.norm() * y.norm()) {
            memory.emplace_back(std::move(s), std::move(y));
            if (memory.size() > params.history) {
                memory.pop_front();
            }
        }
        w.swap(w_next);
        g.swap(g_next);
        f = f_next;
        fit.loss_history.push_back(f);
    }
    if (!fit.converged && cflat(g).lpNorm<Eigen::Infinity>() <= params.tol) {
        fit.converged = true;
    }
    fit.model = std::make_shared<SoftmaxLrModel>(std::move(w));
    return fit;
}

std::shared_ptr<const Model> softmax_lr_from_json(const nlohmann::json& j)
{
    return std::make_shared<SoftmaxLrModel>(matrix_from_json(j.at("weights")));
}

} // namespace detail
} // namespace rankfs
