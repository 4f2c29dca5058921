#pragma once

#include "rankfs/dataset.hpp"
#include "rankfs/forest.hpp"

#include <nlohmann/json.hpp>

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rankfs {

// Rows are samples, columns are class codes of the training dataset. Each row
// sums to 1.
using ProbabilityMatrix = Matrix;

enum class ClassifierKind { SoftmaxLR, LinearSVM, GradientBoost, KNN, RandomForest };

std::string_view to_string(ClassifierKind kind);
// Accepts the enum names and the short forms LR, SVM, GB/XGB, KNN, RF.
std::optional<ClassifierKind> parse_classifier_kind(std::string_view text);

struct SoftmaxLrParams {
    std::size_t max_iter = 2000;
    double C = 20.0;     // penalty weight on squared weights is 1/C
    double tol = 1e-5;   // max-abs gradient
    std::size_t history = 10;
};

struct LinearSvmParams {
    double C = 1.0;
    double tol = 1e-5;
    std::size_t max_epochs = 1000;
};

struct GradientBoostParams {
    std::size_t n_rounds = 1000;
    std::size_t max_depth = 4;
    double learning_rate = 0.1;
    double lambda = 1.0;          // L2 damping on leaf weights
    double min_child_weight = 1.0; // minimum hessian mass per child
};

struct KnnParams {
    std::size_t k = 7;
};

struct ClassifierSpec {
    ClassifierKind kind = ClassifierKind::SoftmaxLR;
    SoftmaxLrParams lr;
    LinearSvmParams svm;
    GradientBoostParams gb;
    KnnParams knn;
    ForestConfig rf = ForestConfig::for_classification();
    std::uint64_t seed = 0;

    static ClassifierSpec defaults(ClassifierKind kind, std::uint64_t seed = 0);
    void validate() const;
};

nlohmann::json to_json(const ClassifierSpec& spec);
// Missing fields keep their defaults; unknown fields are rejected.
ClassifierSpec classifier_spec_from_json(const nlohmann::json& j);

namespace detail {

// Learned model over internal class indices 0..P-1.
class Model {
public:
    virtual ~Model() = default;
    virtual Matrix predict_proba(const Matrix& x) const = 0;
    virtual nlohmann::json to_json() const = 0;
};

} // namespace detail

class TrainedClassifier {
public:
    TrainedClassifier(ClassifierKind kind, std::size_t n_features, std::size_t n_classes,
                      std::vector<int> classes, std::shared_ptr<const detail::Model> model,
                      bool converged = true, std::vector<double> training_loss = {});

    ClassifierKind kind() const noexcept { return kind_; }
    std::size_t n_features() const noexcept { return n_features_; }
    // Width of predicted probability rows (classes of the training dataset).
    std::size_t n_classes() const noexcept { return n_classes_; }
    // Class codes seen in training; internal index i maps to classes()[i].
    const std::vector<int>& classes() const noexcept { return classes_; }
    // False when an iterative solver stopped at its iteration cap.
    bool converged() const noexcept { return converged_; }
    // Per-round training loss (GradientBoost) or per-iteration objective (SoftmaxLR).
    const std::vector<double>& training_loss() const noexcept { return training_loss_; }

    ProbabilityMatrix predict_proba(const Matrix& x) const;
    ProbabilityMatrix predict_proba(const ExpressionDataset& ds) const { return predict_proba(ds.values()); }
    std::vector<int> predict(const Matrix& x) const;
    std::vector<int> predict(const ExpressionDataset& ds) const { return predict(ds.values()); }

    nlohmann::json to_json() const;
    static TrainedClassifier from_json(const nlohmann::json& j);

private:
    ClassifierKind kind_;
    std::size_t n_features_;
    std::size_t n_classes_;
    std::vector<int> classes_;
    std::shared_ptr<const detail::Model> model_;
    bool converged_;
    std::vector<double> training_loss_;
};

TrainedClassifier train(const ClassifierSpec& spec, const ExpressionDataset& ds);

// Per-row argmax; ties go to the lowest class code.
std::vector<int> argmax_rows(const Matrix& probabilities);

// Row-wise softmax with max subtraction.
Matrix softmax_rows(const Matrix& scores);

// Multinomial logistic objective: sum of cross-entropy plus (1/(2C)) times the
// squared non-bias weights. `weights` is classes x (features + 1), last column
// the bias. Writes the analytic gradient when `gradient` is non-null.
double softmax_lr_objective(const Matrix& weights, const Matrix& x, std::span<const int> labels,
                            double C, Matrix* gradient = nullptr);

} // namespace rankfs
