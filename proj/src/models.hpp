#pragma once

// Learners behind TrainedClassifier. Labels here are internal indices 0..P-1.

#include "rankfs/classifiers.hpp"

#include <memory>
#include <span>
#include <vector>

namespace rankfs::detail {

struct Fit {
    std::shared_ptr<const Model> model;
    bool converged = true;
    std::vector<double> loss_history;
};

Fit fit_softmax_lr(const Matrix& x, std::span<const int> labels, std::size_t n_classes, const SoftmaxLrParams& params);
std::shared_ptr<const Model> softmax_lr_from_json(const nlohmann::json& j);

Fit fit_linear_svm(const Matrix& x, std::span<const int> labels, std::size_t n_classes, const LinearSvmParams& params,
                   std::uint64_t seed);
std::shared_ptr<const Model> linear_svm_from_json(const nlohmann::json& j);

Fit fit_gradient_boost(const Matrix& x, std::span<const int> labels, std::size_t n_classes,
                       const GradientBoostParams& params);
std::shared_ptr<const Model> gradient_boost_from_json(const nlohmann::json& j);

nlohmann::json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const nlohmann::json& j);

} // namespace rankfs::detail
