#pragma once

#include "rankfs/classifiers.hpp"
#include "rankfs/dataset.hpp"

#include <nlohmann/json.hpp>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace rankfs {

// Rows are true classes, columns predicted classes.
class ConfusionMatrix {
public:
    explicit ConfusionMatrix(std::size_t n_classes = 0);

    std::size_t n_classes() const noexcept { return k_; }
    std::size_t at(std::size_t truth, std::size_t predicted) const { return counts_[truth * k_ + predicted]; }
    void add(std::size_t truth, std::size_t predicted, std::size_t count = 1);

    std::size_t total() const;
    std::size_t trace() const;
    std::size_t row_sum(std::size_t truth) const;
    std::size_t col_sum(std::size_t predicted) const;

    // Each row divided by its sum (per-class recall on the diagonal); empty rows stay zero.
    Matrix row_normalized() const;

    ConfusionMatrix& operator+=(const ConfusionMatrix& other);
    bool operator==(const ConfusionMatrix& other) const = default;

private:
    std::size_t k_;
    std::vector<std::size_t> counts_;
};

ConfusionMatrix confusion(std::span<const int> truth, std::span<const int> predicted, std::size_t n_classes);

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::size_t support = 0;
    bool precision_undefined = false; // no predicted positives; precision reported as 0
    bool recall_undefined = false;    // no true positives in truth; recall reported as 0
    std::optional<double> auc;        // absent when the class has no positives or no negatives
};

struct MetricsReport {
    double accuracy = 0.0;
    double precision_macro = 0.0;
    double recall_macro = 0.0;
    double f1_macro = 0.0;
    double precision_weighted = 0.0;
    double recall_weighted = 0.0;
    double f1_weighted = 0.0;
    double kappa = 0.0;
    std::optional<double> auc_macro;
    std::optional<double> auc_weighted;
    std::vector<ClassMetrics> per_class;
    std::string averaging = "macro";

    nlohmann::json to_json(std::span<const std::string> class_names = {}) const;
};

// One-vs-rest per-class scores with their macro and support-weighted means.
// AUC is filled in only when probabilities are given.
MetricsReport metrics(const ConfusionMatrix& cm, const ProbabilityMatrix* probabilities = nullptr,
                      std::span<const int> truth = {});

// Probability that a random positive outscores a random negative, ties
// counted 1/2. NaN when either group is empty.
double roc_auc(std::span<const double> scores, std::span<const bool> positive);

struct RocCurve {
    std::vector<double> fpr;
    std::vector<double> tpr;
    std::vector<double> thresholds; // +inf for the (0, 0) origin point
};

// One point per distinct score, thresholds descending.
RocCurve roc_curve(std::span<const double> scores, std::span<const bool> positive);
double trapezoid_area(const RocCurve& curve);
// TPR linearly interpolated along the curve at `fpr`; the upper value on vertical runs.
double interpolate_tpr(const RocCurve& curve, double fpr);

struct FoldPlan {
    std::size_t k = 10;
    std::uint64_t seed = 0;
    std::vector<std::vector<std::size_t>> folds; // ascending sample indices

    // Throws InvalidArgument unless folds are disjoint, cover 0..n-1 and every
    // class is spread with at most one sample of difference between folds.
    void validate(std::span<const int> labels) const;
};

// Each class is shuffled with its own seeded stream and dealt round-robin,
// continuing from where the previous class stopped.
FoldPlan stratified_folds(std::span<const int> labels, std::size_t k, std::uint64_t seed,
                          std::span<const std::string> class_names = {});

struct FoldOutput {
    std::vector<int> predicted;
    std::optional<ProbabilityMatrix> probabilities;
};

using FoldPipeline = std::function<FoldOutput(const ExpressionDataset& train, const ExpressionDataset& test, std::size_t fold)>;
// Several models evaluated on the same folds; returns one output per model.
using MultiFoldPipeline =
    std::function<std::vector<FoldOutput>(const ExpressionDataset& train, const ExpressionDataset& test, std::size_t fold)>;

inline constexpr std::size_t kRocGridPoints = 101;

struct CrossValidationResult {
    std::vector<MetricsReport> folds;
    MetricsReport aggregate;   // unweighted mean over folds
    ConfusionMatrix confusion; // summed over folds
    // Per class: TPR averaged across folds on an even FPR grid. Empty when
    // probabilities were not produced.
    std::vector<RocCurve> mean_roc;

    nlohmann::json to_json(std::span<const std::string> class_names = {}) const;
};

CrossValidationResult cross_validate(const FoldPipeline& pipeline, const ExpressionDataset& ds, const FoldPlan& plan);
std::vector<CrossValidationResult> cross_validate_models(const MultiFoldPipeline& pipeline, std::size_t n_models,
                                                         const ExpressionDataset& ds, const FoldPlan& plan);

// Training rows for `fold`: every sample not in it, ascending.
std::vector<std::size_t> training_indices(const FoldPlan& plan, std::size_t fold, std::size_t n_samples);

// CSV artifacts. `comment`, when non-empty, becomes a leading '#' line.
void write_confusion_csv(const ConfusionMatrix& cm, std::span<const std::string> class_names,
                         const std::filesystem::path& path, const std::string& comment = {});
void write_roc_csv(std::span<const RocCurve> curves, std::span<const std::string> class_names,
                   const std::filesystem::path& path, const std::string& comment = {});

} // namespace rankfs
