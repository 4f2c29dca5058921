#pragma once

#include "rankfs/classifiers.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace rankfs {

enum class Fusion { MaxVote, AverageVote };

struct MaxVoteResult {
    std::vector<int> labels;
    // Samples whose modal class was not unique and were resolved by the
    // averaged probabilities.
    std::vector<std::size_t> tie_samples;
    std::size_t tie_count() const noexcept { return tie_samples.size(); }
};

// Per sample, the class named by the most members. When the mode is not
// unique, the argmax of the members' averaged probabilities decides; without
// probabilities the lowest tied code wins.
MaxVoteResult fuse_max_vote(std::span<const std::vector<int>> member_labels,
                            std::span<const ProbabilityMatrix> member_probabilities = {});

struct AverageVoteResult {
    std::vector<int> labels;
    ProbabilityMatrix averaged;
};

// Cell-wise mean over the m members (summed in member order, divided by m),
// then argmax per row with ties to the lowest class code.
AverageVoteResult fuse_average_vote(std::span<const ProbabilityMatrix> member_probabilities);

struct EnsembleSpec {
    std::vector<ClassifierSpec> members = {
        ClassifierSpec::defaults(ClassifierKind::SoftmaxLR),
        ClassifierSpec::defaults(ClassifierKind::LinearSVM),
        ClassifierSpec::defaults(ClassifierKind::GradientBoost),
    };
    Fusion fusion = Fusion::AverageVote;

    void validate() const;
};

struct EnsemblePrediction {
    std::vector<int> labels;
    ProbabilityMatrix probabilities; // averaged member probabilities
    std::size_t tie_count = 0;       // MaxVote only
};

class TrainedEnsemble {
public:
    TrainedEnsemble(std::vector<TrainedClassifier> members, Fusion fusion);

    const std::vector<TrainedClassifier>& members() const noexcept { return members_; }
    Fusion fusion() const noexcept { return fusion_; }

    EnsemblePrediction predict(const Matrix& x) const;
    EnsemblePrediction predict(const ExpressionDataset& ds) const { return predict(ds.values()); }

private:
    std::vector<TrainedClassifier> members_;
    Fusion fusion_;
};

// Members are trained independently (possibly on several workers).
TrainedEnsemble train_ensemble(const EnsembleSpec& spec, const ExpressionDataset& ds);

// Fuses already-computed member outputs with the given rule.
EnsemblePrediction fuse(Fusion fusion, std::span<const ProbabilityMatrix> member_probabilities);

} // namespace rankfs
