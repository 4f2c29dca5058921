#include "rankfs/ensemble.hpp"

#include "rankfs/error.hpp"
#include "rankfs/parallel.hpp"

#include <algorithm>

namespace rankfs {

MaxVoteResult fuse_max_vote(std::span<const std::vector<int>> member_labels,
                            std::span<const ProbabilityMatrix> member_probabilities)
{
    if (member_labels.empty()) {
        throw InvalidArgument("fuse_max_vote: no members");
    }
    const std::size_t n = member_labels.front().size();
    int max_code = 0;
    for (const auto& m : member_labels) {
        if (m.size() != n) {
            throw InvalidArgument("fuse_max_vote: member predictions differ in length");
        }
        for (int c : m) {
            if (c < 0) throw InvalidArgument("fuse_max_vote: negative class code");
            max_code = std::max(max_code, c);
        }
    }
    std::optional<ProbabilityMatrix> averaged;
    if (!member_probabilities.empty()) {
        if (member_probabilities.size() != member_labels.size()) {
            throw InvalidArgument("fuse_max_vote: probability and label member counts differ");
        }
        averaged = fuse_average_vote(member_probabilities).averaged;
        if (static_cast<std::size_t>(averaged->rows()) != n) {
            throw InvalidArgument("fuse_max_vote: probability rows differ from label length");
        }
    }

    MaxVoteResult out;
    out.labels.resize(n);
    std::vector<std::size_t> votes(static_cast<std::size_t>(max_code) + 1);
    for (std::size_t i = 0; i < n; ++i) {
        std::fill(votes.begin(), votes.end(), 0);
        for (const auto& m : member_labels) {
            ++votes[static_cast<std::size_t>(m[i])];
        }
        const std::size_t top = *std::max_element(votes.begin(), votes.end());
        const auto modal = static_cast<std::size_t>(std::count(votes.begin(), votes.end(), top));
        const int first = static_cast<int>(std::find(votes.begin(), votes.end(), top) - votes.begin());
        if (modal == 1) {
            out.labels[i] = first;
            continue;
        }
        out.tie_samples.push_back(i);
        if (averaged) {
            const auto row = averaged->row(static_cast<Eigen::Index>(i));
            Eigen::Index best = 0;
            for (Eigen::Index j = 1; j < row.size(); ++j) {
                if (row(j) > row(best)) best = j;
            }
            out.labels[i] = static_cast<int>(best);
        } else {
            out.labels[i] = first;
        }
    }
    return out;
}

AverageVoteResult fuse_average_vote(std::span<const ProbabilityMatrix> member_probabilities)
{
    if (member_probabilities.empty()) {
        throw InvalidArgument("fuse_average_vote: no members");
    }
    const auto& first = member_probabilities.front();
    ProbabilityMatrix sum = Matrix::Zero(first.rows(), first.cols());
    for (const auto& p : member_probabilities) {
        if (p.rows() != first.rows() || p.cols() != first.cols()) {
            throw InvalidArgument("fuse_average_vote: member probability shapes differ");
        }
        sum += p;
    }
    AverageVoteResult out;
    out.averaged = sum / static_cast<double>(member_probabilities.size());
    out.labels = argmax_rows(out.averaged);
    return out;
}

void EnsembleSpec::validate() const
{
    if (members.empty()) {
        throw InvalidArgument("ensemble: no members");
    }
    if (fusion == Fusion::MaxVote && members.size() < 2) {
        throw InvalidArgument("ensemble: max voting needs at least two members");
    }
    for (const auto& m : members) {
        m.validate();
    }
}

TrainedEnsemble::TrainedEnsemble(std::vector<TrainedClassifier> members, Fusion fusion)
    : members_(std::move(members))
    , fusion_(fusion)
{
    if (members_.empty()) {
        throw InvalidArgument("ensemble: no members");
    }
}

EnsemblePrediction fuse(Fusion fusion, std::span<const ProbabilityMatrix> probs)
{
    EnsemblePrediction out;
    auto avg = fuse_average_vote(probs);
    if (fusion == Fusion::AverageVote) {
        out.labels = std::move(avg.labels);
    } else {
        std::vector<std::vector<int>> labels;
        labels.reserve(probs.size());
        for (const auto& p : probs) {
            labels.push_back(argmax_rows(p));
        }
        auto mv = fuse_max_vote(labels, probs);
        out.labels = std::move(mv.labels);
        out.tie_count = mv.tie_count();
    }
    out.probabilities = std::move(avg.averaged);
    return out;
}

EnsemblePrediction TrainedEnsemble::predict(const Matrix& x) const
{
    std::vector<ProbabilityMatrix> probs(members_.size());
    parallel_for(members_.size(), [&](std::size_t m) { probs[m] = members_[m].predict_proba(x); });
    return fuse(fusion_, probs);
}

TrainedEnsemble train_ensemble(const EnsembleSpec& spec, const ExpressionDataset& ds)
{
    spec.validate();
    std::vector<std::optional<TrainedClassifier>> trained(spec.members.size());
    parallel_for(spec.members.size(), [&](std::size_t m) { trained[m].emplace(train(spec.members[m], ds)); });
    std::vector<TrainedClassifier> members;
    for (auto& t : trained) {
        members.push_back(std::move(*t));
    }
    return TrainedEnsemble(std::move(members), spec.fusion);
}

} // namespace rankfs
