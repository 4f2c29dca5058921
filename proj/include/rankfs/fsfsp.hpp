#pragma once

#include "rankfs/boruta.hpp"
#include "rankfs/dataset.hpp"

#include <nlohmann/json.hpp>

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace rankfs {

struct FsfspTrace {
    std::vector<std::string> partition_union; // candidates after the per-partition stage
    std::vector<std::string> selected;        // confirmed by the merged-set run
};

// Partition by feature type, Boruta per partition, union of the confirmed
// features, Boruta again on the union. Both stages use forest depth `max_depth`.
// Returned ids follow the catalog order of `ds`.
FsfspTrace fsfsp_trace(const ExpressionDataset& ds, std::size_t max_depth, const BorutaConfig& cfg);
std::vector<std::string> fsfsp(const ExpressionDataset& ds, std::size_t max_depth, const BorutaConfig& cfg);

struct SweepConfig {
    std::vector<std::size_t> depths = {5, 10, 15, 20, 25, 30, 35, 40, 45, 50, 55, 60};
    BorutaConfig boruta;
    std::uint64_t seed = 0;

    void validate() const;
};

struct RankedFeatureSets {
    std::vector<std::size_t> depths;
    std::vector<std::vector<std::string>> per_depth; // aligned with depths
    // ranks[N-1] holds Rank_N: features selected in at least N sweep runs.
    std::vector<std::vector<std::string>> ranks;
    // Features selected at least once, catalog order, with their run counts.
    std::vector<std::pair<std::string, std::size_t>> membership;

    const std::vector<std::string>& rank(std::size_t n) const { return ranks.at(n - 1); }

    nlohmann::json to_json() const;
    static RankedFeatureSets from_json(const nlohmann::json& j);
};

// Builds Rank_1..Rank_D from per-depth selections; ids are emitted in
// `catalog_order` order.
RankedFeatureSets rank_feature_sets(std::vector<std::size_t> depths,
                                    std::vector<std::vector<std::string>> per_depth,
                                    const std::vector<std::string>& catalog_order);

// One fsfsp run per depth, seeded by (seed, depth); runs may execute on
// several workers without changing the result.
RankedFeatureSets ranking_fsfsp(const ExpressionDataset& ds, const SweepConfig& cfg,
                                const std::function<void(std::size_t depth)>& on_depth_done = {});

// Column-filtered copy keeping the dataset's own column order.
ExpressionDataset apply_feature_set(const ExpressionDataset& ds, std::span<const std::string> features);

} // namespace rankfs
