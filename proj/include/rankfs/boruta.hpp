#pragma once

#include "rankfs/dataset.hpp"
#include "rankfs/forest.hpp"

#include <nlohmann/json.hpp>

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace rankfs {

enum class Verdict { Tentative, Confirmed, Rejected, TentativeDropped };

std::string_view to_string(Verdict v);

// Which columns get a shadow copy each iteration. Active shadows every
// non-rejected feature, so real and shadow blocks have equal width. AllFeatures
// keeps shadowing rejected columns too, which holds the reference pool at full
// size once most features are dropped and curbs confirmations of chance-
// correlated survivors.
enum class ShadowPool { Active, AllFeatures };

std::string_view to_string(ShadowPool p);
std::optional<ShadowPool> parse_shadow_pool(std::string_view text);

struct BorutaConfig {
    std::size_t max_iter = 200;
    double alpha = 0.05;
    // n_trees is ignored while auto_trees is set.
    ForestConfig forest = ForestConfig::for_selection();
    bool auto_trees = true;
    ShadowPool shadow_pool = ShadowPool::Active;
    std::uint64_t seed = 0;

    void validate() const;
};

// clamp(round(10 * sqrt(feature_count)), 50, 500)
std::size_t auto_tree_count(std::size_t feature_count);

struct BorutaResult {
    std::vector<std::string> feature_ids; // catalog order of the input dataset
    std::vector<Verdict> verdicts;
    std::vector<std::size_t> hit_counts;
    std::size_t iterations_run = 0;
    std::vector<std::string> selected; // Confirmed ids, catalog order

    nlohmann::json to_json() const;
};

// Per-iteration snapshot, for tests and progress reporting.
struct BorutaIteration {
    std::size_t iteration = 0;
    std::vector<std::size_t> real_columns;   // dataset columns present as real features
    std::vector<std::size_t> shadow_sources; // dataset column each shadow was permuted from
    const Matrix* training_matrix = nullptr; // real block followed by shadow block
    const std::vector<Verdict>* verdicts = nullptr;
    const std::vector<std::size_t>* hit_counts = nullptr;
};
using BorutaObserver = std::function<void(const BorutaIteration&)>;

// Upper and lower binomial(n, 1/2) tails: P(X >= hits) and P(X <= hits).
double binomial_upper_tail(std::size_t hits, std::size_t n);
double binomial_lower_tail(std::size_t hits, std::size_t n);

BorutaResult run_boruta(const ExpressionDataset& ds, const BorutaConfig& cfg, const BorutaObserver& observer = {});

} // namespace rankfs
