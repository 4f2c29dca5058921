#include "rankfs/boruta.hpp"

#include "rankfs/error.hpp"
#include "rankfs/random.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace rankfs {

std::string_view to_string(ShadowPool p)
{
    return p == ShadowPool::AllFeatures ? "all" : "active";
}

std::optional<ShadowPool> parse_shadow_pool(std::string_view text)
{
    if (text == "active") return ShadowPool::Active;
    if (text == "all") return ShadowPool::AllFeatures;
    return std::nullopt;
}

std::string_view to_string(Verdict v)
{
    switch (v) {
    case Verdict::Tentative: return "tentative";
    case Verdict::Confirmed: return "confirmed";
    case Verdict::Rejected: return "rejected";
    case Verdict::TentativeDropped: return "tentative_dropped";
    }
    return "tentative";
}

void BorutaConfig::validate() const
{
    if (max_iter < 1) throw InvalidArgument("boruta: max_iter must be >= 1");
    if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("boruta: alpha must lie in (0, 1)");
    ForestConfig f = forest;
    f.n_trees = std::max<std::size_t>(f.n_trees, 2);
    f.validate();
}

std::size_t auto_tree_count(std::size_t feature_count)
{
    const double raw = std::round(100.0 * std::sqrt(static_cast<double>(feature_count)) / 10.0);
    return static_cast<std::size_t>(std::clamp(raw, 50.0, 500.0));
}

nlohmann::json BorutaResult::to_json() const
{
    nlohmann::json features = nlohmann::json::array();
    for (std::size_t i = 0; i < feature_ids.size(); ++i) {
        features.push_back({{"id", feature_ids[i]}, {"verdict", std::string(to_string(verdicts[i]))}, {"hits", hit_counts[i]}});
    }
    return nlohmann::json{{"iterations", iterations_run}, {"selected", selected}, {"features", std::move(features)}};
}

namespace {

double log_choose(std::size_t n, std::size_t k)
{
    return std::lgamma(static_cast<double>(n) + 1.0) - std::lgamma(static_cast<double>(k) + 1.0)
        - std::lgamma(static_cast<double>(n - k) + 1.0);
}

} // namespace

double binomial_upper_tail(std::size_t hits, std::size_t n)
{
    if (hits == 0) return 1.0;
    if (hits > n) return 0.0;
    const double log_half_n = static_cast<double>(n) * std::log(0.5);
    double p = 0.0;
    for (std::size_t k = hits; k <= n; ++k) {
        p += std::exp(log_choose(n, k) + log_half_n);
    }
    return std::min(1.0, p);
}

double binomial_lower_tail(std::size_t hits, std::size_t n)
{
    if (hits >= n) return 1.0;
    const double log_half_n = static_cast<double>(n) * std::log(0.5);
    double p = 0.0;
    for (std::size_t k = 0; k <= hits; ++k) {
        p += std::exp(log_choose(n, k) + log_half_n);
    }
    return std::min(1.0, p);
}

BorutaResult run_boruta(const ExpressionDataset& ds, const BorutaConfig& cfg, const BorutaObserver& observer)
{
    cfg.validate();
    const std::size_t n_features = ds.n_features();
    BorutaResult result;
    result.verdicts.assign(n_features, Verdict::Tentative);
    result.hit_counts.assign(n_features, 0);
    for (const auto& e : ds.catalog().entries()) {
        result.feature_ids.push_back(e.id);
    }
    if (n_features == 0) {
        return result;
    }
    if (ds.n_present_classes() < 2) {
        throw InvalidArgument("run_boruta: need at least two classes");
    }

    const Matrix& x = ds.values();
    const auto n_rows = x.rows();
    auto& verdicts = result.verdicts;
    auto& hits = result.hit_counts;

    for (std::size_t iter = 1; iter <= cfg.max_iter; ++iter) {
        std::vector<std::size_t> active; // every feature not yet rejected
        std::size_t undecided = 0;
        for (std::size_t f = 0; f < n_features; ++f) {
            if (verdicts[f] != Verdict::Rejected) {
                active.push_back(f);
            }
            if (verdicts[f] == Verdict::Tentative) {
                ++undecided;
            }
        }
        if (undecided == 0) {
            break;
        }

        // Real block then shadow block; each shadow column is an independent
        // permutation of its source column.
        std::vector<std::size_t> sources = active;
        if (cfg.shadow_pool == ShadowPool::AllFeatures) {
            sources.resize(n_features);
            std::iota(sources.begin(), sources.end(), std::size_t{0});
        }
        const std::size_t m = active.size();
        const std::size_t n_shadow = sources.size();
        Matrix combined(n_rows, static_cast<Eigen::Index>(m + n_shadow));
        for (std::size_t j = 0; j < m; ++j) {
            combined.col(static_cast<Eigen::Index>(j)) = x.col(static_cast<Eigen::Index>(active[j]));
        }
        std::vector<std::size_t> perm(static_cast<std::size_t>(n_rows));
        for (std::size_t j = 0; j < n_shadow; ++j) {
            const auto src = static_cast<Eigen::Index>(sources[j]);
            std::iota(perm.begin(), perm.end(), std::size_t{0});
            Rng rng(derive_seed(cfg.seed, {1, iter, sources[j]}));
            rng.shuffle(std::span<std::size_t>(perm));
            const auto dst = static_cast<Eigen::Index>(m + j);
            for (Eigen::Index r = 0; r < n_rows; ++r) {
                combined(r, dst) = x(static_cast<Eigen::Index>(perm[static_cast<std::size_t>(r)]), src);
            }
        }

        ForestConfig fcfg = cfg.forest;
        if (cfg.auto_trees) {
            fcfg.n_trees = auto_tree_count(m);
        }
        fcfg.n_trees = std::max<std::size_t>(fcfg.n_trees, 2);
        fcfg.seed = derive_seed(cfg.seed, {2, iter});
        std::vector<std::size_t> all_columns(m + n_shadow);
        std::iota(all_columns.begin(), all_columns.end(), std::size_t{0});
        const TrainedForest forest = train_forest(combined, ds.labels(), ds.n_classes(), all_columns, fcfg);
        const std::vector<double> z = z_scores(forest);

        const double shadow_max = *std::max_element(z.begin() + static_cast<std::ptrdiff_t>(m), z.end());
        for (std::size_t j = 0; j < m; ++j) {
            const std::size_t f = active[j];
            if (verdicts[f] == Verdict::Tentative && z[j] > shadow_max) {
                ++hits[f];
            }
        }

        // Two-sided binomial test against p = 1/2, Bonferroni over undecided features.
        const double level = cfg.alpha / static_cast<double>(undecided);
        for (std::size_t f = 0; f < n_features; ++f) {
            if (verdicts[f] != Verdict::Tentative) {
                continue;
            }
            const double upper = binomial_upper_tail(hits[f], iter);
            const double lower = binomial_lower_tail(hits[f], iter);
            const double two_sided = std::min(1.0, 2.0 * std::min(upper, lower));
            if (two_sided < level) {
                verdicts[f] = upper < lower ? Verdict::Confirmed : Verdict::Rejected;
            }
        }
        result.iterations_run = iter;

        if (observer) {
            BorutaIteration snapshot;
            snapshot.iteration = iter;
            snapshot.real_columns = active;
            snapshot.shadow_sources = sources;
            snapshot.training_matrix = &combined;
            snapshot.verdicts = &verdicts;
            snapshot.hit_counts = &hits;
            observer(snapshot);
        }
    }

    for (std::size_t f = 0; f < n_features; ++f) {
        if (verdicts[f] == Verdict::Tentative) {
            verdicts[f] = Verdict::TentativeDropped;
        }
        if (verdicts[f] == Verdict::Confirmed) {
            result.selected.push_back(result.feature_ids[f]);
        }
    }
    return result;
}

} // namespace rankfs
