#include "rankfs/fsfsp.hpp"

#include "rankfs/error.hpp"
#include "rankfs/parallel.hpp"
#include "rankfs/random.hpp"

#include <algorithm>
#include <mutex>
#include <unordered_map>
#include <unordered_set>

namespace rankfs {

namespace {

std::vector<std::string> in_catalog_order(const ExpressionDataset& ds, const std::unordered_set<std::string>& ids)
{
    std::vector<std::string> out;
    for (const auto& e : ds.catalog().entries()) {
        if (ids.contains(e.id)) {
            out.push_back(e.id);
        }
    }
    return out;
}

} // namespace

FsfspTrace fsfsp_trace(const ExpressionDataset& ds, std::size_t max_depth, const BorutaConfig& cfg)
{
    BorutaConfig stage = cfg;
    stage.forest.max_depth = max_depth;

    const auto parts = partition_by_type(ds);
    std::unordered_set<std::string> candidates;
    for (std::size_t p = 0; p < parts.size(); ++p) {
        BorutaConfig part_cfg = stage;
        part_cfg.seed = derive_seed(cfg.seed, {10, static_cast<std::uint64_t>(parts[p].catalog()[0].type)});
        const auto res = run_boruta(parts[p], part_cfg);
        candidates.insert(res.selected.begin(), res.selected.end());
    }

    FsfspTrace trace;
    trace.partition_union = in_catalog_order(ds, candidates);
    if (trace.partition_union.empty()) {
        throw Error("fsfsp: no feature was confirmed in any partition (no informative features)");
    }

    const ExpressionDataset merged = apply_feature_set(ds, trace.partition_union);
    BorutaConfig merged_cfg = stage;
    merged_cfg.seed = derive_seed(cfg.seed, {11});
    trace.selected = run_boruta(merged, merged_cfg).selected;
    return trace;
}

std::vector<std::string> fsfsp(const ExpressionDataset& ds, std::size_t max_depth, const BorutaConfig& cfg)
{
    return fsfsp_trace(ds, max_depth, cfg).selected;
}

void SweepConfig::validate() const
{
    if (depths.empty()) {
        throw InvalidArgument("sweep: depths must be non-empty");
    }
    for (std::size_t i = 0; i < depths.size(); ++i) {
        if (depths[i] < 1) throw InvalidArgument("sweep: depths must be positive");
        if (i > 0 && depths[i] <= depths[i - 1]) throw InvalidArgument("sweep: depths must be strictly increasing");
    }
    boruta.validate();
}

RankedFeatureSets rank_feature_sets(std::vector<std::size_t> depths,
                                    std::vector<std::vector<std::string>> per_depth,
                                    const std::vector<std::string>& catalog_order)
{
    if (depths.size() != per_depth.size()) {
        throw InvalidArgument("rank_feature_sets: depths and selections disagree in length");
    }
    std::unordered_map<std::string, std::size_t> count;
    for (const auto& set : per_depth) {
        std::unordered_set<std::string> unique(set.begin(), set.end());
        for (const auto& id : unique) {
            ++count[id];
        }
    }
    RankedFeatureSets out;
    const std::size_t d = depths.size();
    out.ranks.assign(d, {});
    for (const auto& id : catalog_order) {
        auto it = count.find(id);
        if (it == count.end()) {
            continue;
        }
        out.membership.emplace_back(id, it->second);
        for (std::size_t n = 1; n <= it->second; ++n) {
            out.ranks[n - 1].push_back(id);
        }
    }
    if (out.membership.size() != count.size()) {
        throw InvalidArgument("rank_feature_sets: selection contains ids outside the catalog");
    }
    out.depths = std::move(depths);
    out.per_depth = std::move(per_depth);
    return out;
}

RankedFeatureSets ranking_fsfsp(const ExpressionDataset& ds, const SweepConfig& cfg,
                                const std::function<void(std::size_t depth)>& on_depth_done)
{
    cfg.validate();
    std::vector<std::vector<std::string>> per_depth(cfg.depths.size());
    std::mutex progress_mutex;
    parallel_for(cfg.depths.size(), [&](std::size_t i) {
        BorutaConfig bcfg = cfg.boruta;
        bcfg.seed = derive_seed(cfg.seed, {cfg.depths[i]});
        per_depth[i] = fsfsp(ds, cfg.depths[i], bcfg);
        if (on_depth_done) {
            std::lock_guard lock(progress_mutex);
            on_depth_done(cfg.depths[i]);
        }
    });
    std::vector<std::string> order;
    order.reserve(ds.n_features());
    for (const auto& e : ds.catalog().entries()) {
        order.push_back(e.id);
    }
    return rank_feature_sets(cfg.depths, std::move(per_depth), order);
}

nlohmann::json RankedFeatureSets::to_json() const
{
    nlohmann::json j;
    j["depths"] = depths;
    nlohmann::json sizes = nlohmann::json::array();
    for (const auto& s : per_depth) {
        sizes.push_back(s.size());
    }
    j["per_depth_sizes"] = std::move(sizes);
    j["per_depth"] = per_depth;
    nlohmann::json ranks_json = nlohmann::json::array();
    for (std::size_t n = 0; n < ranks.size(); ++n) {
        ranks_json.push_back({{"rank", n + 1}, {"size", ranks[n].size()}, {"features", ranks[n]}});
    }
    j["ranks"] = std::move(ranks_json);
    nlohmann::json members = nlohmann::json::object();
    for (const auto& [id, c] : membership) {
        members[id] = c;
    }
    j["membership_count"] = std::move(members);
    return j;
}

RankedFeatureSets RankedFeatureSets::from_json(const nlohmann::json& j)
{
    RankedFeatureSets out;
    out.depths = j.at("depths").get<std::vector<std::size_t>>();
    out.per_depth = j.at("per_depth").get<std::vector<std::vector<std::string>>>();
    for (const auto& r : j.at("ranks")) {
        out.ranks.push_back(r.at("features").get<std::vector<std::string>>());
    }
    // Membership is re-derived from rank lists so the catalog order is kept.
    for (std::size_t n = 0; n < out.ranks.size(); ++n) {
        for (const auto& id : out.ranks[n]) {
            if (n == 0) {
                out.membership.emplace_back(id, 0);
            }
        }
    }
    for (auto& [id, c] : out.membership) {
        c = j.at("membership_count").at(id).get<std::size_t>();
    }
    return out;
}

ExpressionDataset apply_feature_set(const ExpressionDataset& ds, std::span<const std::string> features)
{
    if (features.empty()) {
        throw InvalidArgument("apply_feature_set: feature set is empty");
    }
    std::vector<std::size_t> cols = column_indices(ds, features);
    std::sort(cols.begin(), cols.end());
    cols.erase(std::unique(cols.begin(), cols.end()), cols.end());
    return ds.select_columns(cols);
}

} // namespace rankfs
