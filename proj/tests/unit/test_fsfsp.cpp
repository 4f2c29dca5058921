#include "rankfs/error.hpp"
#include "rankfs/fsfsp.hpp"
#include "rankfs/parallel.hpp"
#include "rankfs/random.hpp"
#include "rankfs/testkit.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <set>

using namespace rankfs;

namespace {

std::vector<std::string> ids(std::size_t n)
{
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back("f" + std::to_string(100 + i));
    return out;
}

testkit::SynthData planted(std::uint64_t seed, std::size_t informative = 6, std::size_t noise = 30)
{
    testkit::SynthSpec spec;
    spec.n_samples = 150;
    spec.n_informative = informative;
    spec.n_noise = noise;
    spec.seed = seed;
    auto data = testkit::generate(spec);
    data.dataset = log_transform(data.dataset);
    return data;
}

BorutaConfig quick(std::uint64_t seed)
{
    BorutaConfig cfg;
    cfg.seed = seed;
    cfg.max_iter = 30;
    return cfg;
}

bool subset(const std::vector<std::string>& a, const std::vector<std::string>& b)
{
    const std::set<std::string> sb(b.begin(), b.end());
    return std::all_of(a.begin(), a.end(), [&](const std::string& s) { return sb.count(s) > 0; });
}

void expect_rank_properties(const RankedFeatureSets& r, const std::vector<std::string>& catalog)
{
    const std::size_t d = r.depths.size();
    ASSERT_EQ(r.ranks.size(), d);
    std::map<std::string, std::size_t> count;
    for (const auto& s : r.per_depth) {
        for (const auto& id : s) count[id]++;
    }
    for (std::size_t n = 1; n <= d; ++n) {
        if (n < d) {
            EXPECT_TRUE(subset(r.rank(n + 1), r.rank(n)));
            EXPECT_GE(r.rank(n).size(), r.rank(n + 1).size());
        }
        std::vector<std::string> expected;
        for (const auto& id : catalog) {
            if (count.count(id) && count[id] >= n) expected.push_back(id);
        }
        EXPECT_EQ(r.rank(n), expected) << "rank " << n;
    }
    ASSERT_EQ(r.membership.size(), count.size());
    for (const auto& [id, c] : r.membership) EXPECT_EQ(c, count[id]);
}

} // namespace

TEST(RankSets, IdenticalSelectionsCollapse)
{
    const auto cat = ids(10);
    const std::vector<std::string> s{"f101", "f104", "f107"};
    std::vector<std::size_t> depths;
    for (std::size_t d = 5; d <= 60; d += 5) depths.push_back(d);
    const auto r = rank_feature_sets(depths, std::vector<std::vector<std::string>>(12, s), cat);
    EXPECT_EQ(r.rank(1), s);
    EXPECT_EQ(r.rank(12), s);
}

TEST(RankSets, SevenOfTwelve)
{
    const auto cat = ids(3);
    std::vector<std::size_t> depths;
    for (std::size_t d = 5; d <= 60; d += 5) depths.push_back(d);
    std::vector<std::vector<std::string>> per(12);
    for (std::size_t i = 0; i < 7; ++i) per[i * 12 / 7].push_back("f101");
    const auto r = rank_feature_sets(depths, per, cat);
    for (std::size_t n = 1; n <= 12; ++n) {
        const bool in = std::find(r.rank(n).begin(), r.rank(n).end(), "f101") != r.rank(n).end();
        EXPECT_EQ(in, n <= 7) << n;
    }
}

TEST(RankSets, RandomSelectionsSatisfyNesting)
{
    Rng rng(7);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n_features = 1 + rng.index(30);
        const std::size_t d = 1 + rng.index(12);
        const auto cat = ids(n_features);
        std::vector<std::size_t> depths;
        std::vector<std::vector<std::string>> per(d);
        for (std::size_t i = 0; i < d; ++i) {
            depths.push_back(5 * (i + 1));
            const double keep = rng.uniform01();
            // Reverse order on purpose: output must follow the catalog.
            for (std::size_t f = n_features; f-- > 0;) {
                if (rng.uniform01() < keep) per[i].push_back(cat[f]);
            }
        }
        const auto r = rank_feature_sets(depths, per, cat);
        expect_rank_properties(r, cat);
        std::vector<std::string> uni;
        for (const auto& id : cat) {
            for (const auto& s : per) {
                if (std::find(s.begin(), s.end(), id) != s.end()) {
                    uni.push_back(id);
                    break;
                }
            }
        }
        EXPECT_EQ(r.rank(1), uni);
        const auto back = RankedFeatureSets::from_json(r.to_json());
        EXPECT_EQ(back.ranks, r.ranks);
        EXPECT_EQ(back.membership, r.membership);
        EXPECT_EQ(back.depths, r.depths);
    }
}

TEST(RankSets, EmptyRanksStillMaterialised)
{
    const auto r = rank_feature_sets({5, 10, 15}, {{}, {}, {}}, ids(4));
    ASSERT_EQ(r.ranks.size(), 3u);
    for (const auto& s : r.ranks) EXPECT_TRUE(s.empty());
}

TEST(RankSets, Errors)
{
    EXPECT_THROW(rank_feature_sets({5, 10}, {{}}, ids(3)), InvalidArgument);
    EXPECT_THROW(rank_feature_sets({5}, {{"zzz"}}, ids(3)), InvalidArgument);
}

TEST(SweepConfig, Validation)
{
    SweepConfig cfg;
    EXPECT_EQ(cfg.depths.size(), 12u);
    EXPECT_EQ(cfg.depths.front(), 5u);
    EXPECT_EQ(cfg.depths.back(), 60u);
    EXPECT_NO_THROW(cfg.validate());
    cfg.depths = {};
    EXPECT_THROW(cfg.validate(), InvalidArgument);
    cfg.depths = {5, 5};
    EXPECT_THROW(cfg.validate(), InvalidArgument);
    cfg.depths = {10, 5};
    EXPECT_THROW(cfg.validate(), InvalidArgument);
    cfg.depths = {0};
    EXPECT_THROW(cfg.validate(), InvalidArgument);
}

TEST(ApplyFeatureSet, Basics)
{
    const auto data = planted(1);
    const auto& ds = data.dataset;
    std::vector<std::string> all;
    for (const auto& e : ds.catalog().entries()) all.push_back(e.id);
    const auto same = apply_feature_set(ds, all);
    EXPECT_EQ(same.values(), ds.values());
    EXPECT_EQ(same.sample_ids(), ds.sample_ids());

    const std::vector<std::string> picked{all[7], all[2]};
    const auto sub = apply_feature_set(ds, picked);
    ASSERT_EQ(sub.n_features(), 2u);
    EXPECT_EQ(sub.catalog()[0].id, all[2]);
    EXPECT_EQ(sub.catalog()[1].id, all[7]);
    EXPECT_EQ(sub.catalog()[0].type, ds.catalog()[2].type);
    EXPECT_EQ(sub.values().col(1), ds.values().col(7));
    EXPECT_EQ(sub.labels(), ds.labels());

    EXPECT_THROW(apply_feature_set(ds, std::vector<std::string>{}), InvalidArgument);
    EXPECT_THROW(apply_feature_set(ds, std::vector<std::string>{"nope"}), InvalidArgument);
}

TEST(Fsfsp, StagesMatchManualComposition)
{
    const auto data = planted(2);
    const auto& ds = data.dataset;
    const auto cfg = quick(21);
    const auto trace = fsfsp_trace(ds, 6, cfg);

    BorutaConfig stage = cfg;
    stage.forest.max_depth = 6;
    std::set<std::string> uni;
    for (const auto& part : partition_by_type(ds)) {
        BorutaConfig p = stage;
        p.seed = derive_seed(cfg.seed, {10, static_cast<std::uint64_t>(part.catalog()[0].type)});
        for (const auto& id : run_boruta(part, p).selected) uni.insert(id);
    }
    std::vector<std::string> expected_union;
    for (const auto& e : ds.catalog().entries()) {
        if (uni.count(e.id)) expected_union.push_back(e.id);
    }
    EXPECT_EQ(trace.partition_union, expected_union);
    EXPECT_TRUE(subset(trace.selected, trace.partition_union));
    EXPECT_EQ(fsfsp(ds, 6, cfg), trace.selected);
}

TEST(Fsfsp, SingleTypeCollapsesToTwoBorutaRuns)
{
    const auto data = planted(3);
    std::vector<std::size_t> mrna;
    for (std::size_t j = 0; j < data.dataset.n_features(); ++j) {
        if (data.dataset.catalog()[j].type == FeatureType::mRNA) mrna.push_back(j);
    }
    const auto ds = data.dataset.select_columns(mrna);
    const auto cfg = quick(5);
    BorutaConfig stage = cfg;
    stage.forest.max_depth = 5;
    stage.seed = derive_seed(cfg.seed, {10, 0});
    const auto first = run_boruta(ds, stage).selected;
    ASSERT_FALSE(first.empty());
    stage.seed = derive_seed(cfg.seed, {11});
    const auto second = run_boruta(apply_feature_set(ds, first), stage).selected;
    const auto trace = fsfsp_trace(ds, 5, cfg);
    EXPECT_EQ(trace.partition_union, first);
    EXPECT_EQ(trace.selected, second);
}

TEST(Fsfsp, UnionRecoversPlantedFeaturesAcrossTypes)
{
    const auto data = planted(4, 8, 32);
    std::set<FeatureType> types;
    for (const auto& id : data.informative) types.insert(data.dataset.catalog()[*data.dataset.catalog().find(id)].type);
    ASSERT_GE(types.size(), 2u);
    const auto trace = fsfsp_trace(data.dataset, 5, quick(8));
    std::size_t found = 0;
    for (const auto& id : data.informative) {
        found += std::find(trace.partition_union.begin(), trace.partition_union.end(), id) != trace.partition_union.end();
    }
    EXPECT_GE(static_cast<double>(found), 0.9 * static_cast<double>(data.informative.size()));
}

TEST(Fsfsp, EmptyUnionIsAnError)
{
    auto data = planted(5);
    BorutaConfig cfg = quick(1);
    cfg.max_iter = 3; // too few iterations for any confirmation
    EXPECT_THROW(fsfsp(data.dataset, 5, cfg), Error);
}

TEST(RankingFsfsp, DeterministicAcrossWorkersAndNested)
{
    const auto data = planted(6);
    SweepConfig cfg;
    cfg.depths = {3, 6, 9};
    cfg.boruta = quick(0);
    cfg.seed = 17;
    std::vector<std::size_t> done;
    const auto a = ranking_fsfsp(data.dataset, cfg, [&](std::size_t d) { done.push_back(d); });
    std::sort(done.begin(), done.end());
    EXPECT_EQ(done, cfg.depths);
    set_default_workers(3);
    const auto b = ranking_fsfsp(data.dataset, cfg);
    set_default_workers(1);
    EXPECT_EQ(a.to_json(), b.to_json());
    std::vector<std::string> cat;
    for (const auto& e : data.dataset.catalog().entries()) cat.push_back(e.id);
    expect_rank_properties(a, cat);

    // Each depth equals a standalone run seeded by (seed, depth).
    BorutaConfig one = cfg.boruta;
    one.seed = derive_seed(cfg.seed, {6});
    EXPECT_EQ(a.per_depth[1], fsfsp(data.dataset, 6, one));
}

TEST(RankingFsfsp, SingleDepth)
{
    const auto data = planted(7);
    SweepConfig cfg;
    cfg.depths = {5};
    cfg.boruta = quick(0);
    const auto r = ranking_fsfsp(data.dataset, cfg);
    ASSERT_EQ(r.ranks.size(), 1u);
    EXPECT_EQ(r.rank(1), r.per_depth[0]);
    const auto sub = apply_feature_set(data.dataset, r.rank(1));
    EXPECT_EQ(sub.n_features(), r.rank(1).size());
}
