#include "rankfs/dataset.hpp"
#include "rankfs/error.hpp"

#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace rankfs;
using rankfs::test::TempDir;
using rankfs::test::write_file;

namespace {

ExpressionDataset tiny(Matrix values, std::vector<FeatureType> types = {}, bool log_transformed = false)
{
    const auto rows = static_cast<std::size_t>(values.rows());
    const auto cols = static_cast<std::size_t>(values.cols());
    std::vector<std::string> ids;
    std::vector<int> labels;
    for (std::size_t i = 0; i < rows; ++i) {
        ids.push_back("s" + std::to_string(i));
        labels.push_back(static_cast<int>(i % 2));
    }
    std::vector<FeatureEntry> entries;
    for (std::size_t j = 0; j < cols; ++j) {
        entries.push_back({"f" + std::to_string(j), types.empty() ? FeatureType::mRNA : types[j]});
    }
    return ExpressionDataset(std::move(values), ids, labels, {"A", "B"}, FeatureCatalog(entries), log_transformed);
}

struct Files {
    TempDir dir;
    std::filesystem::path matrix = dir / "m.csv";
    std::filesystem::path labels = dir / "l.csv";
    std::filesystem::path types = dir / "t.csv";
};

void write_minimal(const Files& f)
{
    write_file(f.matrix, "sample,g1,g2,g3,g4\nS1,1,2,3,4\nS2,0,0.5,1e1,2\nS3,7,8,9,10\n");
    write_file(f.labels, "sample,class\nS1,LUAD\nS2,BRCA\nS3,LUAD\n");
    write_file(f.types, "feature,type\ng1,mRNA\ng2,miRNA\ng3,lncRNA\ng4,otherRNA\n");
}

} // namespace

TEST(Dataset, LoadsMinimalInput)
{
    Files f;
    write_minimal(f);
    const auto loaded = load_dataset(f.matrix, f.labels, f.types);
    const auto& ds = loaded.dataset;
    EXPECT_EQ(ds.n_samples(), 3u);
    EXPECT_EQ(ds.n_features(), 4u);
    EXPECT_EQ(ds.values()(1, 2), 10.0);
    // Codes follow sorted class names.
    EXPECT_EQ(ds.class_names(), (std::vector<std::string>{"BRCA", "LUAD"}));
    EXPECT_EQ(ds.labels(), (std::vector<int>{1, 0, 1}));
    EXPECT_EQ(ds.catalog()[1].type, FeatureType::miRNA);
    EXPECT_EQ(loaded.report.unmapped_types, 0u);
    EXPECT_FALSE(ds.log_transformed());
}

TEST(Dataset, TabDelimitedWithoutHeadersAndComments)
{
    Files f;
    write_file(f.matrix, "# exported\nid\ta\tb\nx\t1\t2\ny\t3\t4\n");
    write_file(f.labels, "x\tK1\ny\tK2\n");
    write_file(f.types, "a\tmRNA\n");
    const auto loaded = load_dataset(f.matrix, f.labels, f.types);
    EXPECT_EQ(loaded.dataset.n_samples(), 2u);
    EXPECT_EQ(loaded.dataset.catalog()[1].type, FeatureType::otherRNA);
    EXPECT_EQ(loaded.report.unmapped_types, 1u);
    EXPECT_EQ(loaded.report.unmapped_feature_ids, std::vector<std::string>{"b"});
}

TEST(Dataset, NegativeCellNamesRowAndColumn)
{
    Files f;
    write_minimal(f);
    write_file(f.matrix, "sample,g1,g2,g3,g4\nS1,1,2,3,4\nS2,0,-0.5,1,2\nS3,7,8,9,10\n");
    try {
        load_dataset(f.matrix, f.labels, f.types);
        FAIL() << "expected LoadError";
    } catch (const LoadError& e) {
        EXPECT_EQ(e.row(), 3u);
        EXPECT_EQ(e.column(), 3u);
        EXPECT_EQ(e.file(), f.matrix.string());
    }
}

TEST(Dataset, LoadErrors)
{
    {
        Files f;
        write_minimal(f);
        write_file(f.matrix, "sample,g1,g2,g3,g4\nS1,1,2,3\n");
        EXPECT_THROW(load_dataset(f.matrix, f.labels, f.types), LoadError);
    }
    {
        Files f;
        write_minimal(f);
        write_file(f.matrix, "sample,g1,g2,g3,g4\nS1,1,2,x,4\nS2,1,1,1,1\nS3,1,1,1,1\n");
        try {
            load_dataset(f.matrix, f.labels, f.types);
            FAIL();
        } catch (const LoadError& e) {
            EXPECT_EQ(e.row(), 2u);
            EXPECT_EQ(e.column(), 4u);
        }
    }
    {
        Files f;
        write_minimal(f);
        write_file(f.matrix, "sample,g1,g1\nS1,1,2\n");
        EXPECT_THROW(load_dataset(f.matrix, f.labels, f.types), LoadError);
    }
    {
        Files f;
        write_minimal(f);
        write_file(f.matrix, "sample,g1\nS1,1\nS1,2\n");
        EXPECT_THROW(load_dataset(f.matrix, f.labels, f.types), LoadError);
    }
    {
        Files f;
        write_minimal(f);
        write_file(f.labels, "sample,class\nS1,A\nS2,B\nS3,A\nS9,B\n");
        try {
            load_dataset(f.matrix, f.labels, f.types);
            FAIL();
        } catch (const LoadError& e) {
            EXPECT_EQ(e.row(), 5u);
            EXPECT_NE(std::string(e.what()).find("S9"), std::string::npos);
        }
    }
    {
        Files f;
        write_minimal(f);
        write_file(f.labels, "S1,A\nS2,B\n");
        EXPECT_THROW(load_dataset(f.matrix, f.labels, f.types), LoadError);
    }
    {
        Files f;
        write_minimal(f);
        EXPECT_THROW(load_dataset(f.matrix, f.dir / "missing.csv", f.types), LoadError);
    }
    {
        Files f;
        write_minimal(f);
        write_file(f.types, "g1,mRNA\ng2,weird\n");
        EXPECT_THROW(load_dataset(f.matrix, f.labels, f.types), LoadError);
    }
}

TEST(Dataset, ConstructorInvariants)
{
    Matrix v = Matrix::Ones(2, 2);
    EXPECT_THROW(ExpressionDataset(v, {"a"}, {0, 1}, {"A", "B"}, FeatureCatalog({{"x"}, {"y"}})), InvalidArgument);
    EXPECT_THROW(ExpressionDataset(v, {"a", "a"}, {0, 1}, {"A", "B"}, FeatureCatalog({{"x"}, {"y"}})), InvalidArgument);
    EXPECT_THROW(ExpressionDataset(v, {"a", "b"}, {0, 2}, {"A", "B"}, FeatureCatalog({{"x"}, {"y"}})), InvalidArgument);
    EXPECT_THROW(ExpressionDataset(v, {"a", "b"}, {0, 1}, {"A", "B"}, FeatureCatalog({{"x"}})), InvalidArgument);
    EXPECT_THROW(FeatureCatalog({{"x"}, {"x"}}), InvalidArgument);
    Matrix bad = v;
    bad(0, 0) = std::nan("");
    EXPECT_THROW(ExpressionDataset(bad, {"a", "b"}, {0, 1}, {"A", "B"}, FeatureCatalog({{"x"}, {"y"}})), InvalidArgument);
    bad(0, 0) = -1.0;
    EXPECT_THROW(ExpressionDataset(bad, {"a", "b"}, {0, 1}, {"A", "B"}, FeatureCatalog({{"x"}, {"y"}})), InvalidArgument);
}

TEST(Dataset, SaveLoadRoundTripIsExact)
{
    std::mt19937_64 gen(3);
    std::exponential_distribution<double> dist(0.3);
    Matrix v(6, 5);
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = dist(gen);
    const auto ds = tiny(v, {FeatureType::mRNA, FeatureType::lncRNA, FeatureType::miRNA, FeatureType::otherRNA, FeatureType::mRNA});
    TempDir dir;
    save_dataset(ds, dir / "m.csv", dir / "l.csv", dir / "t.csv", "provenance line");
    const auto back = load_dataset(dir / "m.csv", dir / "l.csv", dir / "t.csv").dataset;
    EXPECT_EQ(back.values(), ds.values());
    EXPECT_EQ(back.sample_ids(), ds.sample_ids());
    EXPECT_EQ(back.labels(), ds.labels());
    for (std::size_t j = 0; j < ds.n_features(); ++j) {
        EXPECT_EQ(back.catalog()[j].id, ds.catalog()[j].id);
        EXPECT_EQ(back.catalog()[j].type, ds.catalog()[j].type);
    }
    EXPECT_EQ(rankfs::test::read_file(dir / "m.csv").rfind("# provenance line\n", 0), 0u);
}

TEST(FilterLowExpression, StrictThreshold)
{
    Matrix v(2, 3);
    v << 0.08, 0.1, 3.0,
         0.00, 0.0, 1.0;
    // Column means: 0.04 (removed), exactly 0.05 (kept), 2.0 (kept).
    const auto out = filter_low_expression(tiny(v), 0.05);
    ASSERT_EQ(out.n_features(), 2u);
    EXPECT_EQ(out.catalog()[0].id, "f1");
    EXPECT_EQ(out.catalog()[1].id, "f2");
    EXPECT_EQ(out.n_samples(), 2u);
    EXPECT_EQ(out.values().col(0), v.col(1));
}

TEST(FilterLowExpression, Errors)
{
    EXPECT_THROW(filter_low_expression(tiny(Matrix::Zero(3, 2)), 0.05), InvalidArgument);
    EXPECT_THROW(filter_low_expression(tiny(Matrix::Ones(3, 2)), 0.0), InvalidArgument);
    EXPECT_THROW(filter_low_expression(tiny(Matrix::Ones(3, 2), {}, true), 0.05), InvalidArgument);
}

TEST(LogTransform, MatchesFormulaAndRefusesTwice)
{
    Matrix v(2, 2);
    v << 0.0, 1.0, 3.0, 1023.0;
    const auto out = log_transform(tiny(v));
    EXPECT_TRUE(out.log_transformed());
    EXPECT_DOUBLE_EQ(out.values()(0, 0), 0.0);
    EXPECT_DOUBLE_EQ(out.values()(0, 1), 1.0);
    EXPECT_DOUBLE_EQ(out.values()(1, 0), 2.0);
    EXPECT_DOUBLE_EQ(out.values()(1, 1), 10.0);
    EXPECT_THROW(log_transform(out), InvalidArgument);
}

TEST(LogTransform, MonotoneAndNonNegative)
{
    std::mt19937_64 gen(8);
    std::uniform_real_distribution<double> u(0.0, 1e5);
    Matrix v(20, 10);
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = u(gen);
    const auto out = log_transform(tiny(v));
    for (Eigen::Index j = 0; j < v.cols(); ++j) {
        for (Eigen::Index a = 0; a < v.rows(); ++a) {
            EXPECT_GE(out.values()(a, j), 0.0);
            for (Eigen::Index b = 0; b < v.rows(); ++b) {
                if (v(a, j) < v(b, j)) EXPECT_LT(out.values()(a, j), out.values()(b, j));
            }
        }
    }
}

TEST(PartitionByType, EnumOrderAndColumnOrder)
{
    Matrix v = Matrix::Random(4, 6).cwiseAbs();
    const auto ds = tiny(v, {FeatureType::lncRNA, FeatureType::mRNA, FeatureType::lncRNA, FeatureType::otherRNA,
                             FeatureType::mRNA, FeatureType::lncRNA});
    const auto parts = partition_by_type(ds);
    ASSERT_EQ(parts.size(), 3u);
    EXPECT_EQ(parts[0].catalog()[0].type, FeatureType::mRNA);
    EXPECT_EQ(parts[1].catalog()[0].type, FeatureType::lncRNA);
    EXPECT_EQ(parts[2].catalog()[0].type, FeatureType::otherRNA);
    EXPECT_EQ(parts[1].catalog()[0].id, "f0");
    EXPECT_EQ(parts[1].catalog()[1].id, "f2");
    EXPECT_EQ(parts[1].catalog()[2].id, "f5");
    std::size_t total = 0;
    for (const auto& p : parts) {
        total += p.n_features();
        EXPECT_EQ(p.n_samples(), 4u);
    }
    EXPECT_EQ(total, 6u);
}

TEST(PartitionStats, MatchesDirectComputation)
{
    std::mt19937_64 gen(21);
    std::uniform_real_distribution<double> u(0.0, 15.0);
    Matrix v(30, 8);
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = u(gen);
    std::vector<FeatureType> types{FeatureType::mRNA, FeatureType::mRNA, FeatureType::miRNA, FeatureType::lncRNA,
                                   FeatureType::lncRNA, FeatureType::otherRNA, FeatureType::mRNA, FeatureType::lncRNA};
    const auto stats = compute_partition_stats(tiny(v, types, true));
    ASSERT_EQ(stats.size(), 5u);
    EXPECT_EQ(stats[0].group, "All");
    std::size_t freq = 0;
    for (std::size_t g = 1; g < stats.size(); ++g) freq += stats[g].count;
    EXPECT_EQ(freq, stats[0].count);

    // Oracle: plain two-pass mean and population variance over the group's cells.
    auto oracle = [&](int type) {
        double n = 0, s = 0;
        for (Eigen::Index j = 0; j < v.cols(); ++j) {
            if (type >= 0 && static_cast<int>(types[static_cast<std::size_t>(j)]) != type) continue;
            for (Eigen::Index i = 0; i < v.rows(); ++i) { s += v(i, j); ++n; }
        }
        const double mean = s / n;
        double ss = 0;
        for (Eigen::Index j = 0; j < v.cols(); ++j) {
            if (type >= 0 && static_cast<int>(types[static_cast<std::size_t>(j)]) != type) continue;
            for (Eigen::Index i = 0; i < v.rows(); ++i) ss += (v(i, j) - mean) * (v(i, j) - mean);
        }
        return std::pair{mean, std::sqrt(ss / n)};
    };
    const int order[] = {-1, 0, 1, 2, 3};
    for (std::size_t g = 0; g < stats.size(); ++g) {
        const auto [mean, sd] = oracle(order[g]);
        EXPECT_NEAR(stats[g].mean, mean, 1e-12);
        EXPECT_NEAR(stats[g].sd, sd, 1e-12);
        EXPECT_LE(stats[g].min, stats[g].mean);
        EXPECT_LE(stats[g].mean, stats[g].max);
        EXPECT_GE(stats[g].sd, 0.0);
    }
    const auto j = to_json(stats);
    EXPECT_EQ(j.size(), 5u);
    EXPECT_EQ(j[2]["group"], "miRNA");
}

TEST(Dataset, SelectRowsColumnsAndIndices)
{
    Matrix v(3, 3);
    v << 1, 2, 3, 4, 5, 6, 7, 8, 9;
    const auto ds = tiny(v);
    const std::vector<std::size_t> rows{2, 0};
    const auto r = ds.select_rows(rows);
    EXPECT_EQ(r.values()(0, 0), 7.0);
    EXPECT_EQ(r.sample_ids()[1], "s0");
    const std::vector<std::string> ids{"f2", "f0"};
    const auto cols = column_indices(ds, ids);
    EXPECT_EQ(cols, (std::vector<std::size_t>{2, 0}));
    const std::vector<std::string> unknown{"nope"};
    EXPECT_THROW(column_indices(ds, unknown), InvalidArgument);
    EXPECT_EQ(ds.n_present_classes(), 2u);
}

TEST(FeatureType, ParseAliases)
{
    EXPECT_EQ(parse_feature_type("MRNA"), FeatureType::mRNA);
    EXPECT_EQ(parse_feature_type("protein_coding"), FeatureType::mRNA);
    EXPECT_EQ(parse_feature_type("othRNA"), FeatureType::otherRNA);
    EXPECT_EQ(parse_feature_type("lncrna"), FeatureType::lncRNA);
    EXPECT_FALSE(parse_feature_type("dna").has_value());
    for (std::size_t t = 0; t < kFeatureTypeCount; ++t) {
        const auto type = static_cast<FeatureType>(t);
        EXPECT_EQ(parse_feature_type(to_string(type)), type);
    }
}
