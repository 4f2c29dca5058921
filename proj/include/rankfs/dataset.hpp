#pragma once

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace rankfs {

using Matrix = Eigen::MatrixXd;

enum class FeatureType { mRNA = 0, miRNA = 1, lncRNA = 2, otherRNA = 3 };

inline constexpr std::size_t kFeatureTypeCount = 4;

std::string_view to_string(FeatureType type);
// Accepts the canonical names case-insensitively plus "other" and "othRNA".
std::optional<FeatureType> parse_feature_type(std::string_view text);

struct FeatureEntry {
    std::string id;
    FeatureType type = FeatureType::otherRNA;
};

class FeatureCatalog {
public:
    FeatureCatalog() = default;
    explicit FeatureCatalog(std::vector<FeatureEntry> entries);

    std::size_t size() const noexcept { return entries_.size(); }
    bool empty() const noexcept { return entries_.empty(); }
    const FeatureEntry& operator[](std::size_t i) const { return entries_[i]; }
    const std::vector<FeatureEntry>& entries() const noexcept { return entries_; }

    std::optional<std::size_t> find(std::string_view id) const;
    FeatureCatalog subset(std::span<const std::size_t> columns) const;

private:
    std::vector<FeatureEntry> entries_;
    std::unordered_map<std::string, std::size_t> index_;
};

// Samples in rows, features in columns. Immutable after construction; every
// transform returns a new dataset.
class ExpressionDataset {
public:
    ExpressionDataset(Matrix values,
                      std::vector<std::string> sample_ids,
                      std::vector<int> labels,
                      std::vector<std::string> class_names,
                      FeatureCatalog catalog,
                      bool log_transformed = false);

    const Matrix& values() const noexcept { return values_; }
    const std::vector<std::string>& sample_ids() const noexcept { return sample_ids_; }
    // Class codes index into class_names(). Codes follow sorted class-name order
    // when produced by the loader.
    const std::vector<int>& labels() const noexcept { return labels_; }
    const std::vector<std::string>& class_names() const noexcept { return class_names_; }
    const FeatureCatalog& catalog() const noexcept { return catalog_; }
    bool log_transformed() const noexcept { return log_transformed_; }

    std::size_t n_samples() const noexcept { return static_cast<std::size_t>(values_.rows()); }
    std::size_t n_features() const noexcept { return static_cast<std::size_t>(values_.cols()); }
    std::size_t n_classes() const noexcept { return class_names_.size(); }
    // Number of distinct class codes that actually occur in labels().
    std::size_t n_present_classes() const;

    ExpressionDataset select_rows(std::span<const std::size_t> rows) const;
    ExpressionDataset select_columns(std::span<const std::size_t> columns) const;
    ExpressionDataset with_labels(std::vector<int> labels) const;

private:
    Matrix values_;
    std::vector<std::string> sample_ids_;
    std::vector<int> labels_;
    std::vector<std::string> class_names_;
    FeatureCatalog catalog_;
    bool log_transformed_;
};

struct LoadReport {
    std::size_t samples = 0;
    std::size_t features = 0;
    std::size_t filtered_features = 0;
    std::size_t unmapped_types = 0;
    std::vector<std::string> unmapped_feature_ids;

    nlohmann::json to_json() const;
};

struct LoadedDataset {
    ExpressionDataset dataset;
    LoadReport report;
};

// Delimited text: comma or tab, detected from the header line. Lines starting
// with '#' are skipped. The matrix header names the features; its first cell is
// a corner label. Labels and feature-type files are two-column maps with an
// optional header row.
LoadedDataset load_dataset(const std::filesystem::path& matrix_path,
                           const std::filesystem::path& labels_path,
                           const std::filesystem::path& feature_types_path,
                           bool log_transformed = false);

// Writes the three files load_dataset reads. Values use round-trip precision.
// `header_comment`, when non-empty, is written as a leading '#' line.
void save_dataset(const ExpressionDataset& ds,
                  const std::filesystem::path& matrix_path,
                  const std::filesystem::path& labels_path,
                  const std::filesystem::path& feature_types_path,
                  const std::string& header_comment = {});

inline constexpr double kDefaultLowExpressionThreshold = 0.05;

// Drops every feature whose column mean is strictly below `threshold`.
ExpressionDataset filter_low_expression(const ExpressionDataset& ds,
                                        double threshold = kDefaultLowExpressionThreshold);

// x -> log2(x + 1). Refuses datasets already flagged as transformed.
ExpressionDataset log_transform(const ExpressionDataset& ds);

// One dataset per feature type present, in enum order, columns in original order.
std::vector<ExpressionDataset> partition_by_type(const ExpressionDataset& ds);

struct PartitionStats {
    std::string group; // "All" or a feature type name
    std::size_t count = 0;
    double min = 0.0;
    double max = 0.0;
    double mean = 0.0;
    double sd = 0.0; // population convention (divide by n)
};

// First entry is "All", followed by each feature type present in enum order.
std::vector<PartitionStats> compute_partition_stats(const ExpressionDataset& ds);
// Stats over every cell of the dataset, labelled with `group`.
PartitionStats cell_stats(const ExpressionDataset& ds, std::string group);

nlohmann::json to_json(const PartitionStats& stats);
nlohmann::json to_json(const std::vector<PartitionStats>& stats);

// Column indices of `ids` in the dataset catalog; throws InvalidArgument on an unknown id.
std::vector<std::size_t> column_indices(const ExpressionDataset& ds, std::span<const std::string> ids);

} // namespace rankfs
