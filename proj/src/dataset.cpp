#include "rankfs/dataset.hpp"

#include "rankfs/error.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <unordered_set>

namespace rankfs {

LoadError::LoadError(std::string file, std::size_t row, std::size_t column, const std::string& what)
    : Error([&] {
        std::string msg = file;
        if (row > 0) {
            msg += ":" + std::to_string(row);
        }
        if (column > 0) {
            msg += ":" + std::to_string(column);
        }
        return msg + ": " + what;
    }())
    , file_(std::move(file))
    , row_(row)
    , column_(column)
{
}

std::string_view to_string(FeatureType type)
{
    switch (type) {
    case FeatureType::mRNA: return "mRNA";
    case FeatureType::miRNA: return "miRNA";
    case FeatureType::lncRNA: return "lncRNA";
    case FeatureType::otherRNA: return "otherRNA";
    }
    return "otherRNA";
}

std::optional<FeatureType> parse_feature_type(std::string_view text)
{
    std::string lower(text);
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (lower == "mrna" || lower == "protein_coding") return FeatureType::mRNA;
    if (lower == "mirna") return FeatureType::miRNA;
    if (lower == "lncrna") return FeatureType::lncRNA;
    if (lower == "otherrna" || lower == "other" || lower == "othrna") return FeatureType::otherRNA;
    return std::nullopt;
}

FeatureCatalog::FeatureCatalog(std::vector<FeatureEntry> entries)
    : entries_(std::move(entries))
{
    index_.reserve(entries_.size());
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        if (!index_.emplace(entries_[i].id, i).second) {
            throw InvalidArgument("duplicate feature id '" + entries_[i].id + "'");
        }
    }
}

std::optional<std::size_t> FeatureCatalog::find(std::string_view id) const
{
    auto it = index_.find(std::string(id));
    if (it == index_.end()) {
        return std::nullopt;
    }
    return it->second;
}

FeatureCatalog FeatureCatalog::subset(std::span<const std::size_t> columns) const
{
    std::vector<FeatureEntry> out;
    out.reserve(columns.size());
    for (std::size_t c : columns) {
        out.push_back(entries_.at(c));
    }
    return FeatureCatalog(std::move(out));
}

ExpressionDataset::ExpressionDataset(Matrix values,
                                     std::vector<std::string> sample_ids,
                                     std::vector<int> labels,
                                     std::vector<std::string> class_names,
                                     FeatureCatalog catalog,
                                     bool log_transformed)
    : values_(std::move(values))
    , sample_ids_(std::move(sample_ids))
    , labels_(std::move(labels))
    , class_names_(std::move(class_names))
    , catalog_(std::move(catalog))
    , log_transformed_(log_transformed)
{
    const auto rows = static_cast<std::size_t>(values_.rows());
    if (sample_ids_.size() != rows || labels_.size() != rows) {
        throw InvalidArgument("dataset: row count, sample ids and labels disagree");
    }
    if (catalog_.size() != static_cast<std::size_t>(values_.cols())) {
        throw InvalidArgument("dataset: column count does not match feature catalog");
    }
    std::unordered_set<std::string> seen;
    seen.reserve(rows);
    for (const auto& id : sample_ids_) {
        if (!seen.insert(id).second) {
            throw InvalidArgument("dataset: duplicate sample id '" + id + "'");
        }
    }
    for (int code : labels_) {
        if (code < 0 || static_cast<std::size_t>(code) >= class_names_.size()) {
            throw InvalidArgument("dataset: label code out of range");
        }
    }
    if (!values_.allFinite()) {
        throw InvalidArgument("dataset: non-finite value");
    }
    if (values_.size() > 0 && values_.minCoeff() < 0.0) {
        throw InvalidArgument("dataset: negative value");
    }
}

std::size_t ExpressionDataset::n_present_classes() const
{
    std::vector<bool> present(class_names_.size(), false);
    for (int code : labels_) {
        present[static_cast<std::size_t>(code)] = true;
    }
    return static_cast<std::size_t>(std::count(present.begin(), present.end(), true));
}

ExpressionDataset ExpressionDataset::select_rows(std::span<const std::size_t> rows) const
{
    Matrix values(static_cast<Eigen::Index>(rows.size()), values_.cols());
    std::vector<std::string> ids;
    std::vector<int> labels;
    ids.reserve(rows.size());
    labels.reserve(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        values.row(static_cast<Eigen::Index>(r)) = values_.row(static_cast<Eigen::Index>(rows[r]));
        ids.push_back(sample_ids_.at(rows[r]));
        labels.push_back(labels_.at(rows[r]));
    }
    return ExpressionDataset(std::move(values), std::move(ids), std::move(labels), class_names_, catalog_, log_transformed_);
}

ExpressionDataset ExpressionDataset::select_columns(std::span<const std::size_t> columns) const
{
    Matrix values(values_.rows(), static_cast<Eigen::Index>(columns.size()));
    for (std::size_t c = 0; c < columns.size(); ++c) {
        if (columns[c] >= n_features()) {
            throw InvalidArgument("dataset: column index out of range");
        }
        values.col(static_cast<Eigen::Index>(c)) = values_.col(static_cast<Eigen::Index>(columns[c]));
    }
    return ExpressionDataset(std::move(values), sample_ids_, labels_, class_names_, catalog_.subset(columns), log_transformed_);
}

ExpressionDataset ExpressionDataset::with_labels(std::vector<int> labels) const
{
    return ExpressionDataset(values_, sample_ids_, std::move(labels), class_names_, catalog_, log_transformed_);
}

nlohmann::json LoadReport::to_json() const
{
    return nlohmann::json{
        {"samples", samples},
        {"features", features},
        {"filtered_features", filtered_features},
        {"unmapped_types", unmapped_types},
        {"unmapped_feature_ids", unmapped_feature_ids},
    };
}

namespace {

struct Line {
    std::size_t number; // 1-based
    std::vector<std::string> fields;
};

void strip_cr(std::string& s)
{
    if (!s.empty() && s.back() == '\r') {
        s.pop_back();
    }
}

std::string trim(std::string_view s)
{
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::vector<std::string> split(const std::string& line, char delim)
{
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = line.find(delim, start);
        out.push_back(trim(std::string_view(line).substr(start, pos == std::string::npos ? std::string::npos : pos - start)));
        if (pos == std::string::npos) {
            break;
        }
        start = pos + 1;
    }
    return out;
}

// Reads all non-blank, non-comment lines; the delimiter is taken from the first one.
std::vector<Line> read_delimited(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw LoadError(path.string(), 0, 0, "cannot open file");
    }
    std::vector<Line> lines;
    std::string raw;
    std::size_t number = 0;
    char delim = 0;
    while (std::getline(in, raw)) {
        ++number;
        strip_cr(raw);
        if (trim(raw).empty() || raw.front() == '#') {
            continue;
        }
        if (delim == 0) {
            delim = raw.find('\t') != std::string::npos ? '\t' : ',';
        }
        lines.push_back({number, split(raw, delim)});
    }
    return lines;
}

double parse_cell(const std::string& text, const std::filesystem::path& path, std::size_t row, std::size_t col)
{
    double value = 0.0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    if (!text.empty() && *first == '+') {
        ++first;
    }
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (text.empty() || ec != std::errc() || ptr != last) {
        throw LoadError(path.string(), row, col, "non-numeric cell '" + text + "'");
    }
    if (!std::isfinite(value)) {
        throw LoadError(path.string(), row, col, "non-finite cell '" + text + "'");
    }
    if (value < 0.0) {
        throw LoadError(path.string(), row, col, "negative cell '" + text + "'");
    }
    return value;
}

} // namespace

LoadedDataset load_dataset(const std::filesystem::path& matrix_path,
                           const std::filesystem::path& labels_path,
                           const std::filesystem::path& feature_types_path,
                           bool log_transformed)
{
    const auto matrix_lines = read_delimited(matrix_path);
    if (matrix_lines.empty()) {
        throw LoadError(matrix_path.string(), 0, 0, "empty matrix file");
    }
    const auto& header = matrix_lines.front();
    if (header.fields.size() < 2) {
        throw LoadError(matrix_path.string(), header.number, 0, "header names no features");
    }
    std::vector<std::string> feature_ids(header.fields.begin() + 1, header.fields.end());
    {
        std::unordered_set<std::string> seen;
        for (std::size_t c = 0; c < feature_ids.size(); ++c) {
            if (feature_ids[c].empty()) {
                throw LoadError(matrix_path.string(), header.number, c + 2, "empty feature id");
            }
            if (!seen.insert(feature_ids[c]).second) {
                throw LoadError(matrix_path.string(), header.number, c + 2, "duplicate feature id '" + feature_ids[c] + "'");
            }
        }
    }

    const std::size_t n_rows = matrix_lines.size() - 1;
    const std::size_t n_cols = feature_ids.size();
    Matrix values(static_cast<Eigen::Index>(n_rows), static_cast<Eigen::Index>(n_cols));
    std::vector<std::string> sample_ids;
    sample_ids.reserve(n_rows);
    std::unordered_map<std::string, std::size_t> sample_index;
    for (std::size_t r = 0; r < n_rows; ++r) {
        const auto& line = matrix_lines[r + 1];
        if (line.fields.size() != n_cols + 1) {
            throw LoadError(matrix_path.string(), line.number, 0,
                            "dimension mismatch: expected " + std::to_string(n_cols + 1) + " fields, found " + std::to_string(line.fields.size()));
        }
        const std::string& id = line.fields[0];
        if (id.empty()) {
            throw LoadError(matrix_path.string(), line.number, 1, "empty sample id");
        }
        if (!sample_index.emplace(id, r).second) {
            throw LoadError(matrix_path.string(), line.number, 1, "duplicate sample id '" + id + "'");
        }
        sample_ids.push_back(id);
        for (std::size_t c = 0; c < n_cols; ++c) {
            values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = parse_cell(line.fields[c + 1], matrix_path, line.number, c + 2);
        }
    }
    if (n_rows == 0) {
        throw LoadError(matrix_path.string(), 0, 0, "matrix has no samples");
    }

    // Labels: sample_id -> class name.
    const auto label_lines = read_delimited(labels_path);
    std::vector<std::string> class_of(n_rows);
    std::vector<bool> labelled(n_rows, false);
    for (std::size_t i = 0; i < label_lines.size(); ++i) {
        const auto& line = label_lines[i];
        if (line.fields.size() != 2) {
            throw LoadError(labels_path.string(), line.number, 0, "expected 2 fields (sample_id, class)");
        }
        auto it = sample_index.find(line.fields[0]);
        if (it == sample_index.end()) {
            if (i == 0) {
                continue; // header row
            }
            throw LoadError(labels_path.string(), line.number, 1, "unknown sample '" + line.fields[0] + "'");
        }
        if (labelled[it->second]) {
            throw LoadError(labels_path.string(), line.number, 1, "duplicate label for sample '" + line.fields[0] + "'");
        }
        if (line.fields[1].empty()) {
            throw LoadError(labels_path.string(), line.number, 2, "empty class name");
        }
        class_of[it->second] = line.fields[1];
        labelled[it->second] = true;
    }
    for (std::size_t r = 0; r < n_rows; ++r) {
        if (!labelled[r]) {
            throw LoadError(labels_path.string(), 0, 0, "sample '" + sample_ids[r] + "' has no label");
        }
    }
    std::set<std::string> class_set(class_of.begin(), class_of.end());
    std::vector<std::string> class_names(class_set.begin(), class_set.end());
    std::map<std::string, int> class_code;
    for (std::size_t k = 0; k < class_names.size(); ++k) {
        class_code[class_names[k]] = static_cast<int>(k);
    }
    std::vector<int> labels(n_rows);
    for (std::size_t r = 0; r < n_rows; ++r) {
        labels[r] = class_code.at(class_of[r]);
    }

    // Feature types: feature_id -> type. Unmapped features fall back to otherRNA.
    std::unordered_map<std::string, std::size_t> feature_index;
    for (std::size_t c = 0; c < n_cols; ++c) {
        feature_index.emplace(feature_ids[c], c);
    }
    std::vector<std::optional<FeatureType>> types(n_cols);
    const auto type_lines = read_delimited(feature_types_path);
    for (std::size_t i = 0; i < type_lines.size(); ++i) {
        const auto& line = type_lines[i];
        if (line.fields.size() != 2) {
            throw LoadError(feature_types_path.string(), line.number, 0, "expected 2 fields (feature_id, type)");
        }
        auto type = parse_feature_type(line.fields[1]);
        auto it = feature_index.find(line.fields[0]);
        if (i == 0 && (it == feature_index.end() || !type)) {
            continue; // header row
        }
        if (!type) {
            throw LoadError(feature_types_path.string(), line.number, 2, "unknown feature type '" + line.fields[1] + "'");
        }
        if (it == feature_index.end()) {
            continue; // types for features absent from the matrix are ignored
        }
        types[it->second] = *type;
    }

    LoadReport report;
    report.samples = n_rows;
    report.features = n_cols;
    std::vector<FeatureEntry> entries;
    entries.reserve(n_cols);
    for (std::size_t c = 0; c < n_cols; ++c) {
        if (!types[c]) {
            ++report.unmapped_types;
            report.unmapped_feature_ids.push_back(feature_ids[c]);
        }
        entries.push_back({feature_ids[c], types[c].value_or(FeatureType::otherRNA)});
    }

    ExpressionDataset ds(std::move(values), std::move(sample_ids), std::move(labels), std::move(class_names),
                         FeatureCatalog(std::move(entries)), log_transformed);
    return {std::move(ds), std::move(report)};
}

namespace {

std::string format_double(double v)
{
    std::array<char, 32> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    (void)ec;
    return std::string(buf.data(), ptr);
}

std::ofstream open_for_write(const std::filesystem::path& path)
{
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot write " + path.string());
    }
    return out;
}

} // namespace

void save_dataset(const ExpressionDataset& ds,
                  const std::filesystem::path& matrix_path,
                  const std::filesystem::path& labels_path,
                  const std::filesystem::path& feature_types_path,
                  const std::string& header_comment)
{
    auto comment = [&](std::ofstream& out) {
        if (!header_comment.empty()) {
            out << "# " << header_comment << '\n';
        }
    };
    {
        auto out = open_for_write(matrix_path);
        comment(out);
        out << "sample_id";
        for (const auto& e : ds.catalog().entries()) {
            out << ',' << e.id;
        }
        out << '\n';
        std::string row;
        for (std::size_t r = 0; r < ds.n_samples(); ++r) {
            row = ds.sample_ids()[r];
            for (std::size_t c = 0; c < ds.n_features(); ++c) {
                row += ',';
                row += format_double(ds.values()(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)));
            }
            row += '\n';
            out << row;
        }
    }
    {
        auto out = open_for_write(labels_path);
        comment(out);
        out << "sample_id,class\n";
        for (std::size_t r = 0; r < ds.n_samples(); ++r) {
            out << ds.sample_ids()[r] << ',' << ds.class_names()[static_cast<std::size_t>(ds.labels()[r])] << '\n';
        }
    }
    {
        auto out = open_for_write(feature_types_path);
        comment(out);
        out << "feature_id,type\n";
        for (const auto& e : ds.catalog().entries()) {
            out << e.id << ',' << to_string(e.type) << '\n';
        }
    }
}

ExpressionDataset filter_low_expression(const ExpressionDataset& ds, double threshold)
{
    if (!(threshold > 0.0)) {
        throw InvalidArgument("filter_low_expression: threshold must be > 0");
    }
    if (ds.log_transformed()) {
        throw InvalidArgument("filter_low_expression: expects raw (untransformed) values");
    }
    std::vector<std::size_t> keep;
    const Eigen::VectorXd means = ds.values().colwise().mean();
    for (std::size_t c = 0; c < ds.n_features(); ++c) {
        if (!(means(static_cast<Eigen::Index>(c)) < threshold)) {
            keep.push_back(c);
        }
    }
    if (keep.empty()) {
        throw InvalidArgument("filter_low_expression: every feature was removed (empty feature space)");
    }
    return ds.select_columns(keep);
}

ExpressionDataset log_transform(const ExpressionDataset& ds)
{
    if (ds.log_transformed()) {
        throw InvalidArgument("log_transform: dataset is already log-transformed");
    }
    Matrix values = ds.values().unaryExpr([](double x) { return std::log2(x + 1.0); });
    return ExpressionDataset(std::move(values), ds.sample_ids(), ds.labels(), ds.class_names(), ds.catalog(), true);
}

std::vector<ExpressionDataset> partition_by_type(const ExpressionDataset& ds)
{
    std::array<std::vector<std::size_t>, kFeatureTypeCount> groups;
    for (std::size_t c = 0; c < ds.n_features(); ++c) {
        groups[static_cast<std::size_t>(ds.catalog()[c].type)].push_back(c);
    }
    std::vector<ExpressionDataset> parts;
    for (const auto& cols : groups) {
        if (!cols.empty()) {
            parts.push_back(ds.select_columns(cols));
        }
    }
    return parts;
}

PartitionStats cell_stats(const ExpressionDataset& ds, std::string group)
{
    PartitionStats s;
    s.group = std::move(group);
    s.count = ds.n_features();
    const auto& v = ds.values();
    if (v.size() == 0) {
        return s;
    }
    long double sum = 0.0L;
    for (Eigen::Index j = 0; j < v.cols(); ++j) {
        for (Eigen::Index i = 0; i < v.rows(); ++i) {
            sum += v(i, j);
        }
    }
    const long double n = static_cast<long double>(v.size());
    const long double mean = sum / n;
    long double ss = 0.0L;
    for (Eigen::Index j = 0; j < v.cols(); ++j) {
        for (Eigen::Index i = 0; i < v.rows(); ++i) {
            const long double d = v(i, j) - mean;
            ss += d * d;
        }
    }
    s.min = v.minCoeff();
    s.max = v.maxCoeff();
    s.mean = std::clamp(static_cast<double>(mean), s.min, s.max);
    s.sd = static_cast<double>(std::sqrt(ss / n));
    return s;
}

std::vector<PartitionStats> compute_partition_stats(const ExpressionDataset& ds)
{
    std::vector<PartitionStats> out;
    out.push_back(cell_stats(ds, "All"));
    for (const auto& part : partition_by_type(ds)) {
        out.push_back(cell_stats(part, std::string(to_string(part.catalog()[0].type))));
    }
    return out;
}

nlohmann::json to_json(const PartitionStats& s)
{
    return nlohmann::json{{"group", s.group}, {"count", s.count}, {"min", s.min}, {"max", s.max}, {"mean", s.mean}, {"sd", s.sd}};
}

nlohmann::json to_json(const std::vector<PartitionStats>& stats)
{
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& s : stats) {
        arr.push_back(to_json(s));
    }
    return arr;
}

std::vector<std::size_t> column_indices(const ExpressionDataset& ds, std::span<const std::string> ids)
{
    std::vector<std::size_t> cols;
    cols.reserve(ids.size());
    for (const auto& id : ids) {
        auto c = ds.catalog().find(id);
        if (!c) {
            throw InvalidArgument("unknown feature id '" + id + "'");
        }
        cols.push_back(*c);
    }
    return cols;
}

} // namespace rankfs
