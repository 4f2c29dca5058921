#pragma once

#include "rankfs/classifiers.hpp"
#include "rankfs/error.hpp"
#include "rankfs/fsfsp.hpp"
#include "rankfs/testkit.hpp"

#include <nlohmann/json.hpp>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace rankfs::pipeline {

// Bad configuration or usage; the CLI maps it to exit code 2.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Every key a config file may set, with its default value.
nlohmann::json default_config_json();

// `key.path=value`; the value is read as JSON when it parses, else as a string.
void apply_override(nlohmann::json& config, const std::string& assignment);

struct FeatureSetRef {
    std::string name; // "all" or "rank:N"
    std::size_t rank = 0; // 0 for "all"

    std::string tag() const; // file-name friendly: "all", "rank1"
};

struct PipelineConfig {
    nlohmann::json raw; // effective config, defaults merged in

    std::uint64_t seed = 1;
    std::size_t workers = 1;

    std::filesystem::path matrix;
    std::filesystem::path labels;
    std::filesystem::path feature_types;
    std::filesystem::path output_dir;

    bool filter = true;
    double filter_threshold = kDefaultLowExpressionThreshold;
    bool transform = true;

    SweepConfig sweep;

    std::vector<ClassifierSpec> classifiers; // one per kind, enum order
    std::vector<ClassifierKind> ensemble_members;

    std::size_t cv_k = 10;
    std::uint64_t cv_seed = 1;

    std::vector<FeatureSetRef> feature_sets;
    std::vector<std::string> models; // LR, SVM, GB, KNN, RF, mvEns, avEns

    std::string report_metric = "accuracy";
    int report_digits = 2;

    testkit::SynthSpec synth;

    // Parses a config document after merging it over the defaults. Unknown
    // keys and ill-typed values raise ConfigError.
    static PipelineConfig from_json(const nlohmann::json& user);

    const ClassifierSpec& classifier(ClassifierKind kind) const;

    // FNV-1a over the canonical effective config, excluding the worker count
    // and the output directory, which do not influence results.
    std::string hash() const;
};

PipelineConfig load_config(const std::optional<std::filesystem::path>& file, const std::vector<std::string>& overrides);

// Locations of artifacts under the output directory.
std::filesystem::path processed_dir(const PipelineConfig& cfg);
std::filesystem::path ranked_sets_path(const PipelineConfig& cfg);
std::filesystem::path evaluation_dir(const PipelineConfig& cfg);

// Each command writes its artifacts and logs progress lines to `log`.
void cmd_synth(const PipelineConfig& cfg, std::ostream& log);
void cmd_preprocess(const PipelineConfig& cfg, std::ostream& log);
void cmd_select(const PipelineConfig& cfg, std::ostream& log);
void cmd_evaluate(const PipelineConfig& cfg, std::ostream& log);
// Prints the rank-size and evaluation tables found in the output directory.
void cmd_report(const PipelineConfig& cfg, std::ostream& out);

// Models x feature sets table of one metric, as percentages.
std::string render_summary_table(const nlohmann::json& summary, const std::string& metric, int digits);
std::string render_rank_table(const RankedFeatureSets& sets);

} // namespace rankfs::pipeline
