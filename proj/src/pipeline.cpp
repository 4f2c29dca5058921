#include "rankfs/pipeline.hpp"

#include "rankfs/ensemble.hpp"
#include "rankfs/eval.hpp"
#include "rankfs/parallel.hpp"
#include "rankfs/random.hpp"

#include <chrono>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <ostream>
#include <sstream>

namespace rankfs::pipeline {

namespace fs = std::filesystem;

namespace {

constexpr ClassifierKind kKinds[] = {ClassifierKind::SoftmaxLR, ClassifierKind::LinearSVM, ClassifierKind::GradientBoost,
                                     ClassifierKind::KNN, ClassifierKind::RandomForest};
constexpr const char* kShortNames[] = {"LR", "SVM", "GB", "KNN", "RF"};

std::size_t kind_index(ClassifierKind kind)
{
    for (std::size_t i = 0; i < std::size(kKinds); ++i) {
        if (kKinds[i] == kind) return i;
    }
    throw InvalidArgument("unknown classifier kind");
}

std::optional<ClassifierKind> short_kind(const std::string& name)
{
    for (std::size_t i = 0; i < std::size(kKinds); ++i) {
        if (name == kShortNames[i]) return kKinds[i];
    }
    return std::nullopt;
}

bool is_ensemble(const std::string& model) { return model == "mvEns" || model == "avEns"; }

class Stopwatch {
public:
    Stopwatch(std::ostream& log, std::string stage)
        : log_(log)
        , stage_(std::move(stage))
        , start_(std::chrono::steady_clock::now())
    {
    }

    void line(const std::string& message)
    {
        const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - start_;
        std::lock_guard lock(mutex_);
        log_ << "[" << std::fixed << std::setprecision(1) << std::setw(7) << dt.count() << "s] " << stage_ << ": "
             << message << std::endl;
    }

private:
    std::ostream& log_;
    std::string stage_;
    std::chrono::steady_clock::time_point start_;
    std::mutex mutex_;
};

std::string key_path(const std::string& prefix, const std::string& key) { return prefix.empty() ? key : prefix + "." + key; }

bool same_kind(const nlohmann::json& a, const nlohmann::json& b)
{
    if (a.is_number() && b.is_number()) {
        // Integers may not silently become fractions.
        return !(a.is_number_integer() && b.is_number_float());
    }
    return a.type() == b.type();
}

// Overlays `user` onto `base`, refusing keys the defaults do not know.
void merge_checked(nlohmann::json& base, const nlohmann::json& user, const std::string& prefix)
{
    if (!user.is_object()) {
        throw ConfigError("config" + (prefix.empty() ? std::string() : " key '" + prefix + "'") + " must be an object");
    }
    for (const auto& [key, value] : user.items()) {
        const std::string path = key_path(prefix, key);
        if (!base.contains(key)) {
            throw ConfigError("unknown config key '" + path + "'");
        }
        auto& slot = base[key];
        if (slot.is_object()) {
            merge_checked(slot, value, path);
        } else if (!same_kind(slot, value)) {
            throw ConfigError("config key '" + path + "' has the wrong type (expected " + std::string(slot.type_name()) + ")");
        } else {
            slot = value;
        }
    }
}

template <class T>
T get(const nlohmann::json& j, const char* key, const std::string& section)
{
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError("config key '" + section + "." + key + "' is invalid");
    }
}

std::uint64_t fnv1a(std::string_view text)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string provenance_comment(const PipelineConfig& cfg)
{
    return "config_hash=" + cfg.hash() + " seed=" + std::to_string(cfg.seed);
}

void stamp(nlohmann::json& j, const PipelineConfig& cfg)
{
    j["config_hash"] = cfg.hash();
    j["seed"] = cfg.seed;
}

void write_text(const fs::path& path, const std::string& text)
{
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot write " + path.string());
    }
    out << text;
}

void write_json(const fs::path& path, const nlohmann::json& j) { write_text(path, j.dump(2) + "\n"); }

nlohmann::json read_json(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot read " + path.string() + " (run the earlier pipeline stage first)");
    }
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw Error(path.string() + ": " + e.what());
    }
}

void require_input(const fs::path& path, const char* what)
{
    if (path.empty()) {
        throw ConfigError(std::string("paths.") + what + " is not set");
    }
    if (!fs::is_regular_file(path)) {
        throw ConfigError(std::string(what) + " file not found: " + path.string());
    }
}

ExpressionDataset load_processed(const PipelineConfig& cfg)
{
    const auto dir = processed_dir(cfg);
    if (!fs::exists(dir / "matrix.csv")) {
        throw Error("no processed dataset in " + dir.string() + " (run preprocess first)");
    }
    return load_dataset(dir / "matrix.csv", dir / "labels.csv", dir / "feature_types.csv", cfg.transform).dataset;
}

std::string format_percent(double value, int digits)
{
    std::ostringstream s;
    s << std::fixed << std::setprecision(digits) << value * 100.0;
    return s.str();
}

std::string render_table(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows)
{
    std::vector<std::size_t> width(header.size(), 0);
    for (std::size_t c = 0; c < header.size(); ++c) {
        width[c] = header[c].size();
        for (const auto& r : rows) {
            width[c] = std::max(width[c], r[c].size());
        }
    }
    std::ostringstream s;
    auto emit = [&](const std::vector<std::string>& cells) {
        for (std::size_t c = 0; c < cells.size(); ++c) {
            if (c > 0) s << "  ";
            if (c == 0) {
                s << std::left << std::setw(static_cast<int>(width[c])) << cells[c];
            } else {
                s << std::right << std::setw(static_cast<int>(width[c])) << cells[c];
            }
        }
        s << '\n';
    };
    emit(header);
    std::size_t total = 0;
    for (auto w : width) total += w;
    s << std::string(total + 2 * (width.size() - 1), '-') << '\n';
    for (const auto& r : rows) emit(r);
    return s.str();
}

} // namespace

std::string FeatureSetRef::tag() const { return rank == 0 ? "all" : "rank" + std::to_string(rank); }

nlohmann::json default_config_json()
{
    nlohmann::json classifiers = nlohmann::json::object();
    for (std::size_t i = 0; i < std::size(kKinds); ++i) {
        classifiers[kShortNames[i]] = to_json(ClassifierSpec::defaults(kKinds[i])).at("params");
    }
    auto selection_forest = to_json(ForestConfig::for_selection());
    selection_forest.erase("seed");
    selection_forest.erase("max_depth"); // set per sweep depth
    selection_forest.erase("n_trees");
    const SweepConfig sweep;
    const testkit::SynthSpec synth;
    return {
        {"seed", 1},
        {"workers", 1},
        {"paths", {{"matrix", ""}, {"labels", ""}, {"feature_types", ""}, {"output_dir", "rankfs_out"}}},
        {"preprocess", {{"filter", true}, {"filter_threshold", kDefaultLowExpressionThreshold}, {"log_transform", true}}},
        {"sweep",
         {{"depths", sweep.depths},
          {"alpha", sweep.boruta.alpha},
          {"max_iter", sweep.boruta.max_iter},
          {"auto_trees", true},
          {"shadow_pool", "active"},
          {"n_trees", 100},
          {"forest", std::move(selection_forest)}}},
        {"classifiers", std::move(classifiers)},
        {"ensemble", {{"members", {"LR", "SVM", "GB"}}}},
        {"cv", {{"k", 10}, {"seed", 1}}},
        {"evaluate", {{"feature_sets", {"all"}}, {"models", {"LR", "SVM", "GB", "KNN", "RF", "mvEns", "avEns"}}}},
        {"report", {{"metric", "accuracy"}, {"digits", 2}}},
        {"synth",
         {{"n_samples", synth.n_samples},
          {"n_classes", synth.n_classes},
          {"n_informative", synth.n_informative},
          {"n_noise", synth.n_noise},
          {"feature_type_mix", synth.feature_type_mix},
          {"class_separation", synth.class_separation},
          {"imbalance", nlohmann::json::array()},
          {"seed", synth.seed}}},
    };
}

void apply_override(nlohmann::json& config, const std::string& assignment)
{
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) {
        throw ConfigError("override '" + assignment + "' is not of the form key.path=value");
    }
    const std::string path = assignment.substr(0, eq);
    const std::string text = assignment.substr(eq + 1);
    nlohmann::json value = nlohmann::json::parse(text, nullptr, false);
    if (value.is_discarded()) {
        value = text;
    }
    // Build a nested patch and let the checked merge validate it.
    nlohmann::json patch = value;
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
        const auto dot = path.find('.', start);
        parts.push_back(path.substr(start, dot - start));
        if (dot == std::string::npos) break;
        start = dot + 1;
    }
    for (auto it = parts.rbegin(); it != parts.rend(); ++it) {
        if (it->empty()) throw ConfigError("override '" + assignment + "' has an empty key segment");
        patch = nlohmann::json{{*it, std::move(patch)}};
    }
    merge_checked(config, patch, "");
}

PipelineConfig PipelineConfig::from_json(const nlohmann::json& user)
{
    PipelineConfig cfg;
    cfg.raw = default_config_json();
    merge_checked(cfg.raw, user, "");
    const auto& j = cfg.raw;

    cfg.seed = get<std::uint64_t>(j, "seed", "");
    cfg.workers = get<std::size_t>(j, "workers", "");
    if (cfg.workers < 1) throw ConfigError("workers must be >= 1");

    const auto& paths = j.at("paths");
    cfg.matrix = get<std::string>(paths, "matrix", "paths");
    cfg.labels = get<std::string>(paths, "labels", "paths");
    cfg.feature_types = get<std::string>(paths, "feature_types", "paths");
    cfg.output_dir = get<std::string>(paths, "output_dir", "paths");
    if (cfg.output_dir.empty()) throw ConfigError("paths.output_dir must not be empty");

    const auto& pre = j.at("preprocess");
    cfg.filter = get<bool>(pre, "filter", "preprocess");
    cfg.filter_threshold = get<double>(pre, "filter_threshold", "preprocess");
    cfg.transform = get<bool>(pre, "log_transform", "preprocess");
    if (!(cfg.filter_threshold > 0.0)) throw ConfigError("preprocess.filter_threshold must be > 0");

    const auto& sw = j.at("sweep");
    cfg.sweep.depths = get<std::vector<std::size_t>>(sw, "depths", "sweep");
    cfg.sweep.boruta.alpha = get<double>(sw, "alpha", "sweep");
    cfg.sweep.boruta.max_iter = get<std::size_t>(sw, "max_iter", "sweep");
    cfg.sweep.boruta.auto_trees = get<bool>(sw, "auto_trees", "sweep");
    const auto pool = parse_shadow_pool(get<std::string>(sw, "shadow_pool", "sweep"));
    if (!pool) throw ConfigError("sweep.shadow_pool must be 'active' or 'all'");
    cfg.sweep.boruta.shadow_pool = *pool;
    try {
        cfg.sweep.boruta.forest = forest_config_from_json(sw.at("forest"));
    } catch (const InvalidArgument& e) {
        throw ConfigError(std::string("sweep.forest: ") + e.what());
    } catch (const nlohmann::json::exception&) {
        throw ConfigError("sweep.forest is invalid");
    }
    cfg.sweep.boruta.forest.n_trees = get<std::size_t>(sw, "n_trees", "sweep");
    cfg.sweep.seed = derive_seed(cfg.seed, {1});
    cfg.sweep.boruta.seed = cfg.sweep.seed;

    for (std::size_t i = 0; i < std::size(kKinds); ++i) {
        try {
            cfg.classifiers.push_back(classifier_spec_from_json(
                {{"kind", std::string(to_string(kKinds[i]))}, {"params", j.at("classifiers").at(kShortNames[i])}}));
        } catch (const InvalidArgument& e) {
            throw ConfigError(std::string("classifiers.") + kShortNames[i] + ": " + e.what());
        } catch (const nlohmann::json::exception&) {
            throw ConfigError(std::string("classifiers.") + kShortNames[i] + " is invalid");
        }
    }

    for (const auto& name : get<std::vector<std::string>>(j.at("ensemble"), "members", "ensemble")) {
        const auto kind = short_kind(name);
        if (!kind) throw ConfigError("ensemble.members: unknown model '" + name + "'");
        cfg.ensemble_members.push_back(*kind);
    }
    if (cfg.ensemble_members.empty()) throw ConfigError("ensemble.members must not be empty");

    cfg.cv_k = get<std::size_t>(j.at("cv"), "k", "cv");
    cfg.cv_seed = get<std::uint64_t>(j.at("cv"), "seed", "cv");
    if (cfg.cv_k < 2) throw ConfigError("cv.k must be >= 2");

    for (const auto& name : get<std::vector<std::string>>(j.at("evaluate"), "feature_sets", "evaluate")) {
        FeatureSetRef ref{name, 0};
        if (name != "all") {
            std::size_t n = 0;
            const char* first = name.data() + 5;
            const char* last = name.data() + name.size();
            if (name.rfind("rank:", 0) != 0 || std::from_chars(first, last, n).ptr != last || first == last || n == 0) {
                throw ConfigError("evaluate.feature_sets: expected 'all' or 'rank:N', got '" + name + "'");
            }
            ref.rank = n;
        }
        cfg.feature_sets.push_back(std::move(ref));
    }
    if (cfg.feature_sets.empty()) throw ConfigError("evaluate.feature_sets must not be empty");
    cfg.models = get<std::vector<std::string>>(j.at("evaluate"), "models", "evaluate");
    if (cfg.models.empty()) throw ConfigError("evaluate.models must not be empty");
    for (const auto& m : cfg.models) {
        if (!is_ensemble(m) && !short_kind(m)) throw ConfigError("evaluate.models: unknown model '" + m + "'");
    }

    cfg.report_metric = get<std::string>(j.at("report"), "metric", "report");
    cfg.report_digits = get<int>(j.at("report"), "digits", "report");
    static const char* kMetrics[] = {"accuracy", "precision_macro", "recall_macro", "f1_macro", "kappa", "auc_macro"};
    if (std::find(std::begin(kMetrics), std::end(kMetrics), cfg.report_metric) == std::end(kMetrics)) {
        throw ConfigError("report.metric: unsupported metric '" + cfg.report_metric + "'");
    }
    if (cfg.report_digits < 0 || cfg.report_digits > 10) throw ConfigError("report.digits must be in [0, 10]");

    const auto& sy = j.at("synth");
    cfg.synth.n_samples = get<std::size_t>(sy, "n_samples", "synth");
    cfg.synth.n_classes = get<std::size_t>(sy, "n_classes", "synth");
    cfg.synth.n_informative = get<std::size_t>(sy, "n_informative", "synth");
    cfg.synth.n_noise = get<std::size_t>(sy, "n_noise", "synth");
    cfg.synth.feature_type_mix = get<std::array<double, 4>>(sy, "feature_type_mix", "synth");
    cfg.synth.class_separation = get<double>(sy, "class_separation", "synth");
    cfg.synth.imbalance = get<std::vector<double>>(sy, "imbalance", "synth");
    cfg.synth.seed = get<std::uint64_t>(sy, "seed", "synth");

    try {
        cfg.sweep.validate();
        cfg.synth.validate();
        for (const auto& c : cfg.classifiers) c.validate();
    } catch (const InvalidArgument& e) {
        throw ConfigError(e.what());
    }
    return cfg;
}

const ClassifierSpec& PipelineConfig::classifier(ClassifierKind kind) const { return classifiers.at(kind_index(kind)); }

std::string PipelineConfig::hash() const
{
    nlohmann::json canonical = raw;
    canonical.erase("workers");
    canonical["paths"].erase("output_dir");
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(canonical.dump())));
    return buf;
}

PipelineConfig load_config(const std::optional<fs::path>& file, const std::vector<std::string>& overrides)
{
    nlohmann::json user = nlohmann::json::object();
    if (file) {
        std::ifstream in(*file, std::ios::binary);
        if (!in) throw ConfigError("config file not found: " + file->string());
        user = nlohmann::json::parse(in, nullptr, false, true);
        if (user.is_discarded()) throw ConfigError("config file is not valid JSON: " + file->string());
    }
    // Overrides are validated against the defaults merged with the file.
    nlohmann::json merged = default_config_json();
    merge_checked(merged, user, "");
    for (const auto& o : overrides) {
        apply_override(merged, o);
    }
    return PipelineConfig::from_json(merged);
}

fs::path processed_dir(const PipelineConfig& cfg) { return cfg.output_dir / "processed"; }
fs::path ranked_sets_path(const PipelineConfig& cfg) { return cfg.output_dir / "ranked_sets.json"; }
fs::path evaluation_dir(const PipelineConfig& cfg) { return cfg.output_dir / "evaluation"; }

void cmd_synth(const PipelineConfig& cfg, std::ostream& log)
{
    Stopwatch clock(log, "synth");
    if (cfg.matrix.empty() || cfg.labels.empty() || cfg.feature_types.empty()) {
        throw ConfigError("synth needs paths.matrix, paths.labels and paths.feature_types");
    }
    const auto data = testkit::generate(cfg.synth);
    for (const auto& p : {cfg.matrix, cfg.labels, cfg.feature_types}) {
        if (p.has_parent_path()) fs::create_directories(p.parent_path());
    }
    save_dataset(data.dataset, cfg.matrix, cfg.labels, cfg.feature_types, provenance_comment(cfg));
    nlohmann::json truth{{"informative", data.informative}};
    stamp(truth, cfg);
    write_json(cfg.output_dir / "synth_truth.json", truth);
    clock.line(std::to_string(data.dataset.n_samples()) + " samples x " + std::to_string(data.dataset.n_features()) +
               " features written");
}

void cmd_preprocess(const PipelineConfig& cfg, std::ostream& log)
{
    Stopwatch clock(log, "preprocess");
    require_input(cfg.matrix, "matrix");
    require_input(cfg.labels, "labels");
    require_input(cfg.feature_types, "feature_types");
    auto loaded = load_dataset(cfg.matrix, cfg.labels, cfg.feature_types);
    clock.line("loaded " + std::to_string(loaded.dataset.n_samples()) + " x " + std::to_string(loaded.dataset.n_features()));

    ExpressionDataset ds = std::move(loaded.dataset);
    const std::size_t before = ds.n_features();
    if (cfg.filter) {
        ds = filter_low_expression(ds, cfg.filter_threshold);
        loaded.report.filtered_features = before - ds.n_features();
        clock.line("low-expression filter kept " + std::to_string(ds.n_features()) + " features");
    }
    if (cfg.transform) {
        ds = log_transform(ds);
    }
    const auto dir = processed_dir(cfg);
    fs::create_directories(dir);
    save_dataset(ds, dir / "matrix.csv", dir / "labels.csv", dir / "feature_types.csv", provenance_comment(cfg));

    nlohmann::json stats{{"partition_stats", to_json(compute_partition_stats(ds))},
                         {"load_report", loaded.report.to_json()},
                         {"log_transformed", ds.log_transformed()},
                         {"samples", ds.n_samples()},
                         {"features", ds.n_features()}};
    stamp(stats, cfg);
    write_json(cfg.output_dir / "partition_stats.json", stats);
    clock.line("wrote " + dir.string());
}

void cmd_select(const PipelineConfig& cfg, std::ostream& log)
{
    Stopwatch clock(log, "select");
    const ExpressionDataset ds = load_processed(cfg);
    clock.line("sweeping " + std::to_string(cfg.sweep.depths.size()) + " depths over " + std::to_string(ds.n_features()) +
               " features");
    std::size_t done = 0;
    std::mutex m;
    const auto sets = ranking_fsfsp(ds, cfg.sweep, [&](std::size_t depth) {
        std::size_t k;
        {
            std::lock_guard lock(m);
            k = ++done;
        }
        clock.line("depth " + std::to_string(depth) + " done (" + std::to_string(k) + "/" +
                   std::to_string(cfg.sweep.depths.size()) + ")");
    });
    nlohmann::json j = sets.to_json();
    stamp(j, cfg);
    write_json(ranked_sets_path(cfg), j);
    write_text(cfg.output_dir / "rank_sizes.txt", "# " + provenance_comment(cfg) + "\n" + render_rank_table(sets));
    clock.line("Rank_1 holds " + std::to_string(sets.ranks.empty() ? 0 : sets.ranks.front().size()) + " features");
}

void cmd_evaluate(const PipelineConfig& cfg, std::ostream& log)
{
    Stopwatch clock(log, "evaluate");
    const ExpressionDataset processed = load_processed(cfg);
    std::optional<RankedFeatureSets> ranked;
    for (const auto& fs_ref : cfg.feature_sets) {
        if (fs_ref.rank > 0 && !ranked) {
            ranked = RankedFeatureSets::from_json(read_json(ranked_sets_path(cfg)));
        }
    }

    // Base classifiers each model needs; every one is trained once per fold.
    std::vector<ClassifierKind> needed;
    auto need = [&](ClassifierKind k) {
        if (std::find(needed.begin(), needed.end(), k) == needed.end()) needed.push_back(k);
    };
    for (const auto& m : cfg.models) {
        if (is_ensemble(m)) {
            for (auto k : cfg.ensemble_members) need(k);
        } else {
            need(*short_kind(m));
        }
    }
    std::sort(needed.begin(), needed.end(), [](auto a, auto b) { return kind_index(a) < kind_index(b); });
    auto slot_of = [&](ClassifierKind k) {
        return static_cast<std::size_t>(std::find(needed.begin(), needed.end(), k) - needed.begin());
    };

    const auto out_dir = evaluation_dir(cfg);
    const std::string comment = provenance_comment(cfg);
    nlohmann::json summary{{"models", cfg.models},
                           {"feature_sets", nlohmann::json::array()},
                           {"results", nlohmann::json::object()},
                           {"cv", {{"k", cfg.cv_k}, {"seed", cfg.cv_seed}, {"stratified", true}}},
                           {"averaging", "macro"}};
    stamp(summary, cfg);

    for (std::size_t fi = 0; fi < cfg.feature_sets.size(); ++fi) {
        const auto& fs_ref = cfg.feature_sets[fi];
        ExpressionDataset ds = processed;
        if (fs_ref.rank > 0) {
            if (fs_ref.rank > ranked->ranks.size()) {
                throw ConfigError("feature set " + fs_ref.name + " exceeds the sweep length " +
                                  std::to_string(ranked->ranks.size()));
            }
            ds = apply_feature_set(processed, ranked->rank(fs_ref.rank));
        }
        summary["feature_sets"].push_back({{"name", fs_ref.name}, {"n_features", ds.n_features()}});
        clock.line(fs_ref.name + ": " + std::to_string(ds.n_features()) + " features, " + std::to_string(cfg.cv_k) +
                   " folds");

        const FoldPlan plan = stratified_folds(ds.labels(), cfg.cv_k, cfg.cv_seed, ds.class_names());
        std::vector<std::size_t> ties(plan.k, 0);
        const auto pipeline = [&](const ExpressionDataset& train_ds, const ExpressionDataset& test_ds, std::size_t fold) {
            std::vector<ProbabilityMatrix> probs(needed.size());
            parallel_for(needed.size(), [&](std::size_t s) {
                ClassifierSpec spec = cfg.classifier(needed[s]);
                spec.seed = derive_seed(cfg.seed, {2, fold, kind_index(needed[s])});
                probs[s] = train(spec, train_ds).predict_proba(test_ds);
            });
            std::vector<ProbabilityMatrix> members;
            for (auto k : cfg.ensemble_members) members.push_back(probs[slot_of(k)]);
            std::vector<FoldOutput> outputs;
            for (const auto& m : cfg.models) {
                if (is_ensemble(m)) {
                    const auto pred = fuse(m == "mvEns" ? Fusion::MaxVote : Fusion::AverageVote, members);
                    if (m == "mvEns") ties[fold] = pred.tie_count;
                    outputs.push_back({pred.labels, pred.probabilities});
                } else {
                    const auto& p = probs[slot_of(*short_kind(m))];
                    outputs.push_back({argmax_rows(p), p});
                }
            }
            return outputs;
        };
        const auto results = cross_validate_models(pipeline, cfg.models.size(), ds, plan);

        for (std::size_t mi = 0; mi < cfg.models.size(); ++mi) {
            const auto& model = cfg.models[mi];
            const auto& r = results[mi];
            const std::string stem = model + "_" + fs_ref.tag();
            nlohmann::json report = r.to_json(ds.class_names());
            report["model"] = model;
            report["feature_set"] = fs_ref.name;
            report["n_features"] = ds.n_features();
            if (model == "mvEns") {
                std::size_t total = 0;
                for (auto t : ties) total += t;
                report["tie_count"] = total;
            }
            stamp(report, cfg);
            write_json(out_dir / (stem + "_metrics.json"), report);
            write_confusion_csv(r.confusion, ds.class_names(), out_dir / (stem + "_confusion.csv"), comment);
            if (!r.mean_roc.empty()) {
                write_roc_csv(r.mean_roc, ds.class_names(), out_dir / (stem + "_roc.csv"), comment);
            }
            const auto agg = r.aggregate.to_json(ds.class_names());
            nlohmann::json row{{"accuracy", agg.at("accuracy")},       {"precision_macro", agg.at("precision_macro")},
                               {"recall_macro", agg.at("recall_macro")}, {"f1_macro", agg.at("f1_macro")},
                               {"kappa", agg.at("kappa")},             {"auc_macro", agg.value("auc_macro", nlohmann::json())}};
            summary["results"][model][fs_ref.name] = std::move(row);
            clock.line(fs_ref.name + " " + model + " accuracy " + format_percent(r.aggregate.accuracy, 2) + "%");
        }
        write_json(cfg.output_dir / "evaluation_summary.json", summary);
    }
    write_text(cfg.output_dir / "summary.txt",
               "# " + comment + "\n" + render_summary_table(summary, cfg.report_metric, cfg.report_digits));
}

void cmd_report(const PipelineConfig& cfg, std::ostream& out)
{
    bool any = false;
    if (fs::exists(ranked_sets_path(cfg))) {
        out << render_rank_table(RankedFeatureSets::from_json(read_json(ranked_sets_path(cfg)))) << '\n';
        any = true;
    }
    const auto summary_path = cfg.output_dir / "evaluation_summary.json";
    if (fs::exists(summary_path)) {
        out << render_summary_table(read_json(summary_path), cfg.report_metric, cfg.report_digits);
        any = true;
    }
    if (!any) {
        throw Error("nothing to report in " + cfg.output_dir.string());
    }
}

std::string render_summary_table(const nlohmann::json& summary, const std::string& metric, int digits)
{
    std::vector<std::string> header{"model"};
    std::vector<std::string> sets;
    for (const auto& f : summary.at("feature_sets")) {
        sets.push_back(f.at("name").get<std::string>());
        header.push_back(sets.back() + " (" + std::to_string(f.at("n_features").get<std::size_t>()) + ")");
    }
    std::vector<std::vector<std::string>> rows;
    for (const auto& m : summary.at("models")) {
        const auto model = m.get<std::string>();
        std::vector<std::string> row{model};
        for (const auto& s : sets) {
            const auto& res = summary.at("results");
            if (!res.contains(model) || !res.at(model).contains(s) || res.at(model).at(s).at(metric).is_null()) {
                row.push_back("-");
            } else {
                row.push_back(format_percent(res.at(model).at(s).at(metric).get<double>(), digits));
            }
        }
        rows.push_back(std::move(row));
    }
    return metric + " (%), " + std::to_string(summary.at("cv").at("k").get<std::size_t>()) + "-fold CV\n" +
           render_table(header, rows);
}

std::string render_rank_table(const RankedFeatureSets& sets)
{
    std::vector<std::string> header{"Feature set"};
    std::vector<std::string> sizes{"No. of features"};
    for (std::size_t n = 1; n <= sets.ranks.size(); ++n) {
        header.push_back("Rank_" + std::to_string(n));
        sizes.push_back(std::to_string(sets.rank(n).size()));
    }
    return render_table(header, {sizes});
}

} // namespace rankfs::pipeline
