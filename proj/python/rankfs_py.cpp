#include "rankfs/boruta.hpp"
#include "rankfs/classifiers.hpp"
#include "rankfs/dataset.hpp"
#include "rankfs/ensemble.hpp"
#include "rankfs/eval.hpp"
#include "rankfs/fsfsp.hpp"
#include "rankfs/parallel.hpp"
#include "rankfs/pipeline.hpp"
#include "rankfs/testkit.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

namespace py = pybind11;
using namespace rankfs;

namespace {

// JSON crosses the boundary as text, parsed by the stdlib json module.
py::object to_py(const nlohmann::json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

nlohmann::json from_py(const py::object& o)
{
    return nlohmann::json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

ExpressionDataset make_dataset(Matrix values, std::vector<int> labels, std::vector<std::string> class_names,
                               std::vector<std::string> feature_ids, std::vector<std::string> feature_types,
                               std::optional<std::vector<std::string>> sample_ids, bool log_transformed)
{
    if (feature_ids.size() != feature_types.size()) {
        throw InvalidArgument("feature_ids and feature_types differ in length");
    }
    std::vector<FeatureEntry> entries;
    for (std::size_t j = 0; j < feature_ids.size(); ++j) {
        const auto type = parse_feature_type(feature_types[j]);
        if (!type) throw InvalidArgument("unknown feature type '" + feature_types[j] + "'");
        entries.push_back({feature_ids[j], *type});
    }
    std::vector<std::string> samples;
    if (sample_ids) {
        samples = std::move(*sample_ids);
    } else {
        for (Eigen::Index i = 0; i < values.rows(); ++i) samples.push_back("s" + std::to_string(i));
    }
    return ExpressionDataset(std::move(values), std::move(samples), std::move(labels), std::move(class_names),
                             FeatureCatalog(std::move(entries)), log_transformed);
}

BorutaConfig boruta_config(std::uint64_t seed, std::size_t max_iter, double alpha, std::size_t max_depth,
                           std::optional<std::size_t> n_trees, const std::string& shadow_pool)
{
    BorutaConfig cfg;
    cfg.seed = seed;
    cfg.max_iter = max_iter;
    cfg.alpha = alpha;
    cfg.forest = ForestConfig::for_selection(max_depth);
    if (n_trees) {
        cfg.auto_trees = false;
        cfg.forest.n_trees = *n_trees;
    }
    const auto pool = parse_shadow_pool(shadow_pool);
    if (!pool) throw InvalidArgument("shadow_pool must be 'active' or 'all'");
    cfg.shadow_pool = *pool;
    return cfg;
}

ClassifierKind kind_from(const std::string& name)
{
    if (auto k = parse_classifier_kind(name)) return *k;
    throw InvalidArgument("unknown classifier '" + name + "'");
}

} // namespace

PYBIND11_MODULE(rankfs, m)
{
    m.doc() = "Feature-space partitioned Boruta ranking, classifiers and ensembles for expression matrices";

    // Later registrations are tried first, so derived types come last.
    py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
    py::register_exception<pipeline::ConfigError>(m, "ConfigError", PyExc_ValueError);

    m.def("set_workers", &set_default_workers, py::arg("workers"), "Worker threads used by parallel stages.");
    m.def("workers", &default_workers);

    py::class_<ExpressionDataset>(m, "Dataset")
        .def(py::init(&make_dataset), py::arg("values"), py::arg("labels"), py::arg("class_names"), py::arg("feature_ids"),
             py::arg("feature_types"), py::arg("sample_ids") = py::none(), py::arg("log_transformed") = false)
        .def_property_readonly("values", &ExpressionDataset::values)
        .def_property_readonly("labels", &ExpressionDataset::labels)
        .def_property_readonly("class_names", &ExpressionDataset::class_names)
        .def_property_readonly("sample_ids", &ExpressionDataset::sample_ids)
        .def_property_readonly("feature_ids",
                               [](const ExpressionDataset& ds) {
                                   std::vector<std::string> ids;
                                   for (const auto& e : ds.catalog().entries()) ids.push_back(e.id);
                                   return ids;
                               })
        .def_property_readonly("feature_types",
                               [](const ExpressionDataset& ds) {
                                   std::vector<std::string> types;
                                   for (const auto& e : ds.catalog().entries()) types.emplace_back(to_string(e.type));
                                   return types;
                               })
        .def_property_readonly("log_transformed", &ExpressionDataset::log_transformed)
        .def_property_readonly("n_samples", &ExpressionDataset::n_samples)
        .def_property_readonly("n_features", &ExpressionDataset::n_features)
        .def_property_readonly("n_classes", &ExpressionDataset::n_classes)
        .def(
            "select_features",
            [](const ExpressionDataset& ds, const std::vector<std::string>& ids) { return apply_feature_set(ds, ids); },
            py::arg("feature_ids"))
        .def("__repr__", [](const ExpressionDataset& ds) {
            std::ostringstream s;
            s << "<Dataset " << ds.n_samples() << " samples x " << ds.n_features() << " features, " << ds.n_classes()
              << " classes>";
            return s.str();
        });

    m.def(
        "load_dataset",
        [](const std::filesystem::path& matrix, const std::filesystem::path& labels, const std::filesystem::path& types,
           bool log_transformed) { return load_dataset(matrix, labels, types, log_transformed).dataset; },
        py::arg("matrix"), py::arg("labels"), py::arg("feature_types"), py::arg("log_transformed") = false);
    m.def(
        "save_dataset",
        [](const ExpressionDataset& ds, const std::filesystem::path& matrix, const std::filesystem::path& labels,
           const std::filesystem::path& types) { save_dataset(ds, matrix, labels, types); },
        py::arg("dataset"), py::arg("matrix"), py::arg("labels"), py::arg("feature_types"));
    m.def("filter_low_expression", &filter_low_expression, py::arg("dataset"),
          py::arg("threshold") = kDefaultLowExpressionThreshold);
    m.def("log_transform", &log_transform, py::arg("dataset"));
    m.def(
        "partition_stats", [](const ExpressionDataset& ds) { return to_py(to_json(compute_partition_stats(ds))); },
        py::arg("dataset"));

    m.def(
        "synth",
        [](std::size_t n_samples, std::size_t n_classes, std::size_t n_informative, std::size_t n_noise,
           double class_separation, std::uint64_t seed) {
            testkit::SynthSpec spec;
            spec.n_samples = n_samples;
            spec.n_classes = n_classes;
            spec.n_informative = n_informative;
            spec.n_noise = n_noise;
            spec.class_separation = class_separation;
            spec.seed = seed;
            auto data = testkit::generate(spec);
            return py::make_tuple(std::move(data.dataset), data.informative);
        },
        py::arg("n_samples") = 500, py::arg("n_classes") = 3, py::arg("n_informative") = 20, py::arg("n_noise") = 180,
        py::arg("class_separation") = 4.0, py::arg("seed") = 1,
        "Synthetic raw-scale dataset and the ids of its informative features.");

    m.def(
        "boruta",
        [](const ExpressionDataset& ds, std::uint64_t seed, std::size_t max_iter, double alpha, std::size_t max_depth,
           std::optional<std::size_t> n_trees, const std::string& shadow_pool) {
            return to_py(run_boruta(ds, boruta_config(seed, max_iter, alpha, max_depth, n_trees, shadow_pool)).to_json());
        },
        py::arg("dataset"), py::arg("seed") = 0, py::arg("max_iter") = 200, py::arg("alpha") = 0.05,
        py::arg("max_depth") = 5, py::arg("n_trees") = py::none(), py::arg("shadow_pool") = "active");

    m.def(
        "fsfsp",
        [](const ExpressionDataset& ds, std::size_t max_depth, std::uint64_t seed, std::size_t max_iter, double alpha) {
            return fsfsp(ds, max_depth, boruta_config(seed, max_iter, alpha, max_depth, std::nullopt, "active"));
        },
        py::arg("dataset"), py::arg("max_depth") = 5, py::arg("seed") = 0, py::arg("max_iter") = 200,
        py::arg("alpha") = 0.05);

    m.def(
        "rank_sweep",
        [](const ExpressionDataset& ds, std::vector<std::size_t> depths, std::uint64_t seed, std::size_t max_iter,
           double alpha) {
            SweepConfig cfg;
            cfg.depths = std::move(depths);
            cfg.seed = seed;
            cfg.boruta = boruta_config(seed, max_iter, alpha, 5, std::nullopt, "active");
            return to_py(ranking_fsfsp(ds, cfg).to_json());
        },
        py::arg("dataset"), py::arg("depths") = SweepConfig{}.depths, py::arg("seed") = 0, py::arg("max_iter") = 200,
        py::arg("alpha") = 0.05, "Depth sweep; returns per-depth selections and nested Rank_N sets.");

    py::class_<TrainedClassifier>(m, "Classifier")
        .def_property_readonly("kind", [](const TrainedClassifier& c) { return std::string(to_string(c.kind())); })
        .def_property_readonly("converged", &TrainedClassifier::converged)
        .def_property_readonly("training_loss", &TrainedClassifier::training_loss)
        .def("predict_proba", py::overload_cast<const Matrix&>(&TrainedClassifier::predict_proba, py::const_), py::arg("x"))
        .def("predict", py::overload_cast<const Matrix&>(&TrainedClassifier::predict, py::const_), py::arg("x"))
        .def("to_json", [](const TrainedClassifier& c) { return to_py(c.to_json()); })
        .def_static("from_json", [](const py::object& o) { return TrainedClassifier::from_json(from_py(o)); });

    m.def(
        "train",
        [](const ExpressionDataset& ds, const std::string& kind, const py::object& params, std::uint64_t seed) {
            auto spec = ClassifierSpec::defaults(kind_from(kind), seed);
            if (!params.is_none()) {
                auto j = to_json(spec);
                const auto overrides = from_py(params);
                for (const auto& [key, value] : overrides.items()) j["params"][key] = value;
                spec = classifier_spec_from_json(j);
                spec.seed = seed;
            }
            return train(spec, ds);
        },
        py::arg("dataset"), py::arg("kind"), py::arg("params") = py::none(), py::arg("seed") = 0,
        "kind is LR, SVM, GB, KNN or RF; params override the defaults.");

    m.def(
        "average_vote",
        [](const std::vector<Matrix>& members) {
            auto r = fuse_average_vote(members);
            return py::make_tuple(r.labels, r.averaged);
        },
        py::arg("members"), "Mean of member probability matrices and its row argmax.");
    m.def(
        "max_vote",
        [](const std::vector<std::vector<int>>& labels, const std::vector<Matrix>& probabilities) {
            auto r = fuse_max_vote(labels, probabilities);
            return py::make_tuple(r.labels, r.tie_samples);
        },
        py::arg("member_labels"), py::arg("member_probabilities") = std::vector<Matrix>{},
        "Modal label per sample; ties fall back to averaged probabilities when given.");

    m.def(
        "metrics",
        [](const std::vector<int>& truth, const std::vector<int>& predicted, std::size_t n_classes,
           std::optional<Matrix> probabilities) {
            const auto cm = confusion(truth, predicted, n_classes);
            return to_py(metrics(cm, probabilities ? &*probabilities : nullptr, truth).to_json());
        },
        py::arg("truth"), py::arg("predicted"), py::arg("n_classes"), py::arg("probabilities") = py::none());
    m.def(
        "stratified_folds",
        [](const std::vector<int>& labels, std::size_t k, std::uint64_t seed) { return stratified_folds(labels, k, seed).folds; },
        py::arg("labels"), py::arg("k") = 10, py::arg("seed") = 0);

    m.def(
        "default_config", [] { return to_py(pipeline::default_config_json()); }, "Every pipeline config key with its default.");
    m.def(
        "run",
        [](const std::string& command, const std::vector<std::string>& overrides,
           const std::optional<std::filesystem::path>& config) {
            const auto cfg = pipeline::load_config(config, overrides);
            set_default_workers(cfg.workers);
            std::ostringstream log;
            {
                py::gil_scoped_release release;
                if (command == "synth") pipeline::cmd_synth(cfg, log);
                else if (command == "preprocess") pipeline::cmd_preprocess(cfg, log);
                else if (command == "select") pipeline::cmd_select(cfg, log);
                else if (command == "evaluate") pipeline::cmd_evaluate(cfg, log);
                else if (command == "report") pipeline::cmd_report(cfg, log);
                else throw pipeline::ConfigError("unknown command '" + command + "'");
            }
            return log.str();
        },
        py::arg("command"), py::arg("overrides") = std::vector<std::string>{}, py::arg("config") = py::none(),
        "Runs one pipeline stage as the CLI would; returns its log (or the report text).");
}
