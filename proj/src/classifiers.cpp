#include "rankfs/classifiers.hpp"

#include "models.hpp"
#include "rankfs/error.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>

namespace rankfs {

std::string_view to_string(ClassifierKind kind)
{
    switch (kind) {
    case ClassifierKind::SoftmaxLR: return "SoftmaxLR";
    case ClassifierKind::LinearSVM: return "LinearSVM";
    case ClassifierKind::GradientBoost: return "GradientBoost";
    case ClassifierKind::KNN: return "KNN";
    case ClassifierKind::RandomForest: return "RandomForest";
    }
    return "SoftmaxLR";
}

std::optional<ClassifierKind> parse_classifier_kind(std::string_view text)
{
    std::string s(text);
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (s == "softmaxlr" || s == "lr") return ClassifierKind::SoftmaxLR;
    if (s == "linearsvm" || s == "svm") return ClassifierKind::LinearSVM;
    if (s == "gradientboost" || s == "gb" || s == "xgb" || s == "xgboost") return ClassifierKind::GradientBoost;
    if (s == "knn") return ClassifierKind::KNN;
    if (s == "randomforest" || s == "rf") return ClassifierKind::RandomForest;
    return std::nullopt;
}

ClassifierSpec ClassifierSpec::defaults(ClassifierKind kind, std::uint64_t seed)
{
    ClassifierSpec spec;
    spec.kind = kind;
    spec.seed = seed;
    return spec;
}

void ClassifierSpec::validate() const
{
    switch (kind) {
    case ClassifierKind::SoftmaxLR:
        if (!(lr.C > 0.0)) throw InvalidArgument("SoftmaxLR: C must be > 0");
        if (lr.max_iter < 1) throw InvalidArgument("SoftmaxLR: max_iter must be >= 1");
        if (!(lr.tol > 0.0)) throw InvalidArgument("SoftmaxLR: tol must be > 0");
        if (lr.history < 1) throw InvalidArgument("SoftmaxLR: history must be >= 1");
        break;
    case ClassifierKind::LinearSVM:
        if (!(svm.C > 0.0)) throw InvalidArgument("LinearSVM: C must be > 0");
        if (!(svm.tol > 0.0)) throw InvalidArgument("LinearSVM: tol must be > 0");
        if (svm.max_epochs < 1) throw InvalidArgument("LinearSVM: max_epochs must be >= 1");
        break;
    case ClassifierKind::GradientBoost:
        if (gb.max_depth < 1) throw InvalidArgument("GradientBoost: max_depth must be >= 1");
        if (gb.learning_rate < 0.0) throw InvalidArgument("GradientBoost: learning_rate must be >= 0");
        if (gb.lambda < 0.0) throw InvalidArgument("GradientBoost: lambda must be >= 0");
        if (gb.min_child_weight < 0.0) throw InvalidArgument("GradientBoost: min_child_weight must be >= 0");
        break;
    case ClassifierKind::KNN:
        if (knn.k < 1) throw InvalidArgument("KNN: k must be >= 1");
        break;
    case ClassifierKind::RandomForest:
        rf.validate();
        break;
    }
}

namespace {

template <class T>
void read_field(const nlohmann::json& j, const char* key, T& out)
{
    if (j.contains(key)) {
        out = j.at(key).get<T>();
    }
}

void reject_unknown(const nlohmann::json& j, std::initializer_list<const char*> known, const std::string& where)
{
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (std::none_of(known.begin(), known.end(), [&](const char* k) { return key == k; })) {
            throw InvalidArgument(where + ": unknown field '" + key + "'");
        }
    }
}

} // namespace

nlohmann::json to_json(const ClassifierSpec& spec)
{
    nlohmann::json j{{"kind", std::string(to_string(spec.kind))}, {"seed", spec.seed}};
    switch (spec.kind) {
    case ClassifierKind::SoftmaxLR:
        j["params"] = {{"max_iter", spec.lr.max_iter}, {"C", spec.lr.C}, {"tol", spec.lr.tol}, {"history", spec.lr.history}};
        break;
    case ClassifierKind::LinearSVM:
        j["params"] = {{"C", spec.svm.C}, {"tol", spec.svm.tol}, {"max_epochs", spec.svm.max_epochs}};
        break;
    case ClassifierKind::GradientBoost:
        j["params"] = {{"n_rounds", spec.gb.n_rounds}, {"max_depth", spec.gb.max_depth}, {"learning_rate", spec.gb.learning_rate},
                       {"lambda", spec.gb.lambda}, {"min_child_weight", spec.gb.min_child_weight}};
        break;
    case ClassifierKind::KNN:
        j["params"] = {{"k", spec.knn.k}};
        break;
    case ClassifierKind::RandomForest: {
        auto f = to_json(spec.rf);
        f.erase("seed");
        j["params"] = std::move(f);
        break;
    }
    }
    return j;
}

ClassifierSpec classifier_spec_from_json(const nlohmann::json& j)
{
    reject_unknown(j, {"kind", "seed", "params"}, "classifier spec");
    auto kind = parse_classifier_kind(j.at("kind").get<std::string>());
    if (!kind) {
        throw InvalidArgument("classifier spec: unknown kind '" + j.at("kind").get<std::string>() + "'");
    }
    ClassifierSpec spec = ClassifierSpec::defaults(*kind, j.value("seed", std::uint64_t{0}));
    const nlohmann::json p = j.value("params", nlohmann::json::object());
    switch (spec.kind) {
    case ClassifierKind::SoftmaxLR:
        reject_unknown(p, {"max_iter", "C", "tol", "history"}, "SoftmaxLR params");
        read_field(p, "max_iter", spec.lr.max_iter);
        read_field(p, "C", spec.lr.C);
        read_field(p, "tol", spec.lr.tol);
        read_field(p, "history", spec.lr.history);
        break;
    case ClassifierKind::LinearSVM:
        reject_unknown(p, {"C", "tol", "max_epochs"}, "LinearSVM params");
        read_field(p, "C", spec.svm.C);
        read_field(p, "tol", spec.svm.tol);
        read_field(p, "max_epochs", spec.svm.max_epochs);
        break;
    case ClassifierKind::GradientBoost:
        reject_unknown(p, {"n_rounds", "max_depth", "learning_rate", "lambda", "min_child_weight"}, "GradientBoost params");
        read_field(p, "n_rounds", spec.gb.n_rounds);
        read_field(p, "max_depth", spec.gb.max_depth);
        read_field(p, "learning_rate", spec.gb.learning_rate);
        read_field(p, "lambda", spec.gb.lambda);
        read_field(p, "min_child_weight", spec.gb.min_child_weight);
        break;
    case ClassifierKind::KNN:
        reject_unknown(p, {"k"}, "KNN params");
        read_field(p, "k", spec.knn.k);
        break;
    case ClassifierKind::RandomForest: {
        reject_unknown(p, {"n_trees", "max_depth", "min_samples_split", "min_samples_leaf", "max_features", "class_weight",
                           "bootstrap", "criterion"},
                       "RandomForest params");
        nlohmann::json merged = to_json(ForestConfig::for_classification());
        merged.update(p);
        spec.rf = forest_config_from_json(merged);
        break;
    }
    }
    spec.validate();
    return spec;
}

namespace detail {

nlohmann::json matrix_to_json(const Matrix& m)
{
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        std::vector<double> r(static_cast<std::size_t>(m.cols()));
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            r[static_cast<std::size_t>(j)] = m(i, j);
        }
        rows.push_back(std::move(r));
    }
    return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(rows)}};
}

Matrix matrix_from_json(const nlohmann::json& j)
{
    Matrix m(j.at("rows").get<Eigen::Index>(), j.at("cols").get<Eigen::Index>());
    const auto& data = j.at("data");
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index k = 0; k < m.cols(); ++k) {
            m(i, k) = data.at(static_cast<std::size_t>(i)).at(static_cast<std::size_t>(k)).get<double>();
        }
    }
    return m;
}

namespace {

class KnnModel final : public Model {
public:
    KnnModel(Matrix train, std::vector<int> labels, std::size_t n_classes, std::size_t k)
        : train_(std::move(train))
        , labels_(std::move(labels))
        , n_classes_(n_classes)
        , k_(k)
    {
    }

    // Neighbor-class frequencies among the k nearest training rows; distance
    // ties go to the lower training index.
    Matrix predict_proba(const Matrix& x) const override
    {
        const auto n_train = static_cast<std::size_t>(train_.rows());
        const std::size_t k = std::min(k_, n_train);
        Matrix out = Matrix::Zero(x.rows(), static_cast<Eigen::Index>(n_classes_));
        std::vector<std::pair<double, std::size_t>> dist(n_train);
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
            for (std::size_t t = 0; t < n_train; ++t) {
                dist[t] = {(train_.row(static_cast<Eigen::Index>(t)) - x.row(i)).squaredNorm(), t};
            }
            std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
            for (std::size_t r = 0; r < k; ++r) {
                out(i, labels_[dist[r].second]) += 1.0;
            }
            out.row(i) /= static_cast<double>(k);
        }
        return out;
    }

    nlohmann::json to_json() const override
    {
        return {{"k", k_}, {"n_classes", n_classes_}, {"labels", labels_}, {"train", matrix_to_json(train_)}};
    }

private:
    Matrix train_;
    std::vector<int> labels_;
    std::size_t n_classes_;
    std::size_t k_;
};

class ForestModel final : public Model {
public:
    explicit ForestModel(TrainedForest forest) : forest_(std::move(forest)) {}

    Matrix predict_proba(const Matrix& x) const override { return rankfs::predict_proba(forest_, x); }
    nlohmann::json to_json() const override { return {{"forest", rankfs::to_json(forest_)}}; }

private:
    TrainedForest forest_;
};

} // namespace
} // namespace detail

TrainedClassifier::TrainedClassifier(ClassifierKind kind, std::size_t n_features, std::size_t n_classes,
                                     std::vector<int> classes, std::shared_ptr<const detail::Model> model,
                                     bool converged, std::vector<double> training_loss)
    : kind_(kind)
    , n_features_(n_features)
    , n_classes_(n_classes)
    , classes_(std::move(classes))
    , model_(std::move(model))
    , converged_(converged)
    , training_loss_(std::move(training_loss))
{
    if (!model_) {
        throw InvalidArgument("TrainedClassifier: missing model");
    }
    std::vector<int> sorted = classes_;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
        throw InvalidArgument("TrainedClassifier: class mapping is not a bijection");
    }
    for (int c : classes_) {
        if (c < 0 || static_cast<std::size_t>(c) >= n_classes_) {
            throw InvalidArgument("TrainedClassifier: class code out of range");
        }
    }
}

ProbabilityMatrix TrainedClassifier::predict_proba(const Matrix& x) const
{
    if (static_cast<std::size_t>(x.cols()) != n_features_) {
        throw InvalidArgument("predict_proba: expected " + std::to_string(n_features_) + " features, got "
                              + std::to_string(x.cols()));
    }
    const Matrix internal = model_->predict_proba(x);
    ProbabilityMatrix out = Matrix::Zero(x.rows(), static_cast<Eigen::Index>(n_classes_));
    for (std::size_t k = 0; k < classes_.size(); ++k) {
        out.col(classes_[k]) = internal.col(static_cast<Eigen::Index>(k));
    }
    return out;
}

std::vector<int> TrainedClassifier::predict(const Matrix& x) const
{
    return argmax_rows(predict_proba(x));
}

nlohmann::json TrainedClassifier::to_json() const
{
    return nlohmann::json{
        {"kind", std::string(to_string(kind_))},
        {"n_features", n_features_},
        {"n_classes", n_classes_},
        {"classes", classes_},
        {"converged", converged_},
        {"model", model_->to_json()},
    };
}

TrainedClassifier TrainedClassifier::from_json(const nlohmann::json& j)
{
    const auto kind = parse_classifier_kind(j.at("kind").get<std::string>());
    if (!kind) {
        throw InvalidArgument("model file: unknown classifier kind");
    }
    const auto& m = j.at("model");
    std::shared_ptr<const detail::Model> model;
    switch (*kind) {
    case ClassifierKind::SoftmaxLR: model = detail::softmax_lr_from_json(m); break;
    case ClassifierKind::LinearSVM: model = detail::linear_svm_from_json(m); break;
    case ClassifierKind::GradientBoost: model = detail::gradient_boost_from_json(m); break;
    case ClassifierKind::KNN:
        model = std::make_shared<detail::KnnModel>(detail::matrix_from_json(m.at("train")), m.at("labels").get<std::vector<int>>(),
                                                   m.at("n_classes").get<std::size_t>(), m.at("k").get<std::size_t>());
        break;
    case ClassifierKind::RandomForest: model = std::make_shared<detail::ForestModel>(forest_from_json(m.at("forest"))); break;
    }
    return TrainedClassifier(*kind, j.at("n_features").get<std::size_t>(), j.at("n_classes").get<std::size_t>(),
                             j.at("classes").get<std::vector<int>>(), std::move(model), j.value("converged", true));
}

TrainedClassifier train(const ClassifierSpec& spec, const ExpressionDataset& ds)
{
    spec.validate();
    // Internal indices follow ascending class code.
    std::vector<int> to_internal(ds.n_classes(), -1);
    std::vector<int> classes;
    for (int y : ds.labels()) {
        to_internal[static_cast<std::size_t>(y)] = 0;
    }
    for (std::size_t c = 0; c < to_internal.size(); ++c) {
        if (to_internal[c] == 0) {
            to_internal[c] = static_cast<int>(classes.size());
            classes.push_back(static_cast<int>(c));
        }
    }
    if (classes.size() < 2) {
        throw InvalidArgument("train: need at least two classes");
    }
    if (ds.n_features() == 0) {
        throw InvalidArgument("train: dataset has no features");
    }
    std::vector<int> y(ds.n_samples());
    for (std::size_t i = 0; i < y.size(); ++i) {
        y[i] = to_internal[static_cast<std::size_t>(ds.labels()[i])];
    }
    const std::size_t n_internal = classes.size();
    const Matrix& x = ds.values();

    detail::Fit fit;
    switch (spec.kind) {
    case ClassifierKind::SoftmaxLR: fit = detail::fit_softmax_lr(x, y, n_internal, spec.lr); break;
    case ClassifierKind::LinearSVM: fit = detail::fit_linear_svm(x, y, n_internal, spec.svm, spec.seed); break;
    case ClassifierKind::GradientBoost: fit = detail::fit_gradient_boost(x, y, n_internal, spec.gb); break;
    case ClassifierKind::KNN: fit.model = std::make_shared<detail::KnnModel>(x, y, n_internal, spec.knn.k); break;
    case ClassifierKind::RandomForest: {
        ForestConfig cfg = spec.rf;
        cfg.seed = spec.seed;
        std::vector<std::size_t> features(ds.n_features());
        std::iota(features.begin(), features.end(), std::size_t{0});
        fit.model = std::make_shared<detail::ForestModel>(train_forest(x, y, n_internal, features, cfg));
        break;
    }
    }
    return TrainedClassifier(spec.kind, ds.n_features(), ds.n_classes(), std::move(classes), std::move(fit.model),
                             fit.converged, std::move(fit.loss_history));
}

std::vector<int> argmax_rows(const Matrix& p)
{
    std::vector<int> out(static_cast<std::size_t>(p.rows()), 0);
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
        Eigen::Index best = 0;
        for (Eigen::Index j = 1; j < p.cols(); ++j) {
            if (p(i, j) > p(i, best)) {
                best = j;
            }
        }
        out[static_cast<std::size_t>(i)] = static_cast<int>(best);
    }
    return out;
}

Matrix softmax_rows(const Matrix& scores)
{
    Matrix out(scores.rows(), scores.cols());
    for (Eigen::Index i = 0; i < scores.rows(); ++i) {
        const double m = scores.row(i).maxCoeff();
        out.row(i) = (scores.row(i).array() - m).exp().matrix();
        out.row(i) /= out.row(i).sum();
    }
    return out;
}

} // namespace rankfs
