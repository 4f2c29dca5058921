#include "rankfs/eval.hpp"

#include "rankfs/error.hpp"
#include "rankfs/parallel.hpp"
#include "rankfs/random.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <memory>
#include <numeric>

namespace rankfs {

ConfusionMatrix::ConfusionMatrix(std::size_t n_classes)
    : k_(n_classes)
    , counts_(n_classes * n_classes, 0)
{
}

void ConfusionMatrix::add(std::size_t truth, std::size_t predicted, std::size_t count)
{
    if (truth >= k_ || predicted >= k_) {
        throw InvalidArgument("confusion: class code out of range");
    }
    counts_[truth * k_ + predicted] += count;
}

std::size_t ConfusionMatrix::total() const
{
    return std::accumulate(counts_.begin(), counts_.end(), std::size_t{0});
}

std::size_t ConfusionMatrix::trace() const
{
    std::size_t t = 0;
    for (std::size_t c = 0; c < k_; ++c) {
        t += at(c, c);
    }
    return t;
}

std::size_t ConfusionMatrix::row_sum(std::size_t truth) const
{
    std::size_t s = 0;
    for (std::size_t p = 0; p < k_; ++p) {
        s += at(truth, p);
    }
    return s;
}

std::size_t ConfusionMatrix::col_sum(std::size_t predicted) const
{
    std::size_t s = 0;
    for (std::size_t t = 0; t < k_; ++t) {
        s += at(t, predicted);
    }
    return s;
}

Matrix ConfusionMatrix::row_normalized() const
{
    const auto k = static_cast<Eigen::Index>(k_);
    Matrix out = Matrix::Zero(k, k);
    for (std::size_t t = 0; t < k_; ++t) {
        const std::size_t s = row_sum(t);
        if (s == 0) {
            continue;
        }
        for (std::size_t p = 0; p < k_; ++p) {
            out(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(p)) = static_cast<double>(at(t, p)) / static_cast<double>(s);
        }
    }
    return out;
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other)
{
    if (other.k_ != k_) {
        throw InvalidArgument("confusion: cannot add matrices of different size");
    }
    for (std::size_t i = 0; i < counts_.size(); ++i) {
        counts_[i] += other.counts_[i];
    }
    return *this;
}

ConfusionMatrix confusion(std::span<const int> truth, std::span<const int> predicted, std::size_t n_classes)
{
    if (truth.size() != predicted.size()) {
        throw InvalidArgument("confusion: truth and prediction lengths differ");
    }
    ConfusionMatrix cm(n_classes);
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] < 0 || predicted[i] < 0) {
            throw InvalidArgument("confusion: class code out of range");
        }
        cm.add(static_cast<std::size_t>(truth[i]), static_cast<std::size_t>(predicted[i]));
    }
    return cm;
}

double roc_auc(std::span<const double> scores, std::span<const bool> positive)
{
    if (scores.size() != positive.size()) {
        throw InvalidArgument("roc_auc: score and label lengths differ");
    }
    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    long double rank_sum = 0.0L;
    std::size_t n_pos = 0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) {
            ++j;
        }
        // Ranks i+1..j share their average.
        const long double avg = (static_cast<long double>(i + 1) + static_cast<long double>(j)) / 2.0L;
        for (std::size_t t = i; t < j; ++t) {
            if (positive[order[t]]) {
                rank_sum += avg;
                ++n_pos;
            }
        }
        i = j;
    }
    const std::size_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    const long double u = rank_sum - static_cast<long double>(n_pos) * static_cast<long double>(n_pos + 1) / 2.0L;
    return static_cast<double>(u / (static_cast<long double>(n_pos) * static_cast<long double>(n_neg)));
}

RocCurve roc_curve(std::span<const double> scores, std::span<const bool> positive)
{
    if (scores.size() != positive.size()) {
        throw InvalidArgument("roc_curve: score and label lengths differ");
    }
    const std::size_t n = scores.size();
    const auto n_pos = static_cast<std::size_t>(std::count(positive.begin(), positive.end(), true));
    const std::size_t n_neg = n - n_pos;
    RocCurve curve;
    curve.fpr.push_back(0.0);
    curve.tpr.push_back(0.0);
    curve.thresholds.push_back(std::numeric_limits<double>::infinity());
    if (n_pos == 0 || n_neg == 0) {
        return curve;
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    std::size_t tp = 0;
    std::size_t fp = 0;
    for (std::size_t i = 0; i < n;) {
        const double s = scores[order[i]];
        while (i < n && scores[order[i]] == s) {
            (positive[order[i]] ? tp : fp) += 1;
            ++i;
        }
        curve.fpr.push_back(static_cast<double>(fp) / static_cast<double>(n_neg));
        curve.tpr.push_back(static_cast<double>(tp) / static_cast<double>(n_pos));
        curve.thresholds.push_back(s);
    }
    return curve;
}

double trapezoid_area(const RocCurve& curve)
{
    double area = 0.0;
    for (std::size_t i = 1; i < curve.fpr.size(); ++i) {
        area += (curve.fpr[i] - curve.fpr[i - 1]) * (curve.tpr[i] + curve.tpr[i - 1]) / 2.0;
    }
    return area;
}

double interpolate_tpr(const RocCurve& curve, double fpr)
{
    double best = 0.0;
    bool found = false;
    for (std::size_t i = 0; i < curve.fpr.size(); ++i) {
        if (curve.fpr[i] == fpr) {
            best = found ? std::max(best, curve.tpr[i]) : curve.tpr[i];
            found = true;
        }
        if (i > 0 && curve.fpr[i - 1] < fpr && fpr < curve.fpr[i]) {
            const double t = (fpr - curve.fpr[i - 1]) / (curve.fpr[i] - curve.fpr[i - 1]);
            const double v = curve.tpr[i - 1] + t * (curve.tpr[i] - curve.tpr[i - 1]);
            best = found ? std::max(best, v) : v;
            found = true;
        }
    }
    return best;
}

MetricsReport metrics(const ConfusionMatrix& cm, const ProbabilityMatrix* probabilities, std::span<const int> truth)
{
    const std::size_t k = cm.n_classes();
    const std::size_t total = cm.total();
    MetricsReport r;
    r.per_class.resize(k);
    if (total == 0) {
        return r;
    }
    const double n = static_cast<double>(total);
    r.accuracy = static_cast<double>(cm.trace()) / n;
    double chance = 0.0; // sum of row * column totals, exact in double at these sizes
    for (std::size_t c = 0; c < k; ++c) {
        auto& m = r.per_class[c];
        const double tp = static_cast<double>(cm.at(c, c));
        const std::size_t predicted = cm.col_sum(c);
        const std::size_t actual = cm.row_sum(c);
        m.support = actual;
        if (predicted == 0) {
            m.precision_undefined = true;
        } else {
            m.precision = tp / static_cast<double>(predicted);
        }
        if (actual == 0) {
            m.recall_undefined = true;
        } else {
            m.recall = tp / static_cast<double>(actual);
        }
        m.f1 = (m.precision + m.recall) > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;

        const double w = static_cast<double>(actual) / n;
        r.precision_macro += m.precision;
        r.recall_macro += m.recall;
        r.f1_macro += m.f1;
        r.precision_weighted += w * m.precision;
        r.recall_weighted += w * m.recall;
        r.f1_weighted += w * m.f1;
        chance += static_cast<double>(actual) * static_cast<double>(predicted);
    }
    const double kd = static_cast<double>(k);
    r.precision_macro /= kd;
    r.recall_macro /= kd;
    r.f1_macro /= kd;

    // (p0 - pe) / (1 - pe) scaled by n^2, so integer counts give a single rounding.
    const double num = n * static_cast<double>(cm.trace()) - chance;
    const double den = n * n - chance;
    if (den <= 0.0) {
        r.kappa = cm.trace() == total ? 1.0 : 0.0;
    } else {
        r.kappa = num / den;
    }

    if (probabilities != nullptr) {
        if (truth.size() != total || static_cast<std::size_t>(probabilities->rows()) != total
            || static_cast<std::size_t>(probabilities->cols()) != k) {
            throw InvalidArgument("metrics: probability matrix does not match the confusion matrix");
        }
        std::vector<double> scores(total);
        double macro = 0.0;
        double weighted = 0.0;
        double weight_sum = 0.0;
        std::size_t defined = 0;
        std::unique_ptr<bool[]> pos(new bool[total]);
        for (std::size_t c = 0; c < k; ++c) {
            for (std::size_t i = 0; i < total; ++i) {
                scores[i] = (*probabilities)(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c));
                pos[i] = truth[i] == static_cast<int>(c);
            }
            const double auc = roc_auc(scores, std::span<const bool>(pos.get(), total));
            if (std::isnan(auc)) {
                continue;
            }
            r.per_class[c].auc = auc;
            macro += auc;
            weighted += auc * static_cast<double>(r.per_class[c].support);
            weight_sum += static_cast<double>(r.per_class[c].support);
            ++defined;
        }
        if (defined > 0) {
            r.auc_macro = macro / static_cast<double>(defined);
            r.auc_weighted = weighted / weight_sum;
        }
    }
    return r;
}

nlohmann::json MetricsReport::to_json(std::span<const std::string> class_names) const
{
    nlohmann::json per = nlohmann::json::array();
    for (std::size_t c = 0; c < per_class.size(); ++c) {
        const auto& m = per_class[c];
        nlohmann::json e{
            {"class", c < class_names.size() ? nlohmann::json(class_names[c]) : nlohmann::json(c)},
            {"precision", m.precision},
            {"recall", m.recall},
            {"f1", m.f1},
            {"support", m.support},
            {"precision_undefined", m.precision_undefined},
            {"recall_undefined", m.recall_undefined},
        };
        e["auc"] = m.auc ? nlohmann::json(*m.auc) : nlohmann::json(nullptr);
        per.push_back(std::move(e));
    }
    nlohmann::json j{
        {"averaging", averaging},
        {"accuracy", accuracy},
        {"precision_macro", precision_macro},
        {"recall_macro", recall_macro},
        {"f1_macro", f1_macro},
        {"precision_weighted", precision_weighted},
        {"recall_weighted", recall_weighted},
        {"f1_weighted", f1_weighted},
        {"kappa", kappa},
        {"per_class", std::move(per)},
    };
    j["auc_macro"] = auc_macro ? nlohmann::json(*auc_macro) : nlohmann::json(nullptr);
    j["auc_weighted"] = auc_weighted ? nlohmann::json(*auc_weighted) : nlohmann::json(nullptr);
    return j;
}

FoldPlan stratified_folds(std::span<const int> labels, std::size_t k, std::uint64_t seed,
                          std::span<const std::string> class_names)
{
    if (k < 2) {
        throw InvalidArgument("stratified_folds: k must be >= 2");
    }
    int max_code = -1;
    for (int y : labels) {
        if (y < 0) throw InvalidArgument("stratified_folds: negative class code");
        max_code = std::max(max_code, y);
    }
    std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(max_code + 1));
    for (std::size_t i = 0; i < labels.size(); ++i) {
        by_class[static_cast<std::size_t>(labels[i])].push_back(i);
    }
    FoldPlan plan;
    plan.k = k;
    plan.seed = seed;
    plan.folds.assign(k, {});
    std::size_t offset = 0;
    for (std::size_t c = 0; c < by_class.size(); ++c) {
        auto& members = by_class[c];
        if (members.empty()) {
            continue;
        }
        if (members.size() < k) {
            const std::string name = c < class_names.size() ? class_names[c] : std::to_string(c);
            throw InvalidArgument("stratified_folds: class '" + name + "' has " + std::to_string(members.size())
                                  + " samples, fewer than k=" + std::to_string(k));
        }
        Rng rng(derive_seed(seed, {c}));
        rng.shuffle(std::span<std::size_t>(members));
        for (std::size_t j = 0; j < members.size(); ++j) {
            plan.folds[(offset + j) % k].push_back(members[j]);
        }
        offset = (offset + members.size()) % k;
    }
    for (auto& f : plan.folds) {
        std::sort(f.begin(), f.end());
    }
    return plan;
}

void FoldPlan::validate(std::span<const int> labels) const
{
    if (folds.size() != k) {
        throw InvalidArgument("fold plan: fold count differs from k");
    }
    std::vector<int> owner(labels.size(), -1);
    for (std::size_t f = 0; f < folds.size(); ++f) {
        for (std::size_t i : folds[f]) {
            if (i >= labels.size()) throw InvalidArgument("fold plan: sample index out of range");
            if (owner[i] != -1) throw InvalidArgument("fold plan: folds overlap");
            owner[i] = static_cast<int>(f);
        }
    }
    if (std::find(owner.begin(), owner.end(), -1) != owner.end()) {
        throw InvalidArgument("fold plan: folds do not cover every sample");
    }
    int max_code = labels.empty() ? -1 : *std::max_element(labels.begin(), labels.end());
    for (int c = 0; c <= max_code; ++c) {
        std::size_t lo = std::numeric_limits<std::size_t>::max();
        std::size_t hi = 0;
        for (const auto& fold : folds) {
            const auto n = static_cast<std::size_t>(std::count_if(fold.begin(), fold.end(), [&](std::size_t i) { return labels[i] == c; }));
            lo = std::min(lo, n);
            hi = std::max(hi, n);
        }
        if (hi - lo > 1) {
            throw InvalidArgument("fold plan: class " + std::to_string(c) + " is unbalanced across folds");
        }
    }
}

std::vector<std::size_t> training_indices(const FoldPlan& plan, std::size_t fold, std::size_t n_samples)
{
    std::vector<bool> held_out(n_samples, false);
    for (std::size_t i : plan.folds.at(fold)) {
        held_out.at(i) = true;
    }
    std::vector<std::size_t> out;
    out.reserve(n_samples);
    for (std::size_t i = 0; i < n_samples; ++i) {
        if (!held_out[i]) {
            out.push_back(i);
        }
    }
    return out;
}

namespace {

MetricsReport mean_report(std::span<const MetricsReport> folds)
{
    MetricsReport agg;
    if (folds.empty()) {
        return agg;
    }
    const double n = static_cast<double>(folds.size());
    const std::size_t k = folds.front().per_class.size();
    agg.per_class.resize(k);
    bool has_auc = true;
    std::vector<double> class_auc_sum(k, 0.0);
    std::vector<std::size_t> class_auc_count(k, 0);
    // Sums first, one division at the end: equal folds average to themselves.
    for (const auto& f : folds) {
        agg.accuracy += f.accuracy;
        agg.precision_macro += f.precision_macro;
        agg.recall_macro += f.recall_macro;
        agg.f1_macro += f.f1_macro;
        agg.precision_weighted += f.precision_weighted;
        agg.recall_weighted += f.recall_weighted;
        agg.f1_weighted += f.f1_weighted;
        agg.kappa += f.kappa;
        has_auc = has_auc && f.auc_macro.has_value();
        for (std::size_t c = 0; c < k; ++c) {
            const auto& m = f.per_class[c];
            agg.per_class[c].precision += m.precision;
            agg.per_class[c].recall += m.recall;
            agg.per_class[c].f1 += m.f1;
            agg.per_class[c].support += m.support;
            agg.per_class[c].precision_undefined = agg.per_class[c].precision_undefined || m.precision_undefined;
            agg.per_class[c].recall_undefined = agg.per_class[c].recall_undefined || m.recall_undefined;
            if (m.auc) {
                class_auc_sum[c] += *m.auc;
                ++class_auc_count[c];
            }
        }
    }
    for (double* v : {&agg.accuracy, &agg.precision_macro, &agg.recall_macro, &agg.f1_macro, &agg.precision_weighted,
                      &agg.recall_weighted, &agg.f1_weighted, &agg.kappa}) {
        *v /= n;
    }
    for (auto& m : agg.per_class) {
        m.precision /= n;
        m.recall /= n;
        m.f1 /= n;
    }
    if (has_auc) {
        double macro = 0.0;
        double weighted = 0.0;
        for (const auto& f : folds) {
            macro += *f.auc_macro;
            weighted += *f.auc_weighted;
        }
        agg.auc_macro = macro / n;
        agg.auc_weighted = weighted / n;
    }
    for (std::size_t c = 0; c < k; ++c) {
        if (class_auc_count[c] > 0) {
            agg.per_class[c].auc = class_auc_sum[c] / static_cast<double>(class_auc_count[c]);
        }
    }
    return agg;
}

struct FoldEvaluation {
    MetricsReport report;
    ConfusionMatrix cm;
    std::vector<RocCurve> roc; // per class, empty without probabilities
};

FoldEvaluation evaluate_fold(const FoldOutput& out, const ExpressionDataset& test)
{
    const std::size_t k = test.n_classes();
    if (out.predicted.size() != test.n_samples()) {
        throw InvalidArgument("cross_validate: pipeline returned the wrong number of predictions");
    }
    FoldEvaluation ev;
    ev.cm = confusion(test.labels(), out.predicted, k);
    if (out.probabilities) {
        ev.report = metrics(ev.cm, &*out.probabilities, test.labels());
        std::vector<double> scores(test.n_samples());
        std::unique_ptr<bool[]> pos(new bool[test.n_samples()]);
        for (std::size_t c = 0; c < k; ++c) {
            for (std::size_t i = 0; i < test.n_samples(); ++i) {
                scores[i] = (*out.probabilities)(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c));
                pos[i] = test.labels()[i] == static_cast<int>(c);
            }
            ev.roc.push_back(roc_curve(scores, std::span<const bool>(pos.get(), test.n_samples())));
        }
    } else {
        ev.report = metrics(ev.cm);
    }
    return ev;
}

CrossValidationResult combine(std::vector<FoldEvaluation>& evals, std::size_t k)
{
    CrossValidationResult res;
    res.confusion = ConfusionMatrix(k);
    bool all_roc = true;
    for (auto& ev : evals) {
        res.folds.push_back(ev.report);
        res.confusion += ev.cm;
        all_roc = all_roc && ev.roc.size() == k;
    }
    res.aggregate = mean_report(res.folds);
    if (all_roc && !evals.empty()) {
        res.mean_roc.resize(k);
        for (std::size_t c = 0; c < k; ++c) {
            auto& curve = res.mean_roc[c];
            for (std::size_t g = 0; g < kRocGridPoints; ++g) {
                const double x = static_cast<double>(g) / static_cast<double>(kRocGridPoints - 1);
                double y = 0.0;
                std::size_t used = 0;
                for (auto& ev : evals) {
                    if (ev.roc[c].fpr.size() < 2) {
                        continue; // class absent from this fold
                    }
                    y += interpolate_tpr(ev.roc[c], x);
                    ++used;
                }
                curve.fpr.push_back(x);
                curve.tpr.push_back(used > 0 ? y / static_cast<double>(used) : 0.0);
                curve.thresholds.push_back(std::numeric_limits<double>::quiet_NaN());
            }
            curve.tpr.front() = 0.0;
        }
    }
    return res;
}

} // namespace

std::vector<CrossValidationResult> cross_validate_models(const MultiFoldPipeline& pipeline, std::size_t n_models,
                                                         const ExpressionDataset& ds, const FoldPlan& plan)
{
    plan.validate(ds.labels());
    const std::size_t k = ds.n_classes();
    // evals[model][fold]
    std::vector<std::vector<FoldEvaluation>> evals(n_models, std::vector<FoldEvaluation>(plan.k));
    parallel_for(plan.k, [&](std::size_t f) {
        const auto train_rows = training_indices(plan, f, ds.n_samples());
        const ExpressionDataset train = ds.select_rows(train_rows);
        const ExpressionDataset test = ds.select_rows(plan.folds[f]);
        const auto outputs = pipeline(train, test, f);
        if (outputs.size() != n_models) {
            throw InvalidArgument("cross_validate: pipeline returned the wrong number of model outputs");
        }
        for (std::size_t m = 0; m < n_models; ++m) {
            evals[m][f] = evaluate_fold(outputs[m], test);
        }
    });
    std::vector<CrossValidationResult> out;
    out.reserve(n_models);
    for (auto& e : evals) {
        out.push_back(combine(e, k));
    }
    return out;
}

CrossValidationResult cross_validate(const FoldPipeline& pipeline, const ExpressionDataset& ds, const FoldPlan& plan)
{
    auto multi = [&](const ExpressionDataset& train, const ExpressionDataset& test, std::size_t fold) {
        return std::vector<FoldOutput>{pipeline(train, test, fold)};
    };
    return std::move(cross_validate_models(multi, 1, ds, plan).front());
}

nlohmann::json CrossValidationResult::to_json(std::span<const std::string> class_names) const
{
    nlohmann::json per_fold = nlohmann::json::array();
    for (const auto& f : folds) {
        per_fold.push_back(f.to_json(class_names));
    }
    nlohmann::json cm = nlohmann::json::array();
    for (std::size_t t = 0; t < confusion.n_classes(); ++t) {
        std::vector<std::size_t> row;
        for (std::size_t p = 0; p < confusion.n_classes(); ++p) {
            row.push_back(confusion.at(t, p));
        }
        cm.push_back(std::move(row));
    }
    return nlohmann::json{
        {"aggregate", aggregate.to_json(class_names)},
        {"folds", std::move(per_fold)},
        {"confusion", std::move(cm)},
        {"stratified", true},
    };
}

namespace {

std::ofstream open_csv(const std::filesystem::path& path, const std::string& comment)
{
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot write " + path.string());
    }
    if (!comment.empty()) {
        out << "# " << comment << '\n';
    }
    out.precision(17);
    return out;
}

std::string class_label(std::span<const std::string> names, std::size_t c)
{
    return c < names.size() ? names[c] : std::to_string(c);
}

} // namespace

void write_confusion_csv(const ConfusionMatrix& cm, std::span<const std::string> class_names,
                         const std::filesystem::path& path, const std::string& comment)
{
    auto out = open_csv(path, comment);
    const Matrix norm = cm.row_normalized();
    out << "true\\predicted";
    for (std::size_t p = 0; p < cm.n_classes(); ++p) {
        out << ',' << class_label(class_names, p);
    }
    out << '\n';
    for (std::size_t t = 0; t < cm.n_classes(); ++t) {
        out << class_label(class_names, t);
        for (std::size_t p = 0; p < cm.n_classes(); ++p) {
            out << ',' << cm.at(t, p);
        }
        out << '\n';
    }
    out << "# row-normalized (per-class recall on the diagonal)\n";
    for (std::size_t t = 0; t < cm.n_classes(); ++t) {
        out << class_label(class_names, t);
        for (std::size_t p = 0; p < cm.n_classes(); ++p) {
            out << ',' << norm(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(p));
        }
        out << '\n';
    }
}

void write_roc_csv(std::span<const RocCurve> curves, std::span<const std::string> class_names,
                   const std::filesystem::path& path, const std::string& comment)
{
    auto out = open_csv(path, comment);
    out << "class,fpr,tpr\n";
    for (std::size_t c = 0; c < curves.size(); ++c) {
        for (std::size_t i = 0; i < curves[c].fpr.size(); ++i) {
            out << class_label(class_names, c) << ',' << curves[c].fpr[i] << ',' << curves[c].tpr[i] << '\n';
        }
    }
}

} // namespace rankfs
