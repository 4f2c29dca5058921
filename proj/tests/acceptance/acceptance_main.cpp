// Acceptance run: prints one PASS/FAIL line per criterion.
//
//   rankfs_acceptance [--known-red 2,5] [--only 1,4] [--workers N] [--tcga DIR]
//
// Exit status is 0 when every failing criterion is listed in --known-red.
// Criterion 10 needs a full TCGA export in DIR and is skipped otherwise.

#include "rankfs/boruta.hpp"
#include "rankfs/classifiers.hpp"
#include "rankfs/dataset.hpp"
#include "rankfs/ensemble.hpp"
#include "rankfs/eval.hpp"
#include "rankfs/fsfsp.hpp"
#include "rankfs/parallel.hpp"
#include "rankfs/pipeline.hpp"
#include "rankfs/random.hpp"
#include "rankfs/testkit.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <unistd.h>

namespace fs = std::filesystem;
using namespace rankfs;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

// Collects failed checks; the first few become the detail text.
class Checks {
public:
    void expect(bool ok, const std::string& what)
    {
        if (ok) return;
        if (failures_++ < 3) {
            if (!text_.empty()) text_ += "; ";
            text_ += what;
        }
    }
    bool ok() const { return failures_ == 0; }
    Outcome outcome(const std::string& summary) const
    {
        if (ok()) return {true, summary};
        return {false, summary + "; " + std::to_string(failures_) + " failed check(s): " + text_};
    }

private:
    std::size_t failures_ = 0;
    std::string text_;
};

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fixed(double v, int digits)
{
    std::ostringstream s;
    s << std::fixed;
    s.precision(digits);
    s << v;
    return s.str();
}

struct BenchmarkSelection {
    std::size_t informative_hits = 0;
    std::size_t noise_hits = 0;
    std::size_t confirmed = 0;
    double seconds = 0.0;
};

BenchmarkSelection select_on_benchmark(double separation, ShadowPool pool)
{
    const auto data = testkit::generate(testkit::benchmark_spec(1, separation));
    const auto ds = log_transform(data.dataset);
    BorutaConfig cfg;
    cfg.seed = 1;
    cfg.shadow_pool = pool;
    const auto t0 = std::chrono::steady_clock::now();
    const auto result = run_boruta(ds, cfg);
    BenchmarkSelection s;
    s.seconds = seconds_since(t0);
    const std::set<std::string> planted(data.informative.begin(), data.informative.end());
    for (const auto& id : result.selected) {
        (planted.count(id) ? s.informative_hits : s.noise_hits)++;
    }
    s.confirmed = result.selected.size();
    return s;
}

Outcome criterion_recovery()
{
    const auto s = select_on_benchmark(4.0, ShadowPool::Active);
    Checks c;
    c.expect(s.informative_hits >= 18, "informative confirmed " + std::to_string(s.informative_hits) + " < 18");
    c.expect(s.noise_hits <= 4, "noise confirmed " + std::to_string(s.noise_hits) + " > 4");
    c.expect(s.seconds <= 120.0, "runtime " + fixed(s.seconds, 1) + "s > 120s");
    return c.outcome(std::to_string(s.informative_hits) + "/20 informative, " + std::to_string(s.noise_hits) +
                     "/180 noise confirmed in " + fixed(s.seconds, 1) + "s");
}

Outcome criterion_null_control()
{
    const auto s = select_on_benchmark(0.0, ShadowPool::Active);
    const auto all = select_on_benchmark(0.0, ShadowPool::AllFeatures);
    Checks c;
    c.expect(s.confirmed <= 2, std::to_string(s.confirmed) + " confirmations > 2");
    return c.outcome(std::to_string(s.confirmed) + "/200 confirmed with the default shadow pool (" +
                     std::to_string(all.confirmed) + "/200 with shadow_pool=all)");
}

Outcome criterion_rank_nesting()
{
    Checks c;
    Rng rng(2024);
    constexpr std::size_t kSweeps = 24;
    std::size_t nonempty_ranks = 0;
    for (std::size_t t = 0; t < kSweeps; ++t) {
        testkit::SynthSpec spec;
        spec.n_samples = 60 + rng.index(61);
        spec.n_classes = 2 + rng.index(3);
        spec.n_informative = 3 + rng.index(6);
        spec.n_noise = 10 + rng.index(21);
        spec.class_separation = rng.uniform(2.5, 4.0);
        spec.seed = 100 + t;
        const auto ds = log_transform(testkit::generate(spec).dataset);

        SweepConfig sweep;
        sweep.depths.clear();
        std::size_t d = 1;
        const std::size_t n_depths = 3 + rng.index(4);
        for (std::size_t i = 0; i < n_depths; ++i) {
            d += 1 + rng.index(4);
            sweep.depths.push_back(d);
        }
        sweep.boruta.max_iter = 30;
        sweep.seed = 7 + t;
        const auto sets = ranking_fsfsp(ds, sweep);
        const std::string tag = "sweep " + std::to_string(t);

        c.expect(sets.ranks.size() == sweep.depths.size(), tag + ": rank count");
        for (std::size_t n = 1; n < sets.ranks.size(); ++n) {
            const std::set<std::string> outer(sets.rank(n).begin(), sets.rank(n).end());
            for (const auto& id : sets.rank(n + 1)) {
                c.expect(outer.count(id) == 1, tag + ": Rank_" + std::to_string(n + 1) + " not inside Rank_" + std::to_string(n));
            }
            c.expect(sets.rank(n + 1).size() <= sets.rank(n).size(), tag + ": sizes increase at " + std::to_string(n));
        }
        // Rank_N recomputed from the per-depth selections.
        std::map<std::string, std::size_t> runs;
        for (const auto& sel : sets.per_depth) {
            for (const auto& id : std::set<std::string>(sel.begin(), sel.end())) runs[id]++;
        }
        for (std::size_t n = 1; n <= sets.ranks.size(); ++n) {
            std::set<std::string> expected;
            for (const auto& [id, k] : runs) {
                if (k >= n) expected.insert(id);
            }
            c.expect(std::set<std::string>(sets.rank(n).begin(), sets.rank(n).end()) == expected,
                     tag + ": Rank_" + std::to_string(n) + " disagrees with run counts");
            nonempty_ranks += !sets.rank(n).empty();
        }
    }
    return c.outcome(std::to_string(kSweeps) + " randomized sweeps, " + std::to_string(nonempty_ranks) + " non-empty rank sets");
}

ProbabilityMatrix random_probabilities(Rng& rng, Eigen::Index rows, Eigen::Index k)
{
    ProbabilityMatrix p(rows, k);
    for (Eigen::Index i = 0; i < rows; ++i) {
        double s = 0.0;
        for (Eigen::Index j = 0; j < k; ++j) {
            // Coarse values make exact ties between classes common.
            p(i, j) = rng.uniform(0.0, 1.0) < 0.3 ? static_cast<double>(rng.index(4)) : rng.uniform(0.0, 1.0);
            s += p(i, j);
        }
        if (s == 0.0) {
            p(i, 0) = s = 1.0;
        }
        for (Eigen::Index j = 0; j < k; ++j) p(i, j) /= s;
    }
    return p;
}

Outcome criterion_fusion()
{
    Checks c;
    Rng rng(404);
    for (int trial = 0; trial < 1000; ++trial) {
        const auto k = static_cast<Eigen::Index>(2 + rng.index(32));
        const auto rows = static_cast<Eigen::Index>(1 + rng.index(6));
        std::vector<ProbabilityMatrix> members;
        for (int m = 0; m < 3; ++m) members.push_back(random_probabilities(rng, rows, k));
        const auto r = fuse_average_vote(members);
        for (Eigen::Index i = 0; i < rows; ++i) {
            int best = 0;
            double best_v = 0.0;
            for (Eigen::Index j = 0; j < k; ++j) {
                const double v = (members[0](i, j) + members[1](i, j) + members[2](i, j)) / 3.0;
                c.expect(r.averaged(i, j) == v, "average differs at trial " + std::to_string(trial));
                if (j == 0 || v > best_v) {
                    best = static_cast<int>(j);
                    best_v = v;
                }
            }
            c.expect(r.labels[static_cast<std::size_t>(i)] == best, "avEns label differs at trial " + std::to_string(trial));
        }
    }

    std::size_t unique_cases = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t k = 2 + rng.index(32);
        const std::size_t n = 1 + rng.index(10);
        std::vector<std::vector<int>> votes(3, std::vector<int>(n));
        for (auto& v : votes) {
            for (auto& x : v) x = static_cast<int>(rng.index(rng.uniform(0.0, 1.0) < 0.5 ? 3 : k));
        }
        const auto r = fuse_max_vote(votes);
        for (std::size_t i = 0; i < n; ++i) {
            std::map<int, std::size_t> count;
            for (const auto& v : votes) count[v[i]]++;
            std::size_t top = 0;
            for (const auto& kv : count) top = std::max(top, kv.second);
            std::vector<int> modes;
            for (const auto& [label, cnt] : count) {
                if (cnt == top) modes.push_back(label);
            }
            if (modes.size() == 1) {
                ++unique_cases;
                c.expect(r.labels[i] == modes[0], "mvEns differs from the modal label at trial " + std::to_string(trial));
            }
        }
    }

    const std::vector<std::vector<int>> example{{2}, {2}, {1}};
    c.expect(fuse_max_vote(example).labels == std::vector<int>{2}, "max_vote[2,2,1] != 2");
    return c.outcome("1000 avEns triples exact, " + std::to_string(unique_cases) + " unique-mode mvEns cases, [2,2,1] -> " +
                     std::to_string(fuse_max_vote(example).labels[0]));
}

Outcome criterion_metrics()
{
    Checks c;
    Rng rng(505);
    double worst = 0.0;
    auto close = [&](double a, double b, const std::string& what) {
        worst = std::max(worst, std::abs(a - b));
        c.expect(std::abs(a - b) <= 1e-9, what + " off by " + std::to_string(std::abs(a - b)));
    };
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t k = 2 + rng.index(8);
        ConfusionMatrix cm(k);
        std::vector<std::vector<double>> m(k, std::vector<double>(k, 0.0));
        for (std::size_t t = 0; t < k; ++t) {
            for (std::size_t p = 0; p < k; ++p) {
                const std::size_t v = rng.uniform(0.0, 1.0) < 0.2 ? 0 : rng.index(t == p ? 60 : 15);
                if (v > 0) cm.add(t, p, v);
                m[t][p] = static_cast<double>(v);
            }
        }
        if (cm.total() == 0) cm.add(0, 0), m[0][0] = 1.0;
        const auto r = metrics(cm);

        double n = 0, diag = 0;
        std::vector<double> rows(k, 0.0), cols(k, 0.0);
        for (std::size_t t = 0; t < k; ++t) {
            for (std::size_t p = 0; p < k; ++p) {
                n += m[t][p];
                rows[t] += m[t][p];
                cols[p] += m[t][p];
            }
            diag += m[t][t];
        }
        double pe = 0.0;
        for (std::size_t i = 0; i < k; ++i) pe += rows[i] * cols[i] / (n * n);
        const double p0 = diag / n;
        const double kappa = pe == 1.0 ? (p0 == 1.0 ? 1.0 : 0.0) : (p0 - pe) / (1.0 - pe);
        double pm = 0, rm = 0, fm = 0, pw = 0, rw = 0, fw = 0;
        for (std::size_t i = 0; i < k; ++i) {
            const double prec = cols[i] > 0 ? m[i][i] / cols[i] : 0.0;
            const double rec = rows[i] > 0 ? m[i][i] / rows[i] : 0.0;
            const double f1 = prec + rec > 0 ? 2 * prec * rec / (prec + rec) : 0.0;
            pm += prec / static_cast<double>(k);
            rm += rec / static_cast<double>(k);
            fm += f1 / static_cast<double>(k);
            pw += prec * rows[i] / n;
            rw += rec * rows[i] / n;
            fw += f1 * rows[i] / n;
        }
        const std::string tag = "matrix " + std::to_string(trial) + " ";
        close(r.accuracy, p0, tag + "accuracy");
        close(r.kappa, kappa, tag + "kappa");
        close(r.precision_macro, pm, tag + "macro precision");
        close(r.recall_macro, rm, tag + "macro recall");
        close(r.f1_macro, fm, tag + "macro F1");
        close(r.precision_weighted, pw, tag + "weighted precision");
        close(r.recall_weighted, rw, tag + "weighted recall");
        close(r.f1_weighted, fw, tag + "weighted F1");
    }

    ConfusionMatrix hand(2);
    hand.add(0, 0, 20);
    hand.add(0, 1, 5);
    hand.add(1, 0, 10);
    hand.add(1, 1, 15);
    const double hand_kappa = metrics(hand).kappa;
    c.expect(hand_kappa == 0.4, "hand-case kappa " + fixed(hand_kappa, 17) + " != 0.4");

    // AUC against an explicit ROC polygon.
    double auc_worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 4 + rng.index(60);
        std::vector<double> scores(n);
        std::vector<bool> pos(n);
        std::size_t n_pos = 0;
        for (std::size_t i = 0; i < n; ++i) {
            scores[i] = rng.uniform(0.0, 1.0) < 0.3 ? static_cast<double>(rng.index(5)) : rng.uniform(0.0, 5.0);
            pos[i] = rng.uniform(0.0, 1.0) < 0.4;
            n_pos += pos[i];
        }
        if (n_pos == 0) pos[0] = true, ++n_pos;
        if (n_pos == n) pos[0] = false, --n_pos;
        std::vector<double> thresholds(scores);
        std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
        thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
        double area = 0.0, prev_f = 0.0, prev_t = 0.0;
        for (double th : thresholds) {
            double tp = 0, fp = 0;
            for (std::size_t i = 0; i < n; ++i) {
                if (scores[i] >= th) (pos[i] ? tp : fp) += 1.0;
            }
            const double tpr = tp / static_cast<double>(n_pos);
            const double fpr = fp / static_cast<double>(n - n_pos);
            area += (fpr - prev_f) * (tpr + prev_t) / 2.0;
            prev_f = fpr;
            prev_t = tpr;
        }
        const std::unique_ptr<bool[]> flags(new bool[n]);
        std::copy(pos.begin(), pos.end(), flags.get());
        const double auc = roc_auc(scores, std::span<const bool>(flags.get(), n));
        auc_worst = std::max(auc_worst, std::abs(auc - area));
        c.expect(std::abs(auc - area) <= 1e-9, "AUC set " + std::to_string(trial) + " off by " + std::to_string(std::abs(auc - area)));
    }
    const std::vector<double> s{0.1, 0.2, 0.8, 0.9};
    const bool separated[] = {false, false, true, true};
    const bool inverted[] = {true, true, false, false};
    c.expect(roc_auc(s, separated) == 1.0, "separated AUC != 1");
    c.expect(roc_auc(s, inverted) == 0.0, "inverted AUC != 0");

    return c.outcome("max metric error " + std::to_string(worst) + ", max AUC error " + std::to_string(auc_worst) +
                     ", hand kappa " + fixed(hand_kappa, 17));
}

Outcome criterion_folds()
{
    Checks c;
    Rng rng(606);
    std::size_t many_class = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const bool wide = trial % 3 == 0;
        const std::size_t n_classes = wide ? 33 : 2 + rng.index(8);
        const std::size_t k = 2 + rng.index(9);
        std::vector<double> weight(n_classes);
        for (auto& w : weight) w = wide ? std::exp(rng.uniform(-2.0, 2.0)) : rng.uniform(0.5, 1.5);
        double total_w = 0;
        for (auto w : weight) total_w += w;
        const std::size_t n = n_classes * k + rng.index(wide ? 800 : 300);
        // Every class gets k samples up front, the rest follow the weights.
        std::vector<int> labels(n);
        for (std::size_t i = 0; i < n; ++i) {
            if (i < n_classes * k) {
                labels[i] = static_cast<int>(i % n_classes);
                continue;
            }
            double u = rng.uniform(0.0, 1.0) * total_w;
            std::size_t cls = 0;
            while (cls + 1 < n_classes && u >= weight[cls]) u -= weight[cls++];
            labels[i] = static_cast<int>(cls);
        }
        many_class += wide;
        const auto plan = stratified_folds(labels, k, 1000 + static_cast<std::uint64_t>(trial));
        const std::string tag = "vector " + std::to_string(trial);
        c.expect(plan.folds.size() == k, tag + ": fold count");
        std::vector<int> seen(n, 0);
        for (const auto& f : plan.folds) {
            for (auto i : f) {
                if (i < n) seen[i]++;
                else c.expect(false, tag + ": index out of range");
            }
        }
        c.expect(std::all_of(seen.begin(), seen.end(), [](int v) { return v == 1; }), tag + ": folds not a partition");
        for (std::size_t cls = 0; cls < n_classes; ++cls) {
            std::size_t lo = n, hi = 0;
            for (const auto& f : plan.folds) {
                const auto cnt = static_cast<std::size_t>(
                    std::count_if(f.begin(), f.end(), [&](std::size_t i) { return labels[i] == static_cast<int>(cls); }));
                lo = std::min(lo, cnt);
                hi = std::max(hi, cnt);
            }
            c.expect(hi - lo <= 1, tag + ": class " + std::to_string(cls) + " spread " + std::to_string(hi - lo));
        }
    }

    // The pipeline sees sample ids, so any leak of a test row into training shows up.
    const auto ds = log_transform(testkit::generate(testkit::benchmark_spec(3)).dataset);
    const auto plan = stratified_folds(ds.labels(), 10, 9, ds.class_names());
    std::vector<int> tested(ds.n_samples(), 0);
    std::mutex m;
    const FoldPipeline probe = [&](const ExpressionDataset& train, const ExpressionDataset& test, std::size_t fold) {
        const std::set<std::string> train_ids(train.sample_ids().begin(), train.sample_ids().end());
        std::lock_guard lock(m);
        for (const auto& id : test.sample_ids()) {
            c.expect(train_ids.count(id) == 0, "fold " + std::to_string(fold) + " trains on test sample " + id);
        }
        c.expect(train.n_samples() + test.n_samples() == ds.n_samples(), "fold " + std::to_string(fold) + " loses samples");
        for (auto i : plan.folds[fold]) tested[i]++;
        std::vector<int> expected;
        for (auto i : plan.folds[fold]) expected.push_back(ds.labels()[i]);
        c.expect(test.labels() == expected, "fold " + std::to_string(fold) + " test rows differ from the plan");
        return FoldOutput{test.labels(), std::nullopt};
    };
    const auto cv = cross_validate(probe, ds, plan);
    c.expect(std::all_of(tested.begin(), tested.end(), [](int v) { return v == 1; }), "some sample tested other than once");
    c.expect(cv.aggregate.accuracy == 1.0, "oracle predictions scored " + fixed(cv.aggregate.accuracy, 17));
    return c.outcome("100 label vectors (" + std::to_string(many_class) + " with 33 imbalanced classes), 10-fold leak probe clean");
}

std::vector<std::string> determinism_overrides(const fs::path& root, std::size_t workers)
{
    return {
        "paths.matrix=" + (root / "raw" / "matrix.csv").string(),
        "paths.labels=" + (root / "raw" / "labels.csv").string(),
        "paths.feature_types=" + (root / "raw" / "feature_types.csv").string(),
        "paths.output_dir=" + (root / "out").string(),
        "workers=" + std::to_string(workers),
        "sweep.depths=[5,10,15]",
        "cv.k=5",
        "classifiers.GB.n_rounds=100",
        R"(evaluate.feature_sets=["all","rank:1","rank:3"])",
    };
}

std::string read_all(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome criterion_determinism()
{
    Checks c;
    const fs::path root = fs::temp_directory_path() / ("rankfs_acceptance_" + std::to_string(::getpid()));
    std::map<std::string, std::string> reference;
    std::size_t runs = 0;
    const auto t0 = std::chrono::steady_clock::now();
    for (std::size_t workers : {1, 1, 4, 8}) {
        fs::remove_all(root);
        const auto cfg = pipeline::load_config(std::nullopt, determinism_overrides(root, workers));
        set_default_workers(cfg.workers);
        std::ostringstream log;
        pipeline::cmd_synth(cfg, log);
        pipeline::cmd_preprocess(cfg, log);
        pipeline::cmd_select(cfg, log);
        pipeline::cmd_evaluate(cfg, log);
        std::map<std::string, std::string> files;
        for (const auto& e : fs::recursive_directory_iterator(root)) {
            if (e.is_regular_file()) files[fs::relative(e.path(), root).string()] = read_all(e.path());
        }
        if (runs++ == 0) {
            reference = std::move(files);
            continue;
        }
        const std::string tag = "workers=" + std::to_string(workers) + " run " + std::to_string(runs);
        c.expect(files.size() == reference.size(), tag + ": artifact count differs");
        for (const auto& [name, text] : reference) {
            const auto it = files.find(name);
            c.expect(it != files.end() && it->second == text, tag + ": " + name + " differs");
        }
    }
    fs::remove_all(root);
    set_default_workers(1);
    return c.outcome(std::to_string(reference.size()) + " artifacts compared over " + std::to_string(runs) +
                     " runs (workers 1, 1, 4, 8) in " + fixed(seconds_since(t0), 0) + "s");
}

// Shared by the classifier and ensemble criteria.
struct BenchmarkCv {
    std::vector<std::string> names; // LR SVM GB KNN RF avEns
    std::vector<double> accuracy;
};

const BenchmarkCv& benchmark_cv()
{
    static const BenchmarkCv cached = [] {
        const auto ds = log_transform(testkit::generate(testkit::benchmark_spec(1)).dataset);
        const auto plan = stratified_folds(ds.labels(), 10, 1, ds.class_names());
        const std::vector<ClassifierKind> kinds{ClassifierKind::SoftmaxLR, ClassifierKind::LinearSVM,
                                                ClassifierKind::GradientBoost, ClassifierKind::KNN,
                                                ClassifierKind::RandomForest};
        const MultiFoldPipeline pipe = [&](const ExpressionDataset& train_ds, const ExpressionDataset& test_ds, std::size_t fold) {
            std::vector<ProbabilityMatrix> probs(kinds.size());
            parallel_for(kinds.size(), [&](std::size_t i) {
                probs[i] = train(ClassifierSpec::defaults(kinds[i], derive_seed(1, {fold, i})), train_ds).predict_proba(test_ds);
            });
            std::vector<FoldOutput> out;
            for (const auto& p : probs) out.push_back({argmax_rows(p), p});
            const std::vector<ProbabilityMatrix> members{probs[0], probs[1], probs[2]};
            const auto fused = fuse_average_vote(members);
            out.push_back({fused.labels, fused.averaged});
            return out;
        };
        const auto results = cross_validate_models(pipe, kinds.size() + 1, ds, plan);
        BenchmarkCv cv;
        cv.names = {"SoftmaxLR", "LinearSVM", "GradientBoost", "KNN", "RandomForest", "avEns"};
        for (const auto& r : results) cv.accuracy.push_back(r.aggregate.accuracy);
        return cv;
    }();
    return cached;
}

Outcome criterion_classifiers()
{
    Checks c;
    const auto t0 = std::chrono::steady_clock::now();
    const auto& cv = benchmark_cv();
    std::string accs;
    for (std::size_t i = 0; i < 5; ++i) {
        accs += (i ? ", " : "") + cv.names[i] + " " + fixed(cv.accuracy[i] * 100.0, 2) + "%";
        c.expect(cv.accuracy[i] >= 0.95, cv.names[i] + " CV accuracy below 95%");
    }

    // Central differences on a 20-sample instance.
    const auto small = log_transform(testkit::generate([] {
        auto s = testkit::benchmark_spec(5);
        s.n_samples = 20;
        s.n_informative = 4;
        s.n_noise = 6;
        return s;
    }()).dataset);
    Rng rng(77);
    Matrix w(static_cast<Eigen::Index>(small.n_classes()), static_cast<Eigen::Index>(small.n_features() + 1));
    for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = rng.normal() * 0.3;
    Matrix g;
    softmax_lr_objective(w, small.values(), small.labels(), 20.0, &g);
    double worst_rel = 0.0;
    for (Eigen::Index i = 0; i < w.size(); ++i) {
        const double h = 1e-6;
        Matrix wp = w, wm = w;
        wp(i) += h;
        wm(i) -= h;
        const double fd = (softmax_lr_objective(wp, small.values(), small.labels(), 20.0) -
                           softmax_lr_objective(wm, small.values(), small.labels(), 20.0)) / (2.0 * h);
        const double rel = std::abs(fd - g(i)) / std::max(1.0, std::abs(g(i)));
        worst_rel = std::max(worst_rel, rel);
    }
    c.expect(worst_rel <= 1e-4, "LR gradient relative error " + std::to_string(worst_rel));

    const auto bench = log_transform(testkit::generate(testkit::benchmark_spec(1)).dataset);
    const auto gb = train(ClassifierSpec::defaults(ClassifierKind::GradientBoost, 1), bench);
    const auto& loss = gb.training_loss();
    c.expect(!loss.empty(), "GB recorded no training loss");
    // Once the fit plateaus a round's exact improvement is below double
    // resolution of a 500-term sum, so allow rounding-level jitter only.
    std::size_t increases = 0;
    double worst_rise = 0.0;
    for (std::size_t r = 1; r < loss.size(); ++r) {
        const double rise = (loss[r] - loss[r - 1]) / loss[r - 1];
        worst_rise = std::max(worst_rise, rise);
        increases += rise > 1e-12;
    }
    c.expect(increases == 0, "GB loss increased beyond rounding in " + std::to_string(increases) + " rounds");

    return c.outcome(accs + "; LR gradient rel err " + std::to_string(worst_rel) + "; GB loss non-increasing over " +
                     std::to_string(loss.size() - 1) + " rounds (max relative rise " + fixed(worst_rise * 1e15, 1) + "e-15); " + fixed(seconds_since(t0), 0) + "s");
}

Outcome criterion_ensemble()
{
    const auto& cv = benchmark_cv();
    const double best = std::max({cv.accuracy[0], cv.accuracy[1], cv.accuracy[2]});
    const double av = cv.accuracy[5];
    Checks c;
    c.expect(av >= best - 0.01, "avEns " + fixed(av * 100, 2) + "% below best member " + fixed(best * 100, 2) + "% - 1pt");
    return c.outcome("avEns " + fixed(av * 100.0, 2) + "% vs best member " + fixed(best * 100.0, 2) + "%");
}

Outcome criterion_full_scale(const fs::path& dir)
{
    Checks c;
    auto loaded = load_dataset(dir / "matrix.csv", dir / "labels.csv", dir / "feature_types.csv");
    const auto ds = log_transform(filter_low_expression(loaded.dataset));
    c.expect(ds.n_features() == 36017, "surviving features " + std::to_string(ds.n_features()) + " != 36017");
    const auto stats = compute_partition_stats(ds);
    const auto& all = stats.front();
    c.expect(std::abs(all.max - 19.07) <= 0.01, "max " + fixed(all.max, 3));
    c.expect(std::abs(all.mean - 1.20) <= 0.01, "mean " + fixed(all.mean, 3));
    c.expect(std::abs(all.sd - 1.65) <= 0.01, "sd " + fixed(all.sd, 3));
    const std::map<std::string, std::size_t> widths{{"mRNA", 17659}, {"miRNA", 639}, {"lncRNA", 8961}, {"otherRNA", 8758}};
    std::string got;
    for (const auto& s : stats) {
        if (s.group == "All") continue;
        got += (got.empty() ? "" : "/") + std::to_string(s.count);
        const auto it = widths.find(s.group);
        c.expect(it != widths.end() && it->second == s.count, s.group + " width " + std::to_string(s.count));
    }
    return c.outcome(std::to_string(ds.n_features()) + " features, max " + fixed(all.max, 2) + " mean " + fixed(all.mean, 2) +
                     " sd " + fixed(all.sd, 2) + ", widths " + got);
}

std::set<int> parse_list(const std::string& text)
{
    std::set<int> out;
    std::stringstream s(text);
    for (std::string item; std::getline(s, item, ',');) {
        if (!item.empty()) out.insert(std::stoi(item));
    }
    return out;
}

} // namespace

int main(int argc, char** argv)
{
    std::set<int> known_red, only;
    std::size_t workers = std::max(1u, std::thread::hardware_concurrency());
    std::optional<fs::path> tcga;
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        auto value = [&]() -> std::string {
            if (i + 1 >= argc) {
                std::cerr << a << " needs a value\n";
                std::exit(2);
            }
            return argv[++i];
        };
        if (a == "--known-red") known_red = parse_list(value());
        else if (a == "--only") only = parse_list(value());
        else if (a == "--workers") workers = std::stoul(value());
        else if (a == "--tcga") tcga = value();
        else {
            std::cerr << "usage: rankfs_acceptance [--known-red LIST] [--only LIST] [--workers N] [--tcga DIR]\n";
            return 2;
        }
    }

    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"planted-feature recovery", criterion_recovery},
        {"null control", criterion_null_control},
        {"rank nesting", criterion_rank_nesting},
        {"fusion oracles", criterion_fusion},
        {"metric oracles", criterion_metrics},
        {"fold correctness", criterion_folds},
        {"determinism", criterion_determinism},
        {"classifier sanity", criterion_classifiers},
        {"ensemble dominance", criterion_ensemble},
    };

    int unexpected = 0;
    auto report = [&](int id, const std::string& title, const Outcome& o) {
        std::cout << "criterion " << id << " " << (o.pass ? "PASS" : "FAIL") << ": " << title << " -- " << o.detail;
        if (!o.pass && known_red.count(id)) std::cout << " [known red]";
        if (o.pass && known_red.count(id)) std::cout << " [listed as known red but passed]";
        std::cout << std::endl;
        if (!o.pass && !known_red.count(id)) ++unexpected;
    };
    auto guarded = [](const std::function<Outcome()>& f) {
        try {
            return f();
        } catch (const std::exception& e) {
            return Outcome{false, std::string("exception: ") + e.what()};
        }
    };

    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i + 1);
        if (!only.empty() && !only.count(id)) continue;
        set_default_workers(workers);
        report(id, criteria[i].first, guarded(criteria[i].second));
    }
    if (tcga && (only.empty() || only.count(10))) {
        set_default_workers(workers);
        report(10, "full-scale preprocessing", guarded([&] { return criterion_full_scale(*tcga); }));
    } else if (only.empty() || only.count(10)) {
        std::cout << "criterion 10 SKIP: full-scale preprocessing -- needs --tcga DIR with the TCGA export" << std::endl;
    }
    return unexpected == 0 ? 0 : 1;
}
