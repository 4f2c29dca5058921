#include "rankfs/testkit.hpp"

#include "rankfs/error.hpp"
#include "rankfs/random.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

namespace rankfs::testkit {

void SynthSpec::validate() const
{
    if (n_samples < 1 || n_classes < 2) {
        throw InvalidArgument("synth: need samples and at least two classes");
    }
    if (n_informative + n_noise == 0) {
        throw InvalidArgument("synth: no features requested");
    }
    const double mix = std::accumulate(feature_type_mix.begin(), feature_type_mix.end(), 0.0);
    if (std::abs(mix - 1.0) > 1e-9 || std::any_of(feature_type_mix.begin(), feature_type_mix.end(), [](double p) { return p < 0.0; })) {
        throw InvalidArgument("synth: feature_type_mix must be non-negative and sum to 1");
    }
    if (!(class_separation >= 0.0)) {
        throw InvalidArgument("synth: class_separation must be >= 0");
    }
    if (!imbalance.empty()) {
        if (imbalance.size() != n_classes) {
            throw InvalidArgument("synth: imbalance needs one proportion per class");
        }
        const double s = std::accumulate(imbalance.begin(), imbalance.end(), 0.0);
        if (std::abs(s - 1.0) > 1e-9 || std::any_of(imbalance.begin(), imbalance.end(), [](double p) { return p <= 0.0; })) {
            throw InvalidArgument("synth: imbalance proportions must be positive and sum to 1");
        }
    }
    if (n_samples < n_classes) {
        throw InvalidArgument("synth: fewer samples than classes");
    }
}

namespace {

// Largest-remainder apportionment of `total` items over `weights`.
std::vector<std::size_t> apportion(std::size_t total, std::span<const double> weights)
{
    std::vector<std::size_t> counts(weights.size(), 0);
    std::vector<std::pair<double, std::size_t>> remainders;
    std::size_t used = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        const double exact = weights[i] * static_cast<double>(total);
        counts[i] = static_cast<std::size_t>(std::floor(exact));
        used += counts[i];
        remainders.emplace_back(-(exact - std::floor(exact)), i);
    }
    std::sort(remainders.begin(), remainders.end());
    for (std::size_t r = 0; used < total; ++r, ++used) {
        ++counts[remainders[r % remainders.size()].second];
    }
    return counts;
}

std::string padded(const char* prefix, std::size_t i, std::size_t width)
{
    std::string digits = std::to_string(i);
    if (digits.size() < width) {
        digits.insert(0, width - digits.size(), '0');
    }
    return prefix + digits;
}

} // namespace

SynthData generate(const SynthSpec& spec)
{
    spec.validate();
    Rng rng(derive_seed(spec.seed, {0x5157}));
    const std::size_t n = spec.n_samples;
    const std::size_t k = spec.n_classes;
    const std::size_t p = spec.n_informative + spec.n_noise;

    // Labels: per-class counts (every class gets at least one), then shuffled.
    std::vector<double> props = spec.imbalance;
    if (props.empty()) {
        props.assign(k, 1.0 / static_cast<double>(k));
    }
    auto class_counts = apportion(n - k, props);
    std::vector<int> labels;
    for (std::size_t c = 0; c < k; ++c) {
        labels.insert(labels.end(), class_counts[c] + 1, static_cast<int>(c));
    }
    rng.shuffle(std::span<int>(labels));

    // Feature roles: informative positions are a seeded sample of the columns.
    std::vector<std::size_t> columns(p);
    std::iota(columns.begin(), columns.end(), std::size_t{0});
    rng.shuffle(std::span<std::size_t>(columns));
    std::vector<int> informative_rank(p, -1); // -1: noise
    for (std::size_t j = 0; j < spec.n_informative; ++j) {
        informative_rank[columns[j]] = static_cast<int>(j);
    }

    // Types dealt from an apportioned, shuffled pool; informative features are
    // then checked to span at least two types when the mix allows it.
    const auto type_counts = apportion(p, spec.feature_type_mix);
    std::vector<FeatureType> types;
    for (std::size_t t = 0; t < kFeatureTypeCount; ++t) {
        types.insert(types.end(), type_counts[t], static_cast<FeatureType>(t));
    }
    rng.shuffle(std::span<FeatureType>(types));
    const auto nonzero_types = std::count_if(type_counts.begin(), type_counts.end(), [](std::size_t c) { return c > 0; });
    if (spec.n_informative >= 2 && nonzero_types >= 2) {
        const std::size_t first = columns[0];
        bool spans = false;
        for (std::size_t j = 1; j < spec.n_informative; ++j) {
            spans = spans || types[columns[j]] != types[first];
        }
        if (!spans) {
            for (std::size_t c = 0; c < p; ++c) {
                if (informative_rank[c] < 0 && types[c] != types[first]) {
                    std::swap(types[c], types[columns[1]]);
                    break;
                }
            }
        }
    }

    const std::size_t width = std::to_string(std::max<std::size_t>(p, n)).size();
    std::vector<FeatureEntry> entries;
    std::vector<std::string> informative_ids;
    Matrix values(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
    for (std::size_t c = 0; c < p; ++c) {
        FeatureEntry e{padded("g", c, width), types[c]};
        const double base = rng.uniform(0.5, 4.0);
        const int role = informative_rank[c];
        const int shifted_class = role >= 0 ? role % static_cast<int>(k) : -1;
        for (std::size_t i = 0; i < n; ++i) {
            double z = base + rng.normal();
            if (labels[i] == shifted_class) {
                z += spec.class_separation;
            }
            z = std::max(z, 0.0);
            values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = std::exp2(z) - 1.0;
        }
        if (role >= 0) {
            informative_ids.push_back(e.id);
        }
        entries.push_back(std::move(e));
    }

    std::vector<std::string> sample_ids;
    for (std::size_t i = 0; i < n; ++i) {
        sample_ids.push_back(padded("s", i, width));
    }
    std::vector<std::string> class_names;
    for (std::size_t c = 0; c < k; ++c) {
        class_names.push_back(padded("class", c, std::to_string(k - 1).size()));
    }
    ExpressionDataset ds(std::move(values), std::move(sample_ids), std::move(labels), std::move(class_names),
                         FeatureCatalog(std::move(entries)), false);
    return {std::move(ds), std::move(informative_ids)};
}

SynthSpec benchmark_spec(std::uint64_t seed, double separation)
{
    SynthSpec spec;
    spec.n_samples = 500;
    spec.n_classes = 3;
    spec.n_informative = 20;
    spec.n_noise = 180;
    spec.class_separation = separation;
    spec.seed = seed;
    return spec;
}

void write(const SynthData& data, const std::filesystem::path& dir)
{
    save_dataset(data.dataset, dir / "matrix.csv", dir / "labels.csv", dir / "feature_types.csv");
}

} // namespace rankfs::testkit
