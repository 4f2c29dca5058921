#pragma once

#include "rankfs/dataset.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace rankfs::testkit {

struct SynthSpec {
    std::size_t n_samples = 500;
    std::size_t n_classes = 3;
    std::size_t n_informative = 20;
    std::size_t n_noise = 180;
    // Proportions over mRNA, miRNA, lncRNA, otherRNA.
    std::array<double, 4> feature_type_mix = {0.5, 0.05, 0.25, 0.2};
    double class_separation = 4.0;
    // Per-class proportions; empty means balanced.
    std::vector<double> imbalance;
    std::uint64_t seed = 1;

    void validate() const;
};

struct SynthData {
    ExpressionDataset dataset; // raw expression scale, not log-transformed
    std::vector<std::string> informative; // catalog order
};

// Latent values are class-conditional Gaussians: informative feature j shifts
// the mean of one class (j mod n_classes) by class_separation standard
// deviations; noise features ignore the label. Latents are clipped at 0 and
// mapped to expression scale by 2^z - 1, so log_transform recovers them.
SynthData generate(const SynthSpec& spec);

// The separable benchmark: 500 samples, 3 classes, 20 informative among 200.
SynthSpec benchmark_spec(std::uint64_t seed = 1, double separation = 4.0);

// Writes matrix.csv, labels.csv and feature_types.csv into `dir`.
void write(const SynthData& data, const std::filesystem::path& dir);

} // namespace rankfs::testkit
