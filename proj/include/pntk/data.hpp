#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pntk/linalg.hpp"
#include "pntk/net.hpp"

namespace pntk {

struct LabeledSet {
    Matrix inputs;                    // N x D
    std::vector<std::size_t> labels;  // N, each in [0, num_classes)
    std::size_t num_classes = 0;
    std::string provenance;

    Index size() const noexcept { return inputs.rows(); }
    Index dim() const noexcept { return inputs.cols(); }
    void validate() const;
    LabeledSet subset(std::span<const std::size_t> rows) const;
    bool operator==(const LabeledSet&) const = default;
};

/// N x O one-hot matrix.
Matrix one_hot(std::span<const std::size_t> labels, std::size_t num_classes);

/// IDX image/label pair (magic 0x00000803 / 0x00000801). Pixels are scaled
/// to [0, 1] and flattened row-major. num_classes defaults to 1 + max label.
LabeledSet load_idx(const std::filesystem::path& images, const std::filesystem::path& labels,
                    std::optional<std::size_t> num_classes = std::nullopt);

/// CIFAR-10 binary batches: records of 1 label byte + 3072 channel-major
/// pixel bytes, scaled to [0, 1].
LabeledSet load_cifar_binary(std::span<const std::filesystem::path> batches);

/// Gaussian clusters with unit covariance around the vertices of a regular
/// simplex whose edge length is `separation`. Needs dim >= num_classes - 1.
LabeledSet synth_clusters(std::size_t num_classes, std::size_t per_class, std::size_t dim, double separation,
                          std::uint64_t seed);

struct SplitSpec {
    std::size_t train_n = 0;
    std::size_t test_n = 0;
    std::uint64_t seed = 0;
    bool stratified = true;
};

std::pair<LabeledSet, LabeledSet> split(const LabeledSet& set, const SplitSpec& spec);

struct FeatureStats {
    Vector mean;
    Vector scale;  // population std; 1 where a feature is constant
};

FeatureStats fit_standardizer(const LabeledSet& train);
LabeledSet apply_standardizer(const LabeledSet& set, const FeatureStats& stats);
/// Per-feature zero mean, unit variance using the set's own statistics.
LabeledSet standardize(const LabeledSet& set);

TrainResult sgd_train(const Network& net, const LabeledSet& data, const TrainConfig& cfg);

/// Fraction of rows whose argmax matches the label.
double classification_accuracy(const Network& net, const LabeledSet& data);

// "NTKD" set format: magic, u32 version, u64 N, u64 D, u64 O, f64 inputs,
// u16 labels, then a length-prefixed provenance string.
void write_set(std::ostream& out, const LabeledSet& set);
LabeledSet read_set(std::istream& in);
void save_set(const std::filesystem::path& path, const LabeledSet& set);
LabeledSet load_set(const std::filesystem::path& path);

}  // namespace pntk
