#include "pntk/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numeric>
#include <random>

#include "binio.hpp"

namespace pntk {

void LabeledSet::validate() const {
    if (labels.size() != static_cast<std::size_t>(inputs.rows())) {
        throw Error(ErrorKind::CountMismatch, "inputs and labels disagree on sample count");
    }
    for (auto y : labels) {
        if (y >= num_classes) {
            throw Error(ErrorKind::OutOfRange, "label " + std::to_string(y) + " outside [0, " +
                                                   std::to_string(num_classes) + ")");
        }
    }
    require_finite(inputs, "dataset inputs");
}

LabeledSet LabeledSet::subset(std::span<const std::size_t> rows) const {
    LabeledSet out;
    out.inputs.resize(static_cast<Index>(rows.size()), inputs.cols());
    out.labels.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i] >= labels.size()) throw Error(ErrorKind::OutOfRange, "subset row out of range");
        out.inputs.row(static_cast<Index>(i)) = inputs.row(static_cast<Index>(rows[i]));
        out.labels.push_back(labels[rows[i]]);
    }
    out.num_classes = num_classes;
    out.provenance = provenance;
    return out;
}

Matrix one_hot(std::span<const std::size_t> labels, std::size_t num_classes) {
    Matrix y = Matrix::Zero(static_cast<Index>(labels.size()), static_cast<Index>(num_classes));
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] >= num_classes) throw Error(ErrorKind::OutOfRange, "label outside class range");
        y(static_cast<Index>(i), static_cast<Index>(labels[i])) = 1.0;
    }
    return y;
}

namespace {

std::vector<unsigned char> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

LabeledSet load_idx(const std::filesystem::path& images, const std::filesystem::path& labels,
                    std::optional<std::size_t> num_classes) {
    const auto img = read_file(images);
    const auto lab = read_file(labels);
    if (img.size() < 16 || binio::read_be32(img.data()) != 0x00000803u) {
        throw Error(ErrorKind::FormatError, images.string() + ": not an IDX image file (magic 0x00000803)");
    }
    if (lab.size() < 8 || binio::read_be32(lab.data()) != 0x00000801u) {
        throw Error(ErrorKind::FormatError, labels.string() + ": not an IDX label file (magic 0x00000801)");
    }
    const std::size_t n = binio::read_be32(img.data() + 4);
    const std::size_t rows = binio::read_be32(img.data() + 8);
    const std::size_t cols = binio::read_be32(img.data() + 12);
    const std::size_t n_labels = binio::read_be32(lab.data() + 4);
    if (n == 0 || n_labels == 0) throw Error(ErrorKind::EmptySet, "IDX header declares zero items");
    if (n != n_labels) {
        throw Error(ErrorKind::CountMismatch, "IDX images declare " + std::to_string(n) + " items, labels declare " +
                                                  std::to_string(n_labels));
    }
    const std::size_t d = rows * cols;
    if (d == 0) throw Error(ErrorKind::FormatError, "IDX images have zero pixels");
    if (img.size() < 16 + n * d) throw Error(ErrorKind::FormatError, "IDX image payload is truncated");
    if (lab.size() < 8 + n) throw Error(ErrorKind::FormatError, "IDX label payload is truncated");

    LabeledSet set;
    set.inputs.resize(static_cast<Index>(n), static_cast<Index>(d));
    for (std::size_t i = 0; i < n * d; ++i) set.inputs.data()[i] = img[16 + i] / 255.0;
    set.labels.assign(lab.begin() + 8, lab.begin() + 8 + static_cast<std::ptrdiff_t>(n));
    const std::size_t max_label = *std::max_element(set.labels.begin(), set.labels.end());
    set.num_classes = num_classes.value_or(max_label + 1);
    set.provenance = "idx:" + images.filename().string() + " pixels/255";
    set.validate();
    return set;
}

LabeledSet load_cifar_binary(std::span<const std::filesystem::path> batches) {
    constexpr std::size_t kPixels = 3072;
    constexpr std::size_t kRecord = kPixels + 1;
    std::vector<std::vector<unsigned char>> files;
    std::size_t total = 0;
    for (const auto& p : batches) {
        files.push_back(read_file(p));
        if (files.back().size() % kRecord != 0) {
            throw Error(ErrorKind::FormatError, p.string() + ": length " + std::to_string(files.back().size()) +
                                                    " is not a multiple of 3073");
        }
        total += files.back().size() / kRecord;
    }
    if (total == 0) throw Error(ErrorKind::EmptySet, "CIFAR batches contain no records");
    LabeledSet set;
    set.inputs.resize(static_cast<Index>(total), static_cast<Index>(kPixels));
    set.labels.reserve(total);
    set.num_classes = 10;
    std::size_t row = 0;
    for (const auto& f : files) {
        for (std::size_t off = 0; off < f.size(); off += kRecord, ++row) {
            if (f[off] >= 10) throw Error(ErrorKind::FormatError, "CIFAR label byte outside [0, 10)");
            set.labels.push_back(f[off]);
            for (std::size_t j = 0; j < kPixels; ++j) {
                set.inputs(static_cast<Index>(row), static_cast<Index>(j)) = f[off + 1 + j] / 255.0;
            }
        }
    }
    set.provenance = "cifar10-binary x" + std::to_string(batches.size()) + " pixels/255";
    return set;
}

LabeledSet synth_clusters(std::size_t num_classes, std::size_t per_class, std::size_t dim, double separation,
                          std::uint64_t seed) {
    if (num_classes == 0 || per_class == 0 || dim == 0) {
        throw Error(ErrorKind::InvalidArgument, "synthetic clusters need positive counts");
    }
    if (dim + 1 < num_classes) {
        throw Error(ErrorKind::InvalidArgument, "a regular simplex of " + std::to_string(num_classes) +
                                                    " vertices needs dim >= " + std::to_string(num_classes - 1));
    }
    // Helmert coordinates of the scaled basis vectors: an (O-1)-dimensional
    // regular simplex with edge length `separation`.
    const Index o = static_cast<Index>(num_classes);
    Matrix centers = Matrix::Zero(o, static_cast<Index>(dim));
    const double scale = separation / std::sqrt(2.0);
    for (Index k = 1; k < o; ++k) {
        const double norm = std::sqrt(static_cast<double>(k * (k + 1)));
        for (Index c = 0; c < o; ++c) {
            const double u = c < k ? 1.0 : (c == k ? -static_cast<double>(k) : 0.0);
            centers(c, k - 1) = scale * u / norm;
        }
    }

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    LabeledSet set;
    set.num_classes = num_classes;
    set.inputs.resize(static_cast<Index>(num_classes * per_class), static_cast<Index>(dim));
    Index row = 0;
    for (std::size_t i = 0; i < per_class; ++i) {
        for (Index c = 0; c < o; ++c, ++row) {
            for (Index j = 0; j < static_cast<Index>(dim); ++j) set.inputs(row, j) = centers(c, j) + normal(rng);
            set.labels.push_back(static_cast<std::size_t>(c));
        }
    }
    set.provenance = "synthetic clusters O=" + std::to_string(num_classes) + " per_class=" +
                     std::to_string(per_class) + " D=" + std::to_string(dim) +
                     " separation=" + std::to_string(separation) + " seed=" + std::to_string(seed);
    return set;
}

namespace {

// Largest-remainder apportionment of `total` across classes in proportion
// to `weights`, never exceeding `capacity`.
std::vector<std::size_t> apportion(std::size_t total, const std::vector<std::size_t>& weights,
                                   const std::vector<std::size_t>& capacity) {
    const double sum = static_cast<double>(std::accumulate(weights.begin(), weights.end(), std::size_t{0}));
    std::vector<std::size_t> out(weights.size(), 0);
    std::vector<std::pair<double, std::size_t>> rem;
    std::size_t assigned = 0;
    for (std::size_t c = 0; c < weights.size(); ++c) {
        const double exact = sum > 0 ? total * static_cast<double>(weights[c]) / sum : 0.0;
        out[c] = std::min(static_cast<std::size_t>(std::floor(exact)), capacity[c]);
        assigned += out[c];
        rem.push_back({exact - std::floor(exact), c});
    }
    std::stable_sort(rem.begin(), rem.end(), [](auto a, auto b) { return a.first > b.first; });
    while (assigned < total) {
        bool progressed = false;
        for (const auto& [frac, c] : rem) {
            if (assigned == total) break;
            if (out[c] < capacity[c]) {
                ++out[c];
                ++assigned;
                progressed = true;
            }
        }
        if (!progressed) break;
    }
    return out;
}

}  // namespace

std::pair<LabeledSet, LabeledSet> split(const LabeledSet& set, const SplitSpec& spec) {
    set.validate();
    const auto n = static_cast<std::size_t>(set.size());
    if (spec.train_n + spec.test_n > n) {
        throw Error(ErrorKind::InsufficientData, "split needs " + std::to_string(spec.train_n + spec.test_n) +
                                                     " points, set has " + std::to_string(n));
    }
    std::mt19937_64 rng(spec.seed);
    std::vector<std::size_t> train_idx, test_idx;
    if (spec.stratified) {
        std::vector<std::vector<std::size_t>> by_class(set.num_classes);
        for (std::size_t i = 0; i < n; ++i) by_class[set.labels[i]].push_back(i);
        std::vector<std::size_t> counts;
        for (auto& members : by_class) {
            std::shuffle(members.begin(), members.end(), rng);
            counts.push_back(members.size());
        }
        const auto train_q = apportion(spec.train_n, counts, counts);
        std::vector<std::size_t> left(counts.size());
        for (std::size_t c = 0; c < counts.size(); ++c) left[c] = counts[c] - train_q[c];
        const auto test_q = apportion(spec.test_n, counts, left);
        for (std::size_t c = 0; c < by_class.size(); ++c) {
            for (std::size_t k = 0; k < train_q[c]; ++k) train_idx.push_back(by_class[c][k]);
            for (std::size_t k = 0; k < test_q[c]; ++k) test_idx.push_back(by_class[c][train_q[c] + k]);
        }
    } else {
        std::vector<std::size_t> all(n);
        std::iota(all.begin(), all.end(), 0);
        std::shuffle(all.begin(), all.end(), rng);
        train_idx.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(spec.train_n));
        test_idx.assign(all.begin() + static_cast<std::ptrdiff_t>(spec.train_n),
                        all.begin() + static_cast<std::ptrdiff_t>(spec.train_n + spec.test_n));
    }
    std::sort(train_idx.begin(), train_idx.end());
    std::sort(test_idx.begin(), test_idx.end());
    auto train = set.subset(train_idx);
    auto test = set.subset(test_idx);
    const std::string tag = " | split seed=" + std::to_string(spec.seed) + (spec.stratified ? " stratified" : "");
    train.provenance += tag + " train=" + std::to_string(spec.train_n);
    test.provenance += tag + " test=" + std::to_string(spec.test_n);
    return {std::move(train), std::move(test)};
}

FeatureStats fit_standardizer(const LabeledSet& train) {
    if (train.size() == 0) throw Error(ErrorKind::EmptySet, "cannot standardize an empty set");
    FeatureStats s;
    s.mean = train.inputs.colwise().mean().transpose();
    const Matrix centered = train.inputs.rowwise() - s.mean.transpose();
    s.scale = (centered.colwise().squaredNorm() / static_cast<double>(train.size())).cwiseSqrt().transpose();
    for (Index j = 0; j < s.scale.size(); ++j) {
        if (s.scale(j) < 1e-12) s.scale(j) = 1.0;
    }
    return s;
}

LabeledSet apply_standardizer(const LabeledSet& set, const FeatureStats& stats) {
    if (stats.mean.size() != set.dim()) throw Error(ErrorKind::ShapeMismatch, "standardizer dimension mismatch");
    LabeledSet out = set;
    out.inputs = ((set.inputs.rowwise() - stats.mean.transpose()).array().rowwise() /
                  stats.scale.transpose().array())
                     .matrix();
    out.provenance += " | standardized";
    return out;
}

LabeledSet standardize(const LabeledSet& set) { return apply_standardizer(set, fit_standardizer(set)); }

TrainResult sgd_train(const Network& net, const LabeledSet& data, const TrainConfig& cfg) {
    return sgd_train(net, data.inputs, data.labels, cfg);
}

double classification_accuracy(const Network& net, const LabeledSet& data) {
    if (data.size() == 0) return 0.0;
    const Matrix out = forward_batch(net, data.inputs);
    std::size_t hits = 0;
    for (Index i = 0; i < out.rows(); ++i) {
        Index arg = 0;
        out.row(i).maxCoeff(&arg);
        if (static_cast<std::size_t>(arg) == data.labels[static_cast<std::size_t>(i)]) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(data.size());
}

void write_set(std::ostream& out, const LabeledSet& set) {
    set.validate();
    if (set.num_classes > 65536) throw Error(ErrorKind::Unsupported, "NTKD stores labels as u16");
    binio::put_magic(out, "NTKD");
    binio::put<std::uint32_t>(out, 1);
    binio::put<std::uint64_t>(out, static_cast<std::uint64_t>(set.size()));
    binio::put<std::uint64_t>(out, static_cast<std::uint64_t>(set.dim()));
    binio::put<std::uint64_t>(out, set.num_classes);
    out.write(reinterpret_cast<const char*>(set.inputs.data()),
              static_cast<std::streamsize>(set.inputs.size() * sizeof(double)));
    for (auto y : set.labels) binio::put<std::uint16_t>(out, static_cast<std::uint16_t>(y));
    binio::put_string(out, set.provenance);
    if (!out) throw Error(ErrorKind::IoError, "failed writing NTKD set");
}

LabeledSet read_set(std::istream& in) {
    binio::expect_magic(in, "NTKD");
    const auto version = binio::get<std::uint32_t>(in, "NTKD version");
    if (version != 1) throw Error(ErrorKind::FormatError, "unsupported NTKD version " + std::to_string(version));
    const auto n = binio::get<std::uint64_t>(in, "N");
    const auto d = binio::get<std::uint64_t>(in, "D");
    LabeledSet set;
    set.num_classes = binio::get<std::uint64_t>(in, "O");
    if (d != 0 && n > (std::uint64_t{1} << 36) / d) throw Error(ErrorKind::FormatError, "NTKD shape is implausible");
    set.inputs.resize(static_cast<Index>(n), static_cast<Index>(d));
    if (set.inputs.size() > 0 && !in.read(reinterpret_cast<char*>(set.inputs.data()),
                                          static_cast<std::streamsize>(set.inputs.size() * sizeof(double)))) {
        throw Error(ErrorKind::FormatError, "truncated NTKD inputs");
    }
    set.labels.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) set.labels.push_back(binio::get<std::uint16_t>(in, "label"));
    set.provenance = binio::get_string(in, "provenance");
    set.validate();
    return set;
}

void save_set(const std::filesystem::path& path, const LabeledSet& set) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::IoError, "cannot open " + path.string() + " for writing");
    write_set(out, set);
}

LabeledSet load_set(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
    return read_set(in);
}

}  // namespace pntk
