#pragma once

// Experiment configuration: a plain-text INI document with [section] headers,
// `key = value` lines and `#` / `;` comments. Every key must be known; parse
// errors name the offending line.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "pntk/active.hpp"
#include "pntk/net.hpp"
#include "pntk/ntk.hpp"

namespace pntk {

struct IniEntry {
    std::string value;
    int line = 0;
};

/// section -> key -> entry, in file order of first appearance.
struct IniDocument {
    std::map<std::string, std::map<std::string, IniEntry>> sections;
    std::map<std::string, int> header_lines;  // first header line per section
    std::string source;
};

IniDocument parse_ini(std::istream& in, const std::string& source = "<config>");

struct NetSection {
    std::size_t hidden_layers = 2;
    std::size_t width = 256;
    Activation activation = Activation::relu;
    double leaky_slope = 0.01;
    InitScheme init = InitScheme::he_fan_in_gaussian;
    Parameterization parameterization = Parameterization::standard;
    std::uint64_t seed = 0;
    bool operator==(const NetSection&) const = default;
};

enum class DataSource { synthetic, idx, cifar, ntkd };
std::string to_string(DataSource s);

struct DataSection {
    DataSource source = DataSource::synthetic;
    std::string images;                      // idx
    std::string labels;                      // idx
    std::vector<std::string> cifar_batches;  // cifar
    std::string path;                        // ntkd
    std::size_t classes = 10;                // synthetic
    std::size_t per_class = 100;             // synthetic
    std::size_t dim = 32;                    // synthetic
    double separation = 4.0;                 // synthetic
    std::size_t train_n = 100;
    std::size_t test_n = 50;
    bool stratified = true;
    bool standardize = false;
    std::uint64_t seed = 0;
    bool operator==(const DataSection&) const = default;
};

struct SweepSection {
    std::vector<std::size_t> widths{64, 128, 256, 512, 1024};
    std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
    /// Desk-scale checkpoints standing in for 0/50/100/150/200 epochs.
    std::vector<std::size_t> checkpoints{0};
    bool operator==(const SweepSection&) const = default;
};

enum class KernelChoice { entk, pntk, both };

struct KernelSection {
    KernelChoice kind = KernelChoice::both;
    PntkMode mode;
    double jitter = 1e-8;  // relative to trace(K)/dim(K)
    bool center = true;
    std::uint64_t memory_cap = std::uint64_t{4} << 30;
    std::uint64_t panel_bytes = std::uint64_t{256} << 20;
    bool operator==(const KernelSection&) const = default;
};

struct TrainSection {
    std::size_t batch_size = 128;
    double lr = 0.1;
    double momentum = 0.9;
    double weight_decay = 1e-4;
    std::size_t epochs = 0;
    bool operator==(const TrainSection&) const = default;
};

struct BenchSection {
    std::vector<std::size_t> n_values{50, 100, 200};
    std::vector<std::size_t> o_values{10};
    std::vector<std::size_t> widths{256};
    std::size_t warmup = 1;
    std::size_t repeats = 5;
    bool operator==(const BenchSection&) const = default;
};

struct ActiveSection {
    std::size_t initial_labeled = 100;
    std::size_t per_cycle = 20;
    std::size_t cycles = 5;
    std::string acquisition = "pntk";  // pntk | entk | random
    std::size_t pool_cap = 500;
    std::size_t ref_size = 100;
    std::size_t initial_epochs = 20;
    std::size_t retrain_epochs = 10;
    bool warm_start = true;
    bool operator==(const ActiveSection&) const = default;
};

struct OutputSection {
    std::string dir = "out";
    bool save_kernels = false;  // NTKM dumps alongside CSVs
    bool operator==(const OutputSection&) const = default;
};

struct EstimateSection {
    std::uint64_t n = 50000;
    std::uint64_t o = 10;
    std::uint64_t bytes = 8;
    bool operator==(const EstimateSection&) const = default;
};

struct ExperimentConfig {
    NetSection net;
    DataSection data;
    SweepSection sweep;
    KernelSection kernel;
    TrainSection train;
    BenchSection bench;
    ActiveSection active;
    EstimateSection estimate;
    OutputSection output;
    bool operator==(const ExperimentConfig&) const = default;
};

ExperimentConfig config_from_ini(const IniDocument& doc);
ExperimentConfig parse_config(std::istream& in, const std::string& source = "<config>");
ExperimentConfig load_config(const std::filesystem::path& path);

/// Fully resolved document listing every key; parses back to the same config.
std::string to_ini(const ExperimentConfig& cfg);

/// Network spec for the given data shape, with the configured width unless
/// `width_override` is non-zero.
NetworkSpec network_spec(const ExperimentConfig& cfg, std::size_t input_dim, std::size_t output_dim,
                         std::size_t width_override = 0);

KernelOptions kernel_options(const ExperimentConfig& cfg);
TrainConfig train_config(const ExperimentConfig& cfg);

}  // namespace pntk
