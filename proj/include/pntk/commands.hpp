#pragma once

// Experiment drivers behind the command-line subcommands. Each writes its
// artifacts into cfg.output.dir together with the resolved config and a
// manifest (tool version, config hash, input hashes) and returns the numbers
// it wrote so callers can check them without re-reading CSV files.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "pntk/active.hpp"
#include "pntk/config.hpp"
#include "pntk/data.hpp"
#include "pntk/metrics.hpp"

namespace pntk {

std::string tool_version();

/// Loads the configured source, splits it and optionally standardizes both
/// halves with training statistics.
std::pair<LabeledSet, LabeledSet> prepare_data(const ExperimentConfig& cfg);

struct MetricRow {
    std::size_t width = 0;
    std::uint64_t seed = 0;
    std::size_t epoch = 0;
    std::string metric;
    double value = 0.0;
};

struct SlopeFit {
    std::size_t epoch = 0;
    std::string metric;
    SweepResult fit;  // over the seed-mean value at each width
};

struct SweepReport {
    std::vector<MetricRow> rows;
    std::vector<SlopeFit> fits;

    /// Seed-mean of `metric` at `epoch`, one entry per width in sweep order.
    std::vector<double> mean_by_width(const std::string& metric, std::size_t epoch) const;
    const SlopeFit* find_fit(const std::string& metric, std::size_t epoch) const;
};

/// Width sweep of eNTK vs pNTK Gram statistics over the training split.
/// Writes sweep.csv (width,seed,epoch,metric,value) and sweep_slopes.csv.
SweepReport cmd_sweep(const ExperimentConfig& cfg, std::ostream& log);

/// Kernel regression with both kernels for every (width, seed, epoch).
/// Writes regress.csv in the sweep schema, regress_slopes.csv and one
/// prediction dump per kernel and run.
SweepReport cmd_regress(const ExperimentConfig& cfg, std::ostream& log);

struct KernelArtifact {
    std::size_t epoch = 0;
    KernelKind kind = KernelKind::pntk;
    SpectralSummary summary;
    std::string stem;
};

/// Trains to each checkpoint epoch and persists the training-set Grams as
/// NTKM files with JSON sidecars plus the NTKW checkpoint.
std::vector<KernelArtifact> cmd_kernel(const ExperimentConfig& cfg, std::ostream& log);

struct BenchRow {
    std::size_t n = 0;
    std::size_t o = 0;
    std::size_t width = 0;
    double entk_median = 0.0;
    double pntk_median = 0.0;
    double ratio() const { return pntk_median / entk_median; }
};

/// Paired wall-clock timing of entk_matrix and pntk_matrix.
std::vector<BenchRow> cmd_bench(const ExperimentConfig& cfg, std::ostream& log);

struct EstimateReport {
    ResourceEstimate entk;
    ResourceEstimate pntk;
};

std::string format_bytes(std::uint64_t bytes);
EstimateReport cmd_estimate(std::uint64_t n, std::uint64_t o, std::uint64_t bytes, std::ostream& log);

ALTrace cmd_active(const ExperimentConfig& cfg, std::ostream& log);

ALConfig al_config(const ExperimentConfig& cfg, std::size_t input_dim, std::size_t output_dim);

struct TrainReport {
    std::vector<double> epoch_loss;
    double train_accuracy = 0.0;
    double test_accuracy = 0.0;
    std::uint64_t network_hash = 0;
};

/// Trains the configured network and writes network.ntkw, train.ntkd,
/// test.ntkd and train_log.csv.
TrainReport cmd_train(const ExperimentConfig& cfg, std::ostream& log);

}  // namespace pntk
