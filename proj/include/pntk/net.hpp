#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "pntk/linalg.hpp"

namespace pntk {

enum class Activation { relu, gelu, leaky_relu };
enum class InitScheme { he_fan_in_gaussian, he_fan_in_truncated };
// Only the standard ("fan-in") parameterization is implemented; ntk is
// reserved and rejected by init_network.
enum class Parameterization { standard, ntk };

std::string to_string(Activation a);
std::string to_string(InitScheme s);
Activation parse_activation(const std::string& s);
InitScheme parse_init(const std::string& s);

struct NetworkSpec {
    std::size_t input_dim = 1;
    std::vector<std::size_t> hidden_widths;
    std::size_t output_dim = 1;
    Activation activation = Activation::relu;
    double leaky_slope = 0.01;
    InitScheme init = InitScheme::he_fan_in_gaussian;
    Parameterization parameterization = Parameterization::standard;
    std::uint64_t seed = 0;

    std::size_t depth() const noexcept { return hidden_widths.size() + 1; }
    /// n_0 = D, n_1..n_{L-1} = hidden widths, n_L = O.
    std::size_t width(std::size_t l) const;
    void validate() const;

    bool operator==(const NetworkSpec&) const = default;
};

/// Location of one layer's weight matrix inside the flattened parameter
/// vector; entry (i, j) of W^(l) sits at offset + i * cols + j.
struct ParamBlock {
    std::size_t offset = 0;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::size_t extent() const noexcept { return rows * cols; }
};

/// Bias-free fully-connected network f(x) = W_L phi(W_{L-1} ... phi(W_1 x)).
/// Immutable once built; parameter edits produce a new Network.
class Network {
public:
    Network(NetworkSpec spec, std::vector<Matrix> weights);

    const NetworkSpec& spec() const noexcept { return spec_; }
    std::size_t depth() const noexcept { return weights_.size(); }
    std::size_t input_dim() const noexcept { return spec_.input_dim; }
    std::size_t output_dim() const noexcept { return spec_.output_dim; }
    std::size_t param_count() const noexcept { return param_count_; }

    /// Layers are 0-based here: layer 0 holds W^(1).
    const Matrix& weight(std::size_t layer) const { return weights_.at(layer); }
    std::span<const Matrix> weights() const noexcept { return weights_; }
    const ParamBlock& param_block(std::size_t layer) const { return blocks_.at(layer); }

    Vector flat_params() const;
    Network with_params(const Vector& theta) const;

    double activate(double z) const;
    double activate_derivative(double z) const;

private:
    NetworkSpec spec_;
    std::vector<Matrix> weights_;
    std::vector<ParamBlock> blocks_;
    std::size_t param_count_ = 0;
};

Network init_network(const NetworkSpec& spec);

struct ForwardTrace {
    /// inputs[l] is the vector fed to layer l (x for l = 0, post-activations after).
    std::vector<Vector> inputs;
    /// pre[l] = W^(l+1) inputs[l].
    std::vector<Vector> pre;
    Vector output;
};

ForwardTrace forward(const Network& net, const Vector& x);

/// Network output for every row of X, as an N x O matrix.
Matrix forward_batch(const Network& net, const Matrix& x);

/// O x P Jacobian of the outputs with respect to the flattened parameters.
Matrix jacobian(const Network& net, const Vector& x);

/// v^T J(x) computed with a single reverse sweep seeded by v.
Vector grad_scalar(const Network& net, const Vector& x, const Vector& readout);

struct TrainConfig {
    std::size_t batch_size = 128;
    double lr = 0.1;
    double momentum = 0.9;
    double weight_decay = 1e-4;
    std::size_t epochs = 1;
    std::uint64_t seed = 0;
    /// Epochs after which a snapshot is stored; 0 means the untrained network.
    std::vector<std::size_t> checkpoints;
};

struct Snapshot {
    std::size_t epoch = 0;
    Network net;
};

struct TrainResult {
    Network net;
    std::vector<Snapshot> snapshots;
    std::vector<double> epoch_loss;
};

inline constexpr const char* kTrainingLoss = "softmax_cross_entropy";

/// Minibatch SGD with momentum and L2 weight decay on softmax cross-entropy.
/// Shuffling is a Fisher-Yates pass keyed by (seed, epoch).
TrainResult sgd_train(const Network& net, const Matrix& inputs, std::span<const std::size_t> labels,
                      const TrainConfig& cfg);

// "NTKW" checkpoint: magic, u32 version, spec fields, then one NTKM payload per layer.
void write_network(std::ostream& out, const Network& net);
Network read_network(std::istream& in);
void save_network(const std::filesystem::path& path, const Network& net);
Network load_network(const std::filesystem::path& path);
std::uint64_t network_hash(const Network& net);

}  // namespace pntk
