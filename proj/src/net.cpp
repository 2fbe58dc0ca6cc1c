#include "pntk/net.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "binio.hpp"
#include "pntk/tangent.hpp"

namespace pntk {

std::string to_string(Activation a) {
    switch (a) {
        case Activation::relu: return "relu";
        case Activation::gelu: return "gelu";
        case Activation::leaky_relu: return "leaky_relu";
    }
    return "?";
}

std::string to_string(InitScheme s) {
    return s == InitScheme::he_fan_in_gaussian ? "gaussian" : "truncated";
}

Activation parse_activation(const std::string& s) {
    if (s == "relu") return Activation::relu;
    if (s == "gelu") return Activation::gelu;
    if (s == "leaky_relu") return Activation::leaky_relu;
    throw Error(ErrorKind::InvalidSpec, "unknown activation '" + s + "'");
}

InitScheme parse_init(const std::string& s) {
    if (s == "gaussian" || s == "he_fan_in_gaussian") return InitScheme::he_fan_in_gaussian;
    if (s == "truncated" || s == "he_fan_in_truncated") return InitScheme::he_fan_in_truncated;
    throw Error(ErrorKind::InvalidSpec, "unknown init scheme '" + s + "'");
}

std::size_t NetworkSpec::width(std::size_t l) const {
    if (l == 0) return input_dim;
    if (l <= hidden_widths.size()) return hidden_widths[l - 1];
    if (l == depth()) return output_dim;
    throw Error(ErrorKind::OutOfRange, "layer index " + std::to_string(l) + " beyond depth");
}

void NetworkSpec::validate() const {
    if (input_dim == 0) throw Error(ErrorKind::InvalidSpec, "input_dim must be >= 1");
    if (output_dim == 0) throw Error(ErrorKind::InvalidSpec, "output_dim must be >= 1");
    for (std::size_t i = 0; i < hidden_widths.size(); ++i) {
        if (hidden_widths[i] == 0) {
            throw Error(ErrorKind::InvalidSpec, "hidden width " + std::to_string(i) + " is zero");
        }
    }
    if (activation == Activation::leaky_relu && !(leaky_slope >= 0.0 && leaky_slope < 1.0)) {
        throw Error(ErrorKind::InvalidSpec, "leaky_relu slope must be in [0, 1)");
    }
}

Network::Network(NetworkSpec spec, std::vector<Matrix> weights)
    : spec_(std::move(spec)), weights_(std::move(weights)) {
    spec_.validate();
    if (weights_.size() != spec_.depth()) {
        throw Error(ErrorKind::ShapeMismatch, "expected " + std::to_string(spec_.depth()) +
                                                  " weight matrices, got " + std::to_string(weights_.size()));
    }
    std::size_t offset = 0;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        const auto rows = spec_.width(l + 1);
        const auto cols = spec_.width(l);
        if (static_cast<std::size_t>(weights_[l].rows()) != rows ||
            static_cast<std::size_t>(weights_[l].cols()) != cols) {
            throw Error(ErrorKind::ShapeMismatch, "layer " + std::to_string(l + 1) + " weight shape mismatch");
        }
        require_finite(weights_[l], "network weight");
        blocks_.push_back({offset, rows, cols});
        offset += rows * cols;
    }
    param_count_ = offset;
}

Vector Network::flat_params() const {
    Vector theta(static_cast<Index>(param_count_));
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        const auto& b = blocks_[l];
        theta.segment(static_cast<Index>(b.offset), static_cast<Index>(b.extent())) =
            Eigen::Map<const Vector>(weights_[l].data(), static_cast<Index>(b.extent()));
    }
    return theta;
}

Network Network::with_params(const Vector& theta) const {
    if (static_cast<std::size_t>(theta.size()) != param_count_) {
        throw Error(ErrorKind::ShapeMismatch, "parameter vector length mismatch");
    }
    std::vector<Matrix> w = weights_;
    for (std::size_t l = 0; l < w.size(); ++l) {
        const auto& b = blocks_[l];
        Eigen::Map<Vector>(w[l].data(), static_cast<Index>(b.extent())) =
            theta.segment(static_cast<Index>(b.offset), static_cast<Index>(b.extent()));
    }
    return Network(spec_, std::move(w));
}

double Network::activate(double z) const {
    switch (spec_.activation) {
        case Activation::relu: return z > 0.0 ? z : 0.0;
        case Activation::leaky_relu: return z > 0.0 ? z : spec_.leaky_slope * z;
        case Activation::gelu: return 0.5 * z * std::erfc(-z / std::numbers::sqrt2);
    }
    return z;
}

double Network::activate_derivative(double z) const {
    switch (spec_.activation) {
        case Activation::relu: return z > 0.0 ? 1.0 : 0.0;
        case Activation::leaky_relu: return z > 0.0 ? 1.0 : spec_.leaky_slope;
        case Activation::gelu: {
            // exact: Phi(z) + z * pdf(z)
            const double cdf = 0.5 * std::erfc(-z / std::numbers::sqrt2);
            const double pdf = std::exp(-0.5 * z * z) * std::numbers::inv_sqrtpi / std::numbers::sqrt2;
            return cdf + z * pdf;
        }
    }
    return 1.0;
}

Network init_network(const NetworkSpec& spec) {
    spec.validate();
    if (spec.parameterization == Parameterization::ntk) {
        throw Error(ErrorKind::Unsupported, "NTK (fan-out) parameterization is reserved but not implemented");
    }
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<Matrix> weights;
    weights.reserve(spec.depth());
    for (std::size_t l = 1; l <= spec.depth(); ++l) {
        const auto fan_in = spec.width(l - 1);
        const double sigma = 1.0 / std::sqrt(static_cast<double>(fan_in));
        Matrix w(static_cast<Index>(spec.width(l)), static_cast<Index>(fan_in));
        for (Index i = 0; i < w.size(); ++i) {
            double z = normal(rng);
            if (spec.init == InitScheme::he_fan_in_truncated) {
                while (std::abs(z) > 2.0) z = normal(rng);
            }
            w.data()[i] = sigma * z;
        }
        weights.push_back(std::move(w));
    }
    return Network(spec, std::move(weights));
}

ForwardTrace forward(const Network& net, const Vector& x) {
    if (static_cast<std::size_t>(x.size()) != net.input_dim()) {
        throw Error(ErrorKind::ShapeMismatch, "input has length " + std::to_string(x.size()) +
                                                  ", network expects " + std::to_string(net.input_dim()));
    }
    if (!x.allFinite()) throw Error(ErrorKind::InvalidMatrix, "input has non-finite entries");
    ForwardTrace t;
    const auto depth = net.depth();
    t.inputs.reserve(depth);
    t.pre.reserve(depth);
    Vector h = x;
    for (std::size_t l = 0; l < depth; ++l) {
        t.inputs.push_back(h);
        Vector z = net.weight(l) * h;
        if (l + 1 < depth) {
            h = z.unaryExpr([&](double v) { return net.activate(v); });
        }
        t.pre.push_back(std::move(z));
    }
    t.output = t.pre.back();
    return t;
}

Matrix forward_batch(const Network& net, const Matrix& x) {
    if (static_cast<std::size_t>(x.cols()) != net.input_dim()) {
        throw Error(ErrorKind::ShapeMismatch, "batch has " + std::to_string(x.cols()) +
                                                  " columns, network expects " + std::to_string(net.input_dim()));
    }
    Matrix h = x;
    for (std::size_t l = 0; l < net.depth(); ++l) {
        Matrix z = h * net.weight(l).transpose();
        if (l + 1 < net.depth()) {
            h = z.unaryExpr([&](double v) { return net.activate(v); });
        } else {
            h = std::move(z);
        }
    }
    return h;
}

TangentFactors tangent_factors_below(const Network& net, const ForwardTrace& trace, std::size_t top_layer,
                                     Matrix delta_top) {
    const auto depth = net.depth();
    if (top_layer >= depth) throw Error(ErrorKind::OutOfRange, "top layer beyond network depth");
    if (delta_top.cols() != trace.pre[top_layer].size()) {
        throw Error(ErrorKind::ShapeMismatch, "seed signal does not match the layer width");
    }
    TangentFactors f;
    f.delta.resize(depth);
    for (std::size_t l = top_layer + 1; l < depth; ++l) f.delta[l] = Matrix(delta_top.rows(), 0);
    f.input = trace.inputs;
    Matrix delta = std::move(delta_top);
    for (std::size_t l = top_layer + 1; l-- > 0;) {
        if (l < top_layer) {
            const Vector d = trace.pre[l].unaryExpr([&](double v) { return net.activate_derivative(v); });
            delta = delta.array().rowwise() * d.transpose().array();
        }
        if (l > 0) {
            Matrix below = delta * net.weight(l);
            f.delta[l] = std::move(delta);
            delta = std::move(below);
        } else {
            f.delta[l] = std::move(delta);
        }
    }
    return f;
}

TangentFactors tangent_factors(const Network& net, const ForwardTrace& trace, const Matrix& seeds) {
    if (static_cast<std::size_t>(seeds.cols()) != net.output_dim()) {
        throw Error(ErrorKind::ShapeMismatch, "readout vectors must have length O");
    }
    return tangent_factors_below(net, trace, net.depth() - 1, seeds);
}

void materialize(const Network& net, const TangentFactors& f, std::size_t begin, std::size_t end,
                 Eigen::Ref<Matrix> out) {
    const Index k = f.readouts();
    for (std::size_t l = 0; l < net.depth(); ++l) {
        const auto& b = net.param_block(l);
        const std::size_t lo = std::max(begin, b.offset);
        const std::size_t hi = std::min(end, b.offset + b.extent());
        if (lo >= hi) continue;
        const Matrix& delta = f.delta[l];
        const Vector& in = f.input[l];
        const std::size_t first_row = (lo - b.offset) / b.cols;
        const std::size_t last_row = (hi - 1 - b.offset) / b.cols;
        for (std::size_t i = first_row; i <= last_row; ++i) {
            const std::size_t row_start = b.offset + i * b.cols;
            const std::size_t j0 = std::max(lo, row_start) - row_start;
            const std::size_t j1 = std::min(hi, row_start + b.cols) - row_start;
            const Index len = static_cast<Index>(j1 - j0);
            const Index col = static_cast<Index>(row_start + j0 - begin);
            const auto seg = in.segment(static_cast<Index>(j0), len).transpose();
            for (Index r = 0; r < k; ++r) {
                out.row(r).segment(col, len) = delta(r, static_cast<Index>(i)) * seg;
            }
        }
    }
}

Matrix jacobian(const Network& net, const Vector& x) {
    const auto trace = forward(net, x);
    const Index o = static_cast<Index>(net.output_dim());
    const auto f = tangent_factors(net, trace, Matrix::Identity(o, o));
    Matrix j(o, static_cast<Index>(net.param_count()));
    materialize(net, f, 0, net.param_count(), j);
    return j;
}

Vector grad_scalar(const Network& net, const Vector& x, const Vector& readout) {
    if (static_cast<std::size_t>(readout.size()) != net.output_dim()) {
        throw Error(ErrorKind::ShapeMismatch, "readout has length " + std::to_string(readout.size()) +
                                                  ", network has " + std::to_string(net.output_dim()) + " outputs");
    }
    const auto trace = forward(net, x);
    const auto f = tangent_factors(net, trace, readout.transpose());
    Matrix g(1, static_cast<Index>(net.param_count()));
    materialize(net, f, 0, net.param_count(), g);
    return g.row(0).transpose();
}

namespace {

std::vector<std::size_t> epoch_permutation(std::size_t n, std::uint64_t seed, std::size_t epoch) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(epoch), static_cast<std::uint32_t>(epoch >> 32)};
    std::mt19937_64 rng(seq);
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    for (std::size_t i = n; i > 1; --i) {
        std::uniform_int_distribution<std::size_t> pick(0, i - 1);
        std::swap(perm[i - 1], perm[pick(rng)]);
    }
    return perm;
}

}  // namespace

TrainResult sgd_train(const Network& net, const Matrix& inputs, std::span<const std::size_t> labels,
                      const TrainConfig& cfg) {
    if (!(cfg.lr >= 0.0)) throw Error(ErrorKind::InvalidArgument, "learning rate must be >= 0");
    if (cfg.batch_size == 0) throw Error(ErrorKind::InvalidArgument, "batch size must be >= 1");
    if (static_cast<std::size_t>(inputs.rows()) != labels.size()) {
        throw Error(ErrorKind::ShapeMismatch, "inputs and labels disagree on sample count");
    }
    if (static_cast<std::size_t>(inputs.cols()) != net.input_dim()) {
        throw Error(ErrorKind::ShapeMismatch, "training inputs have the wrong dimension");
    }
    const auto o = net.output_dim();
    for (auto y : labels) {
        if (y >= o) throw Error(ErrorKind::OutOfRange, "label " + std::to_string(y) + " >= O");
    }

    const auto depth = net.depth();
    std::vector<Matrix> w(net.weights().begin(), net.weights().end());
    std::vector<Matrix> velocity;
    for (const auto& m : w) velocity.push_back(Matrix::Zero(m.rows(), m.cols()));

    TrainResult result{net, {}, {}};
    const auto wants = [&](std::size_t e) {
        return std::find(cfg.checkpoints.begin(), cfg.checkpoints.end(), e) != cfg.checkpoints.end();
    };
    if (wants(0)) result.snapshots.push_back({0, net});

    const auto n = labels.size();
    const auto act = [&](double v) { return net.activate(v); };
    const auto dact = [&](double v) { return net.activate_derivative(v); };
    std::vector<Matrix> h(depth), z(depth);

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const auto perm = epoch_permutation(n, cfg.seed, epoch);
        double loss_sum = 0.0;
        for (std::size_t start = 0; start < n; start += cfg.batch_size) {
            const auto b = std::min(cfg.batch_size, n - start);
            Matrix xb(static_cast<Index>(b), inputs.cols());
            for (std::size_t r = 0; r < b; ++r) xb.row(static_cast<Index>(r)) = inputs.row(static_cast<Index>(perm[start + r]));

            h[0] = std::move(xb);
            for (std::size_t l = 0; l < depth; ++l) {
                z[l] = h[l] * w[l].transpose();
                if (l + 1 < depth) h[l + 1] = z[l].unaryExpr(act);
            }
            Matrix grad_out = z[depth - 1];
            for (Index r = 0; r < grad_out.rows(); ++r) {
                auto row = grad_out.row(r);
                const double mx = row.maxCoeff();
                row = (row.array() - mx).exp().matrix();
                const double s = row.sum();
                row /= s;
                const auto y = static_cast<Index>(labels[perm[start + static_cast<std::size_t>(r)]]);
                loss_sum -= std::log(std::max(row(y), 1e-300));
                row(y) -= 1.0;
            }
            grad_out /= static_cast<double>(b);

            Matrix dz = std::move(grad_out);
            for (std::size_t l = depth; l-- > 0;) {
                Matrix g = dz.transpose() * h[l];
                if (l > 0) {
                    Matrix dh = dz * w[l];
                    dz = dh.cwiseProduct(z[l - 1].unaryExpr(dact));
                }
                g += cfg.weight_decay * w[l];
                velocity[l] = cfg.momentum * velocity[l] + g;
                w[l] -= cfg.lr * velocity[l];
            }
        }
        const double loss = loss_sum / static_cast<double>(std::max<std::size_t>(n, 1));
        if (!std::isfinite(loss) || std::any_of(w.begin(), w.end(), [](const Matrix& m) { return !m.allFinite(); })) {
            throw DivergedError("training loss became non-finite; retry with a smaller learning rate", epoch);
        }
        result.epoch_loss.push_back(loss);
        if (wants(epoch)) result.snapshots.push_back({epoch, Network(net.spec(), w)});
    }
    result.net = Network(net.spec(), std::move(w));
    return result;
}

void write_network(std::ostream& out, const Network& net) {
    const auto& s = net.spec();
    binio::put_magic(out, "NTKW");
    binio::put<std::uint32_t>(out, 1);
    binio::put<std::uint64_t>(out, s.input_dim);
    binio::put<std::uint32_t>(out, static_cast<std::uint32_t>(s.hidden_widths.size()));
    for (auto wdt : s.hidden_widths) binio::put<std::uint64_t>(out, wdt);
    binio::put<std::uint64_t>(out, s.output_dim);
    binio::put<std::uint8_t>(out, static_cast<std::uint8_t>(s.activation));
    binio::put<double>(out, s.leaky_slope);
    binio::put<std::uint8_t>(out, static_cast<std::uint8_t>(s.init));
    binio::put<std::uint8_t>(out, static_cast<std::uint8_t>(s.parameterization));
    binio::put<std::uint64_t>(out, s.seed);
    for (const auto& w : net.weights()) write_matrix(out, w);
    if (!out) throw Error(ErrorKind::IoError, "failed writing NTKW checkpoint");
}

Network read_network(std::istream& in) {
    binio::expect_magic(in, "NTKW");
    const auto version = binio::get<std::uint32_t>(in, "NTKW version");
    if (version != 1) throw Error(ErrorKind::FormatError, "unsupported NTKW version " + std::to_string(version));
    NetworkSpec s;
    s.input_dim = binio::get<std::uint64_t>(in, "input_dim");
    const auto hidden = binio::get<std::uint32_t>(in, "hidden count");
    for (std::uint32_t i = 0; i < hidden; ++i) s.hidden_widths.push_back(binio::get<std::uint64_t>(in, "width"));
    s.output_dim = binio::get<std::uint64_t>(in, "output_dim");
    const auto act = binio::get<std::uint8_t>(in, "activation");
    if (act > 2) throw Error(ErrorKind::FormatError, "bad activation tag");
    s.activation = static_cast<Activation>(act);
    s.leaky_slope = binio::get<double>(in, "leaky slope");
    const auto init = binio::get<std::uint8_t>(in, "init");
    const auto param = binio::get<std::uint8_t>(in, "parameterization");
    if (init > 1 || param > 1) throw Error(ErrorKind::FormatError, "bad init/parameterization tag");
    s.init = static_cast<InitScheme>(init);
    s.parameterization = static_cast<Parameterization>(param);
    s.seed = binio::get<std::uint64_t>(in, "seed");
    std::vector<Matrix> weights;
    for (std::size_t l = 0; l < s.depth(); ++l) weights.push_back(read_matrix(in));
    return Network(std::move(s), std::move(weights));
}

void save_network(const std::filesystem::path& path, const Network& net) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::IoError, "cannot open " + path.string() + " for writing");
    write_network(out, net);
}

Network load_network(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
    return read_network(in);
}

std::uint64_t network_hash(const Network& net) {
    std::ostringstream buf(std::ios::binary);
    write_network(buf, net);
    return binio::fnv1a(buf.str());
}

}  // namespace pntk
