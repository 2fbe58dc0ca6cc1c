#include "pntk/ntk.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "pntk/tangent.hpp"

namespace pntk {

std::string to_string(KernelKind k) { return k == KernelKind::entk ? "entk" : "pntk"; }

std::string PntkMode::to_string() const {
    return kind == Kind::sum_of_logits ? "sum_of_logits" : "single_logit:" + std::to_string(logit);
}

PntkMode PntkMode::parse(const std::string& s) {
    if (s == "sum" || s == "sum_of_logits") return sum();
    for (const std::string prefix : {"single_logit:", "single:"}) {
        if (s.rfind(prefix, 0) == 0) {
            try {
                return single(std::stoul(s.substr(prefix.size())));
            } catch (const std::exception&) {
                break;
            }
        }
    }
    throw Error(ErrorKind::InvalidArgument, "unknown pNTK mode '" + s + "'");
}

Vector readout_vector(const PntkMode& mode, std::size_t output_dim) {
    const auto o = static_cast<Index>(output_dim);
    if (mode.kind == PntkMode::Kind::sum_of_logits) {
        return Vector::Constant(o, 1.0 / std::sqrt(static_cast<double>(output_dim)));
    }
    if (mode.logit >= output_dim) {
        throw Error(ErrorKind::OutOfRange, "logit " + std::to_string(mode.logit) + " out of range for O = " +
                                               std::to_string(output_dim));
    }
    Vector v = Vector::Zero(o);
    v(static_cast<Index>(mode.logit)) = 1.0;
    return v;
}

Matrix entk_block(const Network& net, const Vector& x1, const Vector& x2) {
    const Matrix j1 = jacobian(net, x1);
    const Matrix j2 = jacobian(net, x2);
    return j1 * j2.transpose();
}

std::uint64_t kernel_result_bytes(Index n1, Index n2, Index readouts) {
    return static_cast<std::uint64_t>(n1 * readouts) * static_cast<std::uint64_t>(n2 * readouts) * sizeof(double);
}

namespace {

std::uint64_t factor_bytes(const Network& net, Index points, Index readouts) {
    std::uint64_t per_point = 0;
    for (std::size_t l = 0; l < net.depth(); ++l) {
        per_point += static_cast<std::uint64_t>(readouts) * net.spec().width(l + 1) + net.spec().width(l);
    }
    return per_point * static_cast<std::uint64_t>(points) * sizeof(double);
}

void check_inputs(const Network& net, const Matrix& x, const char* name) {
    if (x.rows() < 1) throw Error(ErrorKind::ShapeMismatch, std::string(name) + " must hold at least one point");
    if (static_cast<std::size_t>(x.cols()) != net.input_dim()) {
        throw Error(ErrorKind::ShapeMismatch, std::string(name) + " has " + std::to_string(x.cols()) +
                                                  " columns, network expects " + std::to_string(net.input_dim()));
    }
}

bool same_points(const Matrix& a, const Matrix& b) {
    return &a == &b || (a.rows() == b.rows() && a.cols() == b.cols() && a == b);
}

// Shared assembly path: seeds are I_O for the eNTK and a single readout row
// for the pNTK, so both kernels run through identical machinery.
Matrix assemble(const Network& net, const Matrix& seeds, const Matrix& x1, const Matrix& x2,
                const KernelOptions& opts) {
    check_inputs(net, x1, "X1");
    check_inputs(net, x2, "X2");
    const Index k = seeds.rows();
    const bool symmetric = same_points(x1, x2);
    const std::uint64_t need = kernel_result_bytes(x1.rows(), x2.rows(), k) + opts.panel_bytes +
                               factor_bytes(net, x1.rows() + (symmetric ? 0 : x2.rows()), k);
    if (need > opts.memory_cap) {
        throw MemoryCapError("kernel of shape " + std::to_string(x1.rows() * k) + "x" +
                                 std::to_string(x2.rows() * k) + " exceeds the memory cap",
                             need, opts.memory_cap);
    }
    Matrix out;
    if (symmetric) {
        const TangentSet set(net, seeds, x1);
        const KernelRequest req{&set, &set, BlockShape::symmetric, &out};
        accumulate_kernels(net, {&req, 1}, opts.panel_bytes);
    } else {
        const TangentSet a(net, seeds, x1);
        const TangentSet b(net, seeds, x2);
        const KernelRequest req{&a, &b, BlockShape::full, &out};
        accumulate_kernels(net, {&req, 1}, opts.panel_bytes);
    }
    return out;
}

TrainTestKernels assemble_train_test(const Network& net, const Matrix& seeds, const Matrix& train,
                                     const Matrix& test, const KernelOptions& opts) {
    check_inputs(net, train, "training inputs");
    check_inputs(net, test, "test inputs");
    const Index k = seeds.rows();
    const std::uint64_t need = kernel_result_bytes(train.rows(), train.rows(), k) +
                               kernel_result_bytes(test.rows(), train.rows(), k) + opts.panel_bytes +
                               factor_bytes(net, train.rows() + test.rows(), k);
    if (need > opts.memory_cap) {
        throw MemoryCapError("train/test kernels for " + std::to_string(train.rows()) + "+" +
                                 std::to_string(test.rows()) + " points exceed the memory cap",
                             need, opts.memory_cap);
    }
    TrainTestKernels out;
    const TangentSet a(net, seeds, train);
    const TangentSet b(net, seeds, test);
    const KernelRequest reqs[] = {{&a, &a, BlockShape::symmetric, &out.train}, {&b, &a, BlockShape::full, &out.cross}};
    accumulate_kernels(net, reqs, opts.panel_bytes);
    return out;
}

}  // namespace

TrainTestKernels entk_train_test(const Network& net, const Matrix& train, const Matrix& test,
                                 const KernelOptions& opts) {
    const Index o = static_cast<Index>(net.output_dim());
    return assemble_train_test(net, Matrix::Identity(o, o), train, test, opts);
}

TrainTestKernels pntk_train_test(const Network& net, const Matrix& train, const Matrix& test, const PntkMode& mode,
                                 const KernelOptions& opts) {
    const Matrix seeds = readout_vector(mode, net.output_dim()).transpose();
    return assemble_train_test(net, seeds, train, test, opts);
}

EntkBlockMatrix entk_matrix(const Network& net, const Matrix& x1, const Matrix& x2, const KernelOptions& opts) {
    const Index o = static_cast<Index>(net.output_dim());
    return {x1.rows(), x2.rows(), o, assemble(net, Matrix::Identity(o, o), x1, x2, opts)};
}

double pntk(const Network& net, const Vector& x1, const Vector& x2, const PntkMode& mode) {
    const Vector v = readout_vector(mode, net.output_dim());
    return grad_scalar(net, x1, v).dot(grad_scalar(net, x2, v));
}

PntkMatrix pntk_matrix(const Network& net, const Matrix& x1, const Matrix& x2, const PntkMode& mode,
                       const KernelOptions& opts) {
    const Matrix seeds = readout_vector(mode, net.output_dim()).transpose();
    return {x1.rows(), x2.rows(), mode, assemble(net, seeds, x1, x2, opts)};
}

Matrix readout_decomposition(const Network& net, const Vector& x1, const Vector& x2) {
    const auto depth = net.depth();
    if (depth < 2) {
        throw Error(ErrorKind::Unsupported, "readout decomposition needs a penultimate layer (depth >= 2)");
    }
    const std::size_t body_layer = depth - 2;
    const std::size_t body_params = net.param_block(depth - 1).offset;

    const auto body_jacobian = [&](const Vector& x, Vector& g) {
        const auto trace = forward(net, x);
        g = trace.inputs[depth - 1];
        const Vector d = trace.pre[body_layer].unaryExpr([&](double v) { return net.activate_derivative(v); });
        const auto f = tangent_factors_below(net, trace, body_layer, Matrix(d.asDiagonal()));
        Matrix j(g.size(), static_cast<Index>(body_params));
        materialize(net, f, 0, body_params, j);
        return j;
    };
    Vector g1, g2;
    const Matrix jg1 = body_jacobian(x1, g1);
    const Matrix jg2 = body_jacobian(x2, g2);
    const Matrix theta_g = jg1 * jg2.transpose();
    const Matrix& readout = net.weight(depth - 1);
    const Index o = readout.rows();
    return readout * theta_g * readout.transpose() + g1.dot(g2) * Matrix::Identity(o, o);
}

std::vector<Matrix> recursive_entk(const Network& net, const Vector& x1, const Vector& x2) {
    const auto t1 = forward(net, x1);
    const auto t2 = forward(net, x2);
    const auto depth = net.depth();
    const auto slope = [&](const ForwardTrace& t, std::size_t l) -> Vector {
        if (l + 1 == depth) return Vector::Ones(t.pre[l].size());
        return t.pre[l].unaryExpr([&](double v) { return net.activate_derivative(v); });
    };

    std::vector<Matrix> layers;
    layers.reserve(depth);
    for (std::size_t l = 0; l < depth; ++l) {
        const Vector d1 = slope(t1, l);
        const Vector d2 = slope(t2, l);
        // K_D: the contribution of this layer's own weights.
        Matrix theta = (d1.cwiseProduct(d2) * t1.inputs[l].dot(t2.inputs[l])).asDiagonal();
        if (l > 0) {
            const Matrix v1 = d1.asDiagonal() * net.weight(l);
            const Matrix v2 = d2.asDiagonal() * net.weight(l);
            theta += v1 * layers.back() * v2.transpose();
        }
        layers.push_back(std::move(theta));
    }
    return layers;
}

ResourceEstimate resource_estimate(std::uint64_t n, std::uint64_t o, std::uint64_t element_bytes,
                                   KernelKind kind) {
    if (n == 0 || o == 0 || element_bytes == 0) {
        throw Error(ErrorKind::InvalidArgument, "resource estimate needs positive counts");
    }
    ResourceEstimate r;
    r.kind = kind;
    const auto mul = [&r](std::uint64_t a, std::uint64_t b) {
        std::uint64_t out = 0;
        if (__builtin_mul_overflow(a, b, &out)) {
            r.saturated = true;
            return UINT64_MAX;
        }
        return out;
    };
    const std::uint64_t side = kind == KernelKind::entk ? mul(n, o) : n;
    r.jvp_count = mul(side, side);
    r.kernel_bytes = mul(r.jvp_count, element_bytes);
    return r;
}

void save_kernel(const std::filesystem::path& stem, const Matrix& kernel, const KernelSidecar& meta) {
    auto bin = stem;
    bin += ".ntkm";
    auto json_path = stem;
    json_path += ".json";
    save_matrix(bin, kernel);
    nlohmann::ordered_json j;
    j["kind"] = to_string(meta.kind);
    j["mode"] = meta.mode ? nlohmann::ordered_json(meta.mode->to_string()) : nlohmann::ordered_json(nullptr);
    j["N1"] = meta.n1;
    j["N2"] = meta.n2;
    j["O"] = meta.o;
    j["net_checkpoint_hash"] = meta.net_checkpoint_hash;
    j["epoch"] = meta.epoch;
    std::ofstream out(json_path);
    if (!out) throw Error(ErrorKind::IoError, "cannot write " + json_path.string());
    out << j.dump(2) << "\n";
}

KernelSidecar load_kernel_sidecar(const std::filesystem::path& json_path) {
    std::ifstream in(json_path);
    if (!in) throw Error(ErrorKind::IoError, "cannot open " + json_path.string());
    try {
        const auto j = nlohmann::json::parse(in);
        KernelSidecar m;
        m.kind = j.at("kind").get<std::string>() == "entk" ? KernelKind::entk : KernelKind::pntk;
        if (!j.at("mode").is_null()) m.mode = PntkMode::parse(j.at("mode").get<std::string>());
        m.n1 = j.at("N1").get<Index>();
        m.n2 = j.at("N2").get<Index>();
        m.o = j.at("O").get<Index>();
        m.net_checkpoint_hash = j.at("net_checkpoint_hash").get<std::uint64_t>();
        m.epoch = j.at("epoch").get<std::size_t>();
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::FormatError, std::string("kernel sidecar: ") + e.what());
    }
}

}  // namespace pntk
