#include "pntk/regress.hpp"

#include <cmath>

namespace pntk {

void RegressionProblem::validate() const {
    if (train_inputs.rows() < 1 || test_inputs.rows() < 1) {
        throw Error(ErrorKind::ShapeMismatch, "regression needs at least one training and one test point");
    }
    if (train_targets.rows() != train_inputs.rows()) {
        throw Error(ErrorKind::ShapeMismatch, "training targets and inputs disagree on N");
    }
    if (train_inputs.cols() != test_inputs.cols()) {
        throw Error(ErrorKind::ShapeMismatch, "training and test inputs disagree on D");
    }
    for (Index i = 0; i < train_targets.rows(); ++i) {
        const auto row = train_targets.row(i);
        const bool binary = ((row.array() == 0.0) || (row.array() == 1.0)).all();
        if (!binary || row.sum() != 1.0) {
            throw Error(ErrorKind::InvalidArgument, "training target row " + std::to_string(i) + " is not one-hot");
        }
    }
    if (!(std::isfinite(relative_jitter) && relative_jitter >= 0.0)) {
        throw Error(ErrorKind::InvalidArgument, "jitter must be finite and >= 0");
    }
}

double absolute_jitter(const SymmetricMatrix& k, double relative) {
    return relative * k.trace() / static_cast<double>(k.dim());
}

std::vector<std::size_t> argmax_rows(const Matrix& m) {
    std::vector<std::size_t> out(static_cast<std::size_t>(m.rows()));
    for (Index i = 0; i < m.rows(); ++i) {
        Index best = 0;
        for (Index j = 1; j < m.cols(); ++j) {
            if (m(i, j) > m(i, best)) best = j;
        }
        out[static_cast<std::size_t>(i)] = static_cast<std::size_t>(best);
    }
    return out;
}

KernelFit regress_block(const SymmetricMatrix& train, const Matrix& cross, const Matrix& residual,
                        double jitter) {
    const Index n = residual.rows();
    const Index o = residual.cols();
    if (train.dim() != n * o || cross.cols() != n * o || cross.rows() % o != 0) {
        throw Error(ErrorKind::ShapeMismatch, "block kernel shapes do not match an N x O residual");
    }
    const Matrix rhs = Eigen::Map<const Matrix>(residual.data(), n * o, 1);
    const auto sol = solve_psd(train, rhs, jitter);
    const Matrix flat = cross * sol.x;
    return {Eigen::Map<const Matrix>(flat.data(), cross.rows() / o, o), sol.jitter, sol.escalated};
}

KernelFit regress_scalar(const SymmetricMatrix& train, const Matrix& cross, const Matrix& residual,
                         double jitter) {
    if (train.dim() != residual.rows() || cross.cols() != residual.rows()) {
        throw Error(ErrorKind::ShapeMismatch, "scalar kernel shapes do not match the residual");
    }
    const auto sol = solve_psd(train, residual, jitter);
    return {cross * sol.x, sol.jitter, sol.escalated};
}

KernelFit regress_lifted(const SymmetricMatrix& train, const Matrix& cross, const Matrix& residual,
                         double jitter) {
    const Index o = residual.cols();
    const SymmetricMatrix lifted(kron_identity(train.matrix(), o));
    return regress_block(lifted, kron_identity(cross, o), residual, jitter);
}

namespace {

RegressionOutput finish(const Network& net, const RegressionProblem& prob, KernelFit fit, KernelKind kind,
                        std::optional<PntkMode> mode) {
    RegressionOutput out;
    out.predictions = std::move(fit.predictions);
    if (prob.center_with_f0) out.predictions += forward_batch(net, prob.test_inputs);
    out.labels = argmax_rows(out.predictions);
    out.kernel_kind = kind;
    out.mode = mode;
    out.jitter_used = fit.jitter;
    out.jitter_escalated = fit.escalated;
    out.centered = prob.center_with_f0;
    return out;
}

Matrix residual_of(const Network& net, const RegressionProblem& prob) {
    if (static_cast<std::size_t>(prob.train_targets.cols()) != net.output_dim()) {
        throw Error(ErrorKind::ShapeMismatch, "training targets have " + std::to_string(prob.train_targets.cols()) +
                                                  " columns, network has O = " + std::to_string(net.output_dim()));
    }
    if (!prob.center_with_f0) return prob.train_targets;
    return prob.train_targets - forward_batch(net, prob.train_inputs);
}

}  // namespace

RegressionOutput predict_entk(const Network& net, const RegressionProblem& prob, const KernelOptions& opts) {
    prob.validate();
    const Matrix residual = residual_of(net, prob);
    auto k = entk_train_test(net, prob.train_inputs, prob.test_inputs, opts);
    const SymmetricMatrix train(std::move(k.train));
    auto fit = regress_block(train, k.cross, residual, absolute_jitter(train, prob.relative_jitter));
    return finish(net, prob, std::move(fit), KernelKind::entk, std::nullopt);
}

RegressionOutput predict_pntk(const Network& net, const RegressionProblem& prob, const PntkMode& mode,
                              const KernelOptions& opts) {
    prob.validate();
    const Matrix residual = residual_of(net, prob);
    auto k = pntk_train_test(net, prob.train_inputs, prob.test_inputs, mode, opts);
    const SymmetricMatrix train(std::move(k.train));
    auto fit = regress_scalar(train, k.cross, residual, absolute_jitter(train, prob.relative_jitter));
    return finish(net, prob, std::move(fit), KernelKind::pntk, mode);
}

double prediction_diff(const RegressionOutput& a, const RegressionOutput& b, bool normalize) {
    if (a.predictions.rows() != b.predictions.rows() || a.predictions.cols() != b.predictions.cols()) {
        throw Error(ErrorKind::ShapeMismatch, "prediction matrices differ in shape");
    }
    const double diff = (a.predictions - b.predictions).norm();
    if (!normalize) return diff;
    const double base = b.predictions.norm();
    if (base == 0.0) throw Error(ErrorKind::DegenerateKernel, "reference predictions have zero norm");
    return diff / base;
}

double accuracy(const RegressionOutput& out, std::span<const std::size_t> true_labels) {
    if (true_labels.size() != out.labels.size()) {
        throw Error(ErrorKind::CountMismatch, "label count differs from prediction count");
    }
    if (true_labels.empty()) return 0.0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < true_labels.size(); ++i) hits += out.labels[i] == true_labels[i];
    return static_cast<double>(hits) / static_cast<double>(true_labels.size());
}

}  // namespace pntk
