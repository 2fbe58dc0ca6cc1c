#pragma once

// Kernel regression with the eNTK (block Gram, N*O unknowns per column) and
// the pNTK (scalar Gram shared by all O output columns).
//
// Layout: one row per point. With the eNTK the N x O residual matrix is read
// point-major, which is exactly the row-major storage of Matrix, so vec(R)
// matches the (point, output) -> p * O + r ordering of the block Gram.

#include <optional>
#include <span>
#include <vector>

#include "pntk/linalg.hpp"
#include "pntk/net.hpp"
#include "pntk/ntk.hpp"

namespace pntk {

struct RegressionProblem {
    Matrix train_inputs;   // N x D
    Matrix train_targets;  // N x O, one-hot rows
    Matrix test_inputs;    // M x D
    bool center_with_f0 = true;
    /// Jitter added to the training Gram, in units of trace(K) / dim(K) so
    /// that each kernel is regularized in proportion to its own scale.
    double relative_jitter = 1e-8;

    void validate() const;
};

struct RegressionOutput {
    Matrix predictions;               // M x O
    std::vector<std::size_t> labels;  // argmax per row, lowest index on ties
    KernelKind kernel_kind = KernelKind::pntk;
    std::optional<PntkMode> mode;
    double jitter_used = 0.0;  // absolute, after any escalation
    bool jitter_escalated = false;
    bool centered = true;
};

/// relative * trace(K) / dim(K)
double absolute_jitter(const SymmetricMatrix& k, double relative);

std::vector<std::size_t> argmax_rows(const Matrix& m);

/// Solution of a regression against a precomputed kernel; `predictions`
/// excludes any f0 offset. Kernel-level entry points take an absolute jitter.
struct KernelFit {
    Matrix predictions;
    double jitter = 0.0;
    bool escalated = false;
};

/// eNTK form: `train` is N*O square, `cross` is M*O x N*O, `residual` N x O.
KernelFit regress_block(const SymmetricMatrix& train, const Matrix& cross, const Matrix& residual,
                        double jitter);

/// pNTK form: `train` is N x N, `cross` M x N; all O columns share one
/// factorization.
KernelFit regress_scalar(const SymmetricMatrix& train, const Matrix& cross, const Matrix& residual,
                         double jitter);

/// The scalar kernel lifted to K ⊗ I_O and solved through the block route.
KernelFit regress_lifted(const SymmetricMatrix& train, const Matrix& cross, const Matrix& residual,
                         double jitter);

RegressionOutput predict_entk(const Network& net, const RegressionProblem& prob, const KernelOptions& opts = {});
RegressionOutput predict_pntk(const Network& net, const RegressionProblem& prob, const PntkMode& mode = {},
                              const KernelOptions& opts = {});

/// ||A - B||_F, divided by ||B||_F when `normalize` is set.
double prediction_diff(const RegressionOutput& a, const RegressionOutput& b, bool normalize);

double accuracy(const RegressionOutput& out, std::span<const std::size_t> true_labels);

}  // namespace pntk
