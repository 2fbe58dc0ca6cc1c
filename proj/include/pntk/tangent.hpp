#pragma once

// Reverse-mode building blocks shared by the Jacobian, the gradient of a
// scalar readout, and the kernel assemblers.
//
// For a dense bias-free layer the Jacobian row of readout r restricted to
// W^(l) is the outer product delta_l[r] ⊗ input_l, where delta_l is the
// backpropagated signal at the layer's pre-activation. A reverse sweep
// produces those factors; materialize() expands them into explicit Jacobian
// columns one parameter range at a time so that Gram matrices can be formed
// by plain dot products without holding every Jacobian in memory.

#include <cstdint>
#include <span>
#include <vector>

#include "pntk/linalg.hpp"
#include "pntk/net.hpp"

namespace pntk {

struct TangentFactors {
    std::vector<Matrix> delta;  // per layer: readouts x n_l
    std::vector<Vector> input;  // per layer: n_{l-1}

    Index readouts() const { return delta.empty() ? 0 : delta.front().rows(); }
};

/// One reverse sweep per row of `seeds` (k x O); row r of seeds is the
/// readout vector whose gradient is requested.
TangentFactors tangent_factors(const Network& net, const ForwardTrace& trace, const Matrix& seeds);

/// Reverse sweep that starts below the readout: `delta_top` is the gradient
/// of some k-dimensional quantity with respect to the pre-activation of
/// `top_layer`. Layers above top_layer get empty deltas, so only parameters of
/// layers 0..top_layer may be materialized from the result.
TangentFactors tangent_factors_below(const Network& net, const ForwardTrace& trace, std::size_t top_layer,
                                     Matrix delta_top);

/// Writes the Jacobian rows of `f` restricted to parameters [begin, end) into
/// `out`, which must be readouts x (end - begin).
void materialize(const Network& net, const TangentFactors& f, std::size_t begin, std::size_t end,
                 Eigen::Ref<Matrix> out);

/// Factors for a set of points under one seed matrix; rows of the stacked
/// Jacobian are ordered point-major (point p, readout r) -> p * k + r.
class TangentSet {
public:
    TangentSet(const Network& net, const Matrix& seeds, const Matrix& points);

    Index points() const noexcept { return static_cast<Index>(factors_.size()); }
    Index readouts() const noexcept { return readouts_; }
    Index rows() const noexcept { return points() * readouts_; }

    void fill_panel(const Network& net, std::size_t begin, std::size_t end, Eigen::Ref<Matrix> panel) const;

private:
    std::vector<TangentFactors> factors_;
    Index readouts_ = 0;
};

enum class BlockShape {
    full,       // out = J_rows J_cols^T
    symmetric,  // rows == cols; only the lower triangle is accumulated, then mirrored
    diagonal,   // rows == cols; out stacks the k x k self-blocks of every point (N*k x k)
};

struct KernelRequest {
    const TangentSet* rows = nullptr;
    const TangentSet* cols = nullptr;
    BlockShape shape = BlockShape::full;
    Matrix* out = nullptr;
};

/// Accumulates every requested kernel block in a single pass over parameter
/// chunks. Each distinct TangentSet gets one panel per chunk; chunk width is
/// chosen so all panels together stay under `panel_bytes`.
void accumulate_kernels(const Network& net, std::span<const KernelRequest> requests,
                        std::size_t panel_bytes);

}  // namespace pntk
