#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pntk/linalg.hpp"
#include "pntk/net.hpp"

namespace pntk {

enum class KernelKind { entk, pntk };
std::string to_string(KernelKind k);

/// Which scalar readout the pseudo-NTK differentiates: the (1/sqrt(O))-scaled
/// sum of logits, or a single logit.
struct PntkMode {
    enum class Kind { sum_of_logits, single_logit };
    Kind kind = Kind::sum_of_logits;
    std::size_t logit = 0;

    static PntkMode sum() { return {}; }
    static PntkMode single(std::size_t i) { return {Kind::single_logit, i}; }
    std::string to_string() const;
    static PntkMode parse(const std::string& s);
    bool operator==(const PntkMode&) const = default;
};

/// (1/sqrt(O)) * ones, or e_i. Throws OutOfRange for a logit >= O.
Vector readout_vector(const PntkMode& mode, std::size_t output_dim);

/// N1*O x N2*O kernel; block (i, j) is the O x O eNTK of (X1[i], X2[j]).
struct EntkBlockMatrix {
    Index n1 = 0;
    Index n2 = 0;
    Index o = 0;
    Matrix data;

    Matrix block(Index i, Index j) const { return data.block(i * o, j * o, o, o); }
    bool square() const noexcept { return n1 == n2; }
};

struct PntkMatrix {
    Index n1 = 0;
    Index n2 = 0;
    PntkMode mode;
    Matrix data;
};

struct KernelOptions {
    std::uint64_t memory_cap = std::uint64_t{4} << 30;
    std::size_t panel_bytes = std::size_t{256} << 20;
};

Matrix entk_block(const Network& net, const Vector& x1, const Vector& x2);

/// When X1 and X2 hold identical rows only the lower triangle is assembled and
/// mirrored. Throws MemoryCapError before allocating anything above the cap.
EntkBlockMatrix entk_matrix(const Network& net, const Matrix& x1, const Matrix& x2,
                            const KernelOptions& opts = {});

double pntk(const Network& net, const Vector& x1, const Vector& x2, const PntkMode& mode = {});

/// One reverse sweep per point, then dot products over parameter chunks.
PntkMatrix pntk_matrix(const Network& net, const Matrix& x1, const Matrix& x2, const PntkMode& mode = {},
                       const KernelOptions& opts = {});

/// A training Gram together with the test-by-train cross kernel, built in one
/// pass over the parameters. Layouts follow entk_matrix / pntk_matrix.
struct TrainTestKernels {
    Matrix train;
    Matrix cross;
};

TrainTestKernels entk_train_test(const Network& net, const Matrix& train, const Matrix& test,
                                 const KernelOptions& opts = {});
TrainTestKernels pntk_train_test(const Network& net, const Matrix& train, const Matrix& test,
                                 const PntkMode& mode = {}, const KernelOptions& opts = {});

/// theta_L Theta_g(x1, x2) theta_L^T + g(x1)^T g(x2) I_O, with g the network
/// truncated before its linear readout. Throws Unsupported for depth 1.
Matrix readout_decomposition(const Network& net, const Vector& x1, const Vector& x2);

/// Theta^(l)(x1, x2) for l = 1..L, each n_l x n_l, built layer by layer:
///   Theta^(1)     = diag(phi'(a1) phi'(b1)) * (x1 . x2)
///   Theta^(l+1)   = V(x1) Theta^(l) V(x2)^T + K_D,   V(x) = diag(phi'(W^(l+1) f^l(x))) W^(l+1)
///   K_D           = diag(phi'(.)(x1) phi'(.)(x2)) * (f^l(x1) . f^l(x2))
/// with phi' = 1 on the final linear layer.
std::vector<Matrix> recursive_entk(const Network& net, const Vector& x1, const Vector& x2);

struct ResourceEstimate {
    KernelKind kind = KernelKind::pntk;
    std::uint64_t kernel_bytes = 0;
    std::uint64_t jvp_count = 0;
    bool saturated = false;
};

ResourceEstimate resource_estimate(std::uint64_t n, std::uint64_t o, std::uint64_t element_bytes,
                                   KernelKind kind);

/// Bytes of the dense kernel a request would produce (N1*k) x (N2*k) doubles.
std::uint64_t kernel_result_bytes(Index n1, Index n2, Index readouts);

struct KernelSidecar {
    KernelKind kind = KernelKind::pntk;
    std::optional<PntkMode> mode;
    Index n1 = 0;
    Index n2 = 0;
    Index o = 0;
    std::uint64_t net_checkpoint_hash = 0;
    std::size_t epoch = 0;
};

/// Writes `<stem>.ntkm` plus `<stem>.json`.
void save_kernel(const std::filesystem::path& stem, const Matrix& kernel, const KernelSidecar& meta);
KernelSidecar load_kernel_sidecar(const std::filesystem::path& json_path);

}  // namespace pntk
