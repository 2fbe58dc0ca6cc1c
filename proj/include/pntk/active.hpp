#pragma once

// Pool-based active learning with a look-ahead acquisition score.
//
// Score of candidate p: hypothesize its label as the current model's argmax,
// add it to the labeled set and measure how much the kernel-regression
// predictions on a fixed reference set move:
//
//   score(p) = || K_R,L+p (K_L+p + λI)^-1 r_L+p - K_RL (K_LL + λI)^-1 r_L ||_F
//
// evaluated through the bordered (Schur complement) form so that only the
// labeled Gram is ever factorized:
//
//   U   = (K_LL + λI)^-1 K_Lp        S_p = K_pp + λI - K_pL U
//   e_p = r_p - K_pL (K_LL + λI)^-1 r_L
//   Δ   = (K_Rp - K_RL U) S_p^-1 e_p
//
// Residuals r are one-hot targets minus the current outputs when centering
// is on. The reference set is a fixed random subset of the initial pool.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "pntk/data.hpp"
#include "pntk/net.hpp"
#include "pntk/ntk.hpp"

namespace pntk {

inline constexpr const char* kLookaheadFunctional = "lookahead-argmax-pseudolabel/v1";

enum class Acquisition { lookahead, random };

struct ALConfig {
    std::size_t initial_labeled = 100;
    std::size_t per_cycle = 20;
    std::size_t cycles = 5;
    KernelKind kernel = KernelKind::pntk;
    PntkMode mode;
    Acquisition acquisition = Acquisition::lookahead;
    std::size_t candidate_pool_cap = 500;
    std::size_t ref_set_size = 100;
    std::size_t initial_epochs = 20;
    std::size_t retrain_epochs = 10;
    bool warm_start = true;
    bool center_with_f0 = true;
    double relative_jitter = 1e-8;  // times trace(K_LL)/dim
    NetworkSpec net;
    TrainConfig train;  // epochs and seed are set per training call
    KernelOptions kernel_opts;
    std::uint64_t seed = 0;

    void validate() const;
};

struct LookaheadScores {
    Vector scores;
    std::vector<bool> escalated;  // candidate needed extra jitter on S_p
    double jitter = 0.0;          // λ used for K_LL
};

struct LookaheadInputs {
    const Matrix* labeled = nullptr;  // L x D
    const Matrix* targets = nullptr;  // L x O one-hot
    const Matrix* pool = nullptr;     // P x D
    const Matrix* ref = nullptr;      // R x D
};

LookaheadScores lookahead_scores(const Network& net, const LookaheadInputs& in, KernelKind kernel,
                                 const PntkMode& mode = {}, bool center_with_f0 = true,
                                 double relative_jitter = 1e-8, const KernelOptions& opts = {});

/// Kernel-free core of the above. Kernels use `k` readouts per point
/// (O for the eNTK, 1 for the pNTK) and point-major layout; residuals are
/// (L*k) x c with c = O / k, likewise for the candidate residuals (P*k) x c.
struct LookaheadKernels {
    Matrix ll;         // Lk x Lk
    Matrix pl;         // Pk x Lk
    Matrix rl;         // Rk x Lk
    Matrix rp;         // Rk x Pk
    Matrix pp_blocks;  // Pk x k, self-blocks of the pool
};

LookaheadScores lookahead_scores(const LookaheadKernels& k, Index readouts, const Matrix& labeled_residual,
                                 const Matrix& candidate_residual, double jitter);

struct ALCycle {
    std::size_t cycle = 0;
    std::size_t labeled_count = 0;
    double accuracy = 0.0;
    double acq_seconds = 0.0;
    std::vector<std::size_t> selected;  // indices into the training-side set
    std::size_t escalated = 0;
};

struct ALTrace {
    std::vector<ALCycle> cycles;  // cycle 0 is the initial model
    bool pool_exhausted = false;
    std::string kernel_label;  // "entk", "pntk" or "random"
    std::string functional = kLookaheadFunctional;

    double total_acq_seconds() const;
    double final_accuracy() const { return cycles.empty() ? 0.0 : cycles.back().accuracy; }
};

/// Draws the initial labeled set and the candidate pool from `train_side`
/// and measures accuracy of the retrained network on `test`.
ALTrace run_al(const ALConfig& cfg, const LabeledSet& train_side, const LabeledSet& test);

/// cycle,labeled_count,accuracy,acq_seconds,kernel_kind
void write_trace_csv(std::ostream& out, const ALTrace& trace);

}  // namespace pntk
