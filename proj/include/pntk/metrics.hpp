#pragma once

#include <span>
#include <vector>

#include "pntk/linalg.hpp"
#include "pntk/ntk.hpp"

namespace pntk {

/// Mean over all O x O blocks of the summed diagonal and off-diagonal
/// entries. The absolute sums are the headline numbers; signed sums are kept
/// alongside because they can cancel.
struct DiagMass {
    double diag = 0.0;
    double offdiag = 0.0;
    double diag_signed = 0.0;
    double offdiag_signed = 0.0;
};

DiagMass diag_offdiag_mass(const EntkBlockMatrix& k);

/// ||pNTK ⊗ I_O - eNTK||_F / ||eNTK||_F, evaluated block by block.
double rel_frobenius_diff(const EntkBlockMatrix& entk, const PntkMatrix& pntk);

/// Single-pair form of the same statistic.
double rel_frobenius_diff(const Matrix& entk_block, double pntk_value);

struct SpectralSummary {
    double lambda_max = 0.0;
    double lambda_min = 0.0;
    double condition_number = 0.0;  // +inf when lambda_min <= 0
    double frob_norm = 0.0;
    bool condition_finite() const;
};

SpectralSummary spectral_summary(const SymmetricMatrix& k);

/// Summary of K ⊗ I_O without forming the lift: eigen-extremes are those of
/// K and the Frobenius norm picks up a factor sqrt(O).
SpectralSummary spectral_summary_lifted(const SymmetricMatrix& k, Index o);

enum class EigStat { max, min, cond };

/// |pNTK stat - eNTK stat| / |eNTK stat|.
double rel_eig_diff(const SpectralSummary& entk, const SpectralSummary& pntk, EigStat which);

struct SweepResult {
    std::vector<double> widths;
    std::vector<double> values;
    double fitted_slope = 0.0;
    double intercept = 0.0;
    double fit_r2 = 0.0;
};

/// Least-squares slope of log(value) against log(width).
SweepResult loglog_slope(std::span<const double> widths, std::span<const double> values);

}  // namespace pntk
