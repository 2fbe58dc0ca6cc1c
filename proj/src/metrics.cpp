#include "pntk/metrics.hpp"

#include <cmath>
#include <limits>

namespace pntk {

DiagMass diag_offdiag_mass(const EntkBlockMatrix& k) {
    if (k.n1 < 1 || k.n2 < 1 || k.o < 1) throw Error(ErrorKind::ShapeMismatch, "empty block matrix");
    DiagMass m;
    for (Index i = 0; i < k.n1; ++i) {
        for (Index j = 0; j < k.n2; ++j) {
            const auto b = k.data.block(i * k.o, j * k.o, k.o, k.o);
            for (Index r = 0; r < k.o; ++r) {
                for (Index c = 0; c < k.o; ++c) {
                    const double v = b(r, c);
                    if (r == c) {
                        m.diag += std::abs(v);
                        m.diag_signed += v;
                    } else {
                        m.offdiag += std::abs(v);
                        m.offdiag_signed += v;
                    }
                }
            }
        }
    }
    const double blocks = static_cast<double>(k.n1 * k.n2);
    m.diag /= blocks;
    m.offdiag /= blocks;
    m.diag_signed /= blocks;
    m.offdiag_signed /= blocks;
    return m;
}

double rel_frobenius_diff(const EntkBlockMatrix& entk, const PntkMatrix& pntk) {
    if (entk.n1 != pntk.n1 || entk.n2 != pntk.n2 || entk.data.rows() != entk.n1 * entk.o ||
        entk.data.cols() != entk.n2 * entk.o || pntk.data.rows() != pntk.n1 || pntk.data.cols() != pntk.n2) {
        throw Error(ErrorKind::ShapeMismatch, "eNTK and pNTK kernels cover different point sets");
    }
    const Index o = entk.o;
    double diff2 = 0.0;
    for (Index i = 0; i < entk.n1; ++i) {
        for (Index j = 0; j < entk.n2; ++j) {
            const auto b = entk.data.block(i * o, j * o, o, o);
            const double p = pntk.data(i, j);
            for (Index r = 0; r < o; ++r) {
                for (Index c = 0; c < o; ++c) {
                    const double d = (r == c ? p : 0.0) - b(r, c);
                    diff2 += d * d;
                }
            }
        }
    }
    const double norm = entk.data.norm();
    if (norm == 0.0) throw Error(ErrorKind::DegenerateKernel, "eNTK has zero Frobenius norm");
    return std::sqrt(diff2) / norm;
}

double rel_frobenius_diff(const Matrix& entk_block, double pntk_value) {
    if (entk_block.rows() != entk_block.cols()) throw Error(ErrorKind::ShapeMismatch, "eNTK block must be square");
    const double norm = entk_block.norm();
    if (norm == 0.0) throw Error(ErrorKind::DegenerateKernel, "eNTK block has zero Frobenius norm");
    Matrix lifted = -entk_block;
    lifted.diagonal().array() += pntk_value;
    return lifted.norm() / norm;
}

bool SpectralSummary::condition_finite() const { return std::isfinite(condition_number); }

SpectralSummary spectral_summary(const SymmetricMatrix& k) {
    const auto ext = sym_eig_extremes(k);
    SpectralSummary s;
    s.lambda_max = ext.max;
    s.lambda_min = ext.min;
    s.condition_number = ext.min > 0.0 ? ext.max / ext.min : std::numeric_limits<double>::infinity();
    s.frob_norm = k.matrix().norm();
    return s;
}

SpectralSummary spectral_summary_lifted(const SymmetricMatrix& k, Index o) {
    if (o < 1) throw Error(ErrorKind::InvalidArgument, "lift order must be >= 1");
    auto s = spectral_summary(k);
    s.frob_norm *= std::sqrt(static_cast<double>(o));
    return s;
}

double rel_eig_diff(const SpectralSummary& entk, const SpectralSummary& pntk, EigStat which) {
    double a = 0.0;
    double b = 0.0;
    switch (which) {
        case EigStat::max: a = pntk.lambda_max; b = entk.lambda_max; break;
        case EigStat::min: a = pntk.lambda_min; b = entk.lambda_min; break;
        case EigStat::cond: a = pntk.condition_number; b = entk.condition_number; break;
    }
    if (!std::isfinite(a) || !std::isfinite(b)) {
        throw Error(ErrorKind::InvalidArgument, "spectral statistic is not finite");
    }
    if (b == 0.0) throw Error(ErrorKind::DegenerateKernel, "eNTK statistic is zero");
    return std::abs(a - b) / std::abs(b);
}

SweepResult loglog_slope(std::span<const double> widths, std::span<const double> values) {
    if (widths.size() != values.size()) throw Error(ErrorKind::InvalidSweep, "widths and values differ in length");
    if (widths.size() < 3) throw Error(ErrorKind::InvalidSweep, "need at least 3 widths for a slope fit");
    SweepResult r;
    r.widths.assign(widths.begin(), widths.end());
    r.values.assign(values.begin(), values.end());
    const auto n = static_cast<double>(widths.size());
    double sx = 0, sy = 0;
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < widths.size(); ++i) {
        if (i > 0 && !(widths[i] > widths[i - 1])) {
            throw Error(ErrorKind::InvalidSweep, "widths must be strictly increasing");
        }
        if (!(widths[i] > 0.0) || !(values[i] > 0.0) || !std::isfinite(values[i])) {
            throw Error(ErrorKind::InvalidSweep, "widths and values must be positive for a log-log fit");
        }
        lx.push_back(std::log(widths[i]));
        ly.push_back(std::log(values[i]));
        sx += lx.back();
        sy += ly.back();
    }
    const double mx = sx / n;
    const double my = sy / n;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
        syy += (ly[i] - my) * (ly[i] - my);
    }
    r.fitted_slope = sxy / sxx;
    r.intercept = my - r.fitted_slope * mx;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        const double e = ly[i] - (r.intercept + r.fitted_slope * lx[i]);
        ss_res += e * e;
    }
    // A perfectly flat series has no variance to explain; it is fit exactly.
    r.fit_r2 = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
    return r;
}

}  // namespace pntk
