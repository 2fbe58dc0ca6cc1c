#pragma once

// Dense real matrix core. All storage is row-major 64-bit; Eigen does the
// heavy lifting behind these free functions.

#include <cstdint>
#include <filesystem>
#include <iosfwd>

#include <Eigen/Dense>

#include "pntk/error.hpp"

namespace pntk {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Square matrix whose symmetry was checked on construction:
/// |A(i,j) - A(j,i)| <= 1e-12 * max(1, |A(i,j)|).
class SymmetricMatrix {
public:
    SymmetricMatrix() = default;
    explicit SymmetricMatrix(Matrix m);

    /// Builds from a matrix where only the lower triangle is trusted; the
    /// upper triangle is overwritten by the mirror image.
    static SymmetricMatrix from_lower(Matrix m);

    Index dim() const noexcept { return data_.rows(); }
    const Matrix& matrix() const noexcept { return data_; }
    double operator()(Index i, Index j) const { return data_(i, j); }
    double trace() const { return data_.trace(); }

    SymmetricMatrix scaled(double c) const;
    SymmetricMatrix shifted(double c) const;

private:
    Matrix data_;
};

struct EigenExtremes {
    double max = 0.0;
    double min = 0.0;
};

void require_finite(const Matrix& a, const char* what);

EigenExtremes sym_eig_extremes(const SymmetricMatrix& a);

double frobenius_norm(const Matrix& a);

struct PsdSolution {
    Matrix x;
    double jitter = 0.0;    // jitter actually used
    bool escalated = false; // true when the ladder had to move past the caller's value
};

/// Solves (K + jitter I) X = B by Cholesky with one refinement step. When
/// the factorization fails or the residual is too large the jitter is
/// escalated 10x at a time up to 1e-4 * trace(K)/dim; a zero starting jitter
/// first tries the bare matrix and then starts at 1e-12 * trace(K)/dim.
///
/// Residual contract: ||(K + jitter I) X - B||_F <= 1e-8 ||B||_F for the
/// jitter that was finally used. Throws SingularKernelError otherwise.
PsdSolution solve_psd(const SymmetricMatrix& k, const Matrix& b, double jitter);

/// A ⊗ I_O, used to lift scalar kernels into the block layout.
Matrix kron_identity(const Matrix& a, Index o);

// "NTKM" binary format: magic, u32 version = 1, u64 rows, u64 cols, then the
// row-major f64 payload, all little-endian.
void write_matrix(std::ostream& out, const Matrix& m);
Matrix read_matrix(std::istream& in);
void save_matrix(const std::filesystem::path& path, const Matrix& m);
Matrix load_matrix(const std::filesystem::path& path);

}  // namespace pntk
