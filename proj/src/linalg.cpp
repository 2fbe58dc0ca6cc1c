#include "pntk/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <vector>

#include "binio.hpp"

namespace pntk {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidMatrix: return "InvalidMatrix";
        case ErrorKind::ShapeMismatch: return "ShapeMismatch";
        case ErrorKind::SingularKernel: return "SingularKernel";
        case ErrorKind::InvalidSpec: return "InvalidSpec";
        case ErrorKind::Unsupported: return "Unsupported";
        case ErrorKind::OutOfRange: return "OutOfRange";
        case ErrorKind::Diverged: return "Diverged";
        case ErrorKind::MemoryCap: return "MemoryCap";
        case ErrorKind::DegenerateKernel: return "DegenerateKernel";
        case ErrorKind::InvalidSweep: return "InvalidSweep";
        case ErrorKind::FormatError: return "FormatError";
        case ErrorKind::EmptySet: return "EmptySet";
        case ErrorKind::CountMismatch: return "CountMismatch";
        case ErrorKind::InsufficientData: return "InsufficientData";
        case ErrorKind::ConfigError: return "ConfigError";
        case ErrorKind::IoError: return "IoError";
        case ErrorKind::InvalidArgument: return "InvalidArgument";
    }
    return "Unknown";
}

void require_finite(const Matrix& a, const char* what) {
    if (!a.allFinite()) {
        throw Error(ErrorKind::InvalidMatrix, std::string(what) + " has non-finite entries");
    }
}

SymmetricMatrix::SymmetricMatrix(Matrix m) : data_(std::move(m)) {
    if (data_.rows() != data_.cols()) {
        throw Error(ErrorKind::ShapeMismatch, "symmetric matrix must be square, got " +
                                                  std::to_string(data_.rows()) + "x" +
                                                  std::to_string(data_.cols()));
    }
    require_finite(data_, "symmetric matrix");
    const Index n = data_.rows();
    for (Index i = 0; i < n; ++i) {
        for (Index j = i + 1; j < n; ++j) {
            const double a = data_(i, j);
            if (std::abs(a - data_(j, i)) > 1e-12 * std::max(1.0, std::abs(a))) {
                throw Error(ErrorKind::InvalidMatrix,
                            "matrix is not symmetric at (" + std::to_string(i) + ", " +
                                std::to_string(j) + ")");
            }
        }
    }
}

SymmetricMatrix SymmetricMatrix::from_lower(Matrix m) {
    if (m.rows() != m.cols()) {
        throw Error(ErrorKind::ShapeMismatch, "symmetric matrix must be square");
    }
    m.triangularView<Eigen::StrictlyUpper>() = m.transpose().triangularView<Eigen::StrictlyUpper>();
    return SymmetricMatrix(std::move(m));
}

SymmetricMatrix SymmetricMatrix::scaled(double c) const {
    SymmetricMatrix out;
    out.data_ = data_ * c;
    return out;
}

SymmetricMatrix SymmetricMatrix::shifted(double c) const {
    SymmetricMatrix out;
    out.data_ = data_;
    out.data_.diagonal().array() += c;
    return out;
}

EigenExtremes sym_eig_extremes(const SymmetricMatrix& a) {
    if (a.dim() == 0) {
        throw Error(ErrorKind::ShapeMismatch, "eigen-extremes of an empty matrix");
    }
    require_finite(a.matrix(), "eigen-extremes input");
    const Eigen::MatrixXd col_major = a.matrix();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(col_major, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) {
        throw Error(ErrorKind::InvalidMatrix, "symmetric eigensolver did not converge");
    }
    const auto& ev = solver.eigenvalues();  // ascending
    return {ev(ev.size() - 1), ev(0)};
}

double frobenius_norm(const Matrix& a) {
    require_finite(a, "frobenius_norm input");
    return a.norm();
}

namespace {

std::vector<double> jitter_ladder(double start, double scale) {
    const double cap = 1e-4 * scale;
    std::vector<double> ladder{start};
    double j = start;
    if (j == 0.0) {
        if (scale <= 0.0) return ladder;
        j = 1e-12 * scale;
        ladder.push_back(j);
    }
    while (j * 10.0 <= cap * (1.0 + 1e-12)) {
        j *= 10.0;
        ladder.push_back(j);
    }
    return ladder;
}

}  // namespace

PsdSolution solve_psd(const SymmetricMatrix& k, const Matrix& b, double jitter) {
    const Index n = k.dim();
    if (b.rows() != n) {
        throw Error(ErrorKind::ShapeMismatch, "solve_psd: B has " + std::to_string(b.rows()) +
                                                  " rows, kernel dim is " + std::to_string(n));
    }
    if (!(jitter >= 0.0) || !std::isfinite(jitter)) {
        throw Error(ErrorKind::InvalidArgument, "solve_psd: jitter must be finite and >= 0");
    }
    require_finite(b, "solve_psd right-hand side");
    if (n == 0) return {Matrix(0, b.cols()), jitter, false};

    const double b_norm = b.norm();
    const double scale = k.trace() / static_cast<double>(n);
    const auto ladder = jitter_ladder(jitter, scale);

    Eigen::MatrixXd work(n, n);
    for (std::size_t step = 0; step < ladder.size(); ++step) {
        const double j = ladder[step];
        work = k.matrix();
        work.diagonal().array() += j;
        Eigen::LLT<Eigen::Ref<Eigen::MatrixXd>> llt(work);
        if (llt.info() != Eigen::Success) continue;

        Matrix x = llt.solve(b);
        Matrix residual = b - k.matrix() * x - j * x;
        x += llt.solve(residual);
        if (!x.allFinite()) continue;
        residual = b - k.matrix() * x - j * x;
        if (residual.norm() <= 1e-8 * b_norm || b_norm == 0.0) {
            return {std::move(x), j, step > 0};
        }
    }
    throw SingularKernelError("Cholesky failed or residual above 1e-8 relative for every jitter on the ladder",
                              ladder.back());
}

Matrix kron_identity(const Matrix& a, Index o) {
    Matrix out = Matrix::Zero(a.rows() * o, a.cols() * o);
    for (Index i = 0; i < a.rows(); ++i) {
        for (Index j = 0; j < a.cols(); ++j) {
            for (Index c = 0; c < o; ++c) out(i * o + c, j * o + c) = a(i, j);
        }
    }
    return out;
}

void write_matrix(std::ostream& out, const Matrix& m) {
    binio::put_magic(out, "NTKM");
    binio::put<std::uint32_t>(out, 1);
    binio::put<std::uint64_t>(out, static_cast<std::uint64_t>(m.rows()));
    binio::put<std::uint64_t>(out, static_cast<std::uint64_t>(m.cols()));
    out.write(reinterpret_cast<const char*>(m.data()),
              static_cast<std::streamsize>(m.size() * sizeof(double)));
    if (!out) throw Error(ErrorKind::IoError, "failed writing NTKM payload");
}

Matrix read_matrix(std::istream& in) {
    binio::expect_magic(in, "NTKM");
    const auto version = binio::get<std::uint32_t>(in, "NTKM version");
    if (version != 1) {
        throw Error(ErrorKind::FormatError, "unsupported NTKM version " + std::to_string(version));
    }
    const auto rows = binio::get<std::uint64_t>(in, "NTKM rows");
    const auto cols = binio::get<std::uint64_t>(in, "NTKM cols");
    if (cols != 0 && rows > (std::uint64_t{1} << 40) / cols) {
        throw Error(ErrorKind::FormatError, "NTKM shape is implausibly large");
    }
    Matrix m(static_cast<Index>(rows), static_cast<Index>(cols));
    if (m.size() > 0 &&
        !in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)))) {
        throw Error(ErrorKind::FormatError, "truncated NTKM payload");
    }
    return m;
}

void save_matrix(const std::filesystem::path& path, const Matrix& m) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::IoError, "cannot open " + path.string() + " for writing");
    write_matrix(out, m);
}

Matrix load_matrix(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
    return read_matrix(in);
}

}  // namespace pntk
