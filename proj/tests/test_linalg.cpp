#include <doctest.h>

#include <sstream>

#include "oracles.hpp"
#include "pntk/linalg.hpp"

using namespace pntk;

namespace {

Matrix random_spd(Index n, std::uint64_t seed, double shift = 1e-3) {
    const Matrix a = oracle::random_matrix(n, n + 3, seed);
    Matrix k = a * a.transpose() / static_cast<double>(n);
    k.diagonal().array() += shift;
    return k;
}

}  // namespace

TEST_CASE("symmetric matrix construction checks shape, symmetry and finiteness") {
    CHECK_THROWS_AS(SymmetricMatrix(Matrix::Zero(2, 3)), Error);
    Matrix a(2, 2);
    a << 1, 2, 2.1, 1;
    CHECK_THROWS_AS(SymmetricMatrix{a}, Error);
    a(1, 0) = 2.0 + 1e-13;
    CHECK_NOTHROW(SymmetricMatrix{a});
    a(0, 0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(SymmetricMatrix{a}, Error);

    Matrix lower(2, 2);
    lower << 4, 99, 1, 3;
    const auto s = SymmetricMatrix::from_lower(lower);
    CHECK(s(0, 1) == 1.0);
    CHECK(s.trace() == 7.0);
}

TEST_CASE("eigen extremes agree with cyclic Jacobi") {
    for (Index n : {1, 2, 5, 17, 40}) {
        const Matrix a = oracle::random_matrix(n, n, static_cast<std::uint64_t>(n));
        const Matrix sym = 0.5 * (a + a.transpose());
        const auto ext = sym_eig_extremes(SymmetricMatrix(sym));
        const auto ev = oracle::jacobi_eigenvalues(sym);
        CHECK(ext.max == doctest::Approx(ev.back()).epsilon(1e-10));
        CHECK(ext.min == doctest::Approx(ev.front()).epsilon(1e-10));
    }
}

TEST_CASE("solve_psd matches Gaussian elimination on well-conditioned systems") {
    const Matrix k = random_spd(30, 7, 0.5);
    const Matrix b = oracle::random_matrix(30, 4, 8);
    const auto sol = solve_psd(SymmetricMatrix(k), b, 0.0);
    CHECK_FALSE(sol.escalated);
    CHECK(sol.jitter == 0.0);
    const Matrix ref = oracle::gauss_solve(k, b);
    CHECK((sol.x - ref).norm() <= 1e-10 * ref.norm());

    const auto jittered = solve_psd(SymmetricMatrix(k), b, 0.25);
    Matrix shifted = k;
    shifted.diagonal().array() += 0.25;
    CHECK((jittered.x - oracle::gauss_solve(shifted, b)).norm() <= 1e-10 * jittered.x.norm());
    CHECK(jittered.jitter == 0.25);
}

TEST_CASE("solve_psd escalates jitter on a rank-deficient kernel and meets the residual contract") {
    const Matrix a = oracle::random_matrix(12, 3, 11);
    const Matrix k = a * a.transpose();  // rank 3
    const Matrix b = oracle::random_matrix(12, 2, 12);
    const auto sol = solve_psd(SymmetricMatrix(k), b, 0.0);
    CHECK(sol.escalated);
    CHECK(sol.jitter > 0.0);
    CHECK(sol.jitter <= 1e-4 * k.trace() / 12.0 * (1 + 1e-12));
    Matrix shifted = k;
    shifted.diagonal().array() += sol.jitter;
    CHECK((shifted * sol.x - b).norm() <= 1e-8 * b.norm());
}

TEST_CASE("solve_psd reports the last jitter when the matrix is too indefinite") {
    Matrix k = Matrix::Identity(4, 4);
    k(3, 3) = -2.0;  // trace stays positive, so the ladder has rungs above zero
    try {
        (void)solve_psd(SymmetricMatrix(k), Matrix::Ones(4, 1), 0.0);
        FAIL("expected SingularKernelError");
    } catch (const SingularKernelError& e) {
        CHECK(e.kind() == ErrorKind::SingularKernel);
        CHECK(e.attempted_jitter() > 0.0);
    }
    CHECK_THROWS_AS(solve_psd(SymmetricMatrix(Matrix::Identity(2, 2)), Matrix::Ones(3, 1), 0.0), Error);
    CHECK_THROWS_AS(solve_psd(SymmetricMatrix(Matrix::Identity(2, 2)), Matrix::Ones(2, 1), -1.0), Error);
}

TEST_CASE("kron_identity lays out blocks point-major") {
    Matrix a(2, 3);
    a << 1, 2, 3, 4, 5, 6;
    const Matrix k = kron_identity(a, 2);
    REQUIRE(k.rows() == 4);
    REQUIRE(k.cols() == 6);
    CHECK(k(2, 4) == 6.0);
    CHECK(k(3, 5) == 6.0);
    CHECK(k(2, 2) == 5.0);
    CHECK(k(2, 5) == 0.0);
    CHECK(frobenius_norm(k) == doctest::Approx(std::sqrt(2.0) * a.norm()));
}

TEST_CASE("NTKM round trip is bit-identical and rejects bad input") {
    const Matrix m = oracle::random_matrix(5, 3, 99);
    std::stringstream buf;
    write_matrix(buf, m);
    const std::string bytes = buf.str();
    CHECK(bytes.substr(0, 4) == "NTKM");
    CHECK(bytes.size() == 4 + 4 + 8 + 8 + 15 * 8);
    const Matrix back = read_matrix(buf);
    CHECK(std::memcmp(back.data(), m.data(), sizeof(double) * 15) == 0);

    std::stringstream bad("NTKX");
    CHECK_THROWS_AS(read_matrix(bad), Error);
    std::stringstream truncated(bytes.substr(0, bytes.size() - 3));
    CHECK_THROWS_AS(read_matrix(truncated), Error);
}
