#pragma once

// Independent reference implementations used to check the library. They are
// written with plain loops and std::vector where practical and share no code
// with the library beyond the Network container and the Matrix typedef.

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "pntk/linalg.hpp"
#include "pntk/net.hpp"

namespace oracle {

using pntk::Index;
using pntk::Matrix;
using pntk::Vector;

/// Cyclic Jacobi rotations until the off-diagonal mass is negligible.
inline std::vector<double> jacobi_eigenvalues(Matrix a, int max_sweeps = 100) {
    const Index n = a.rows();
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (Index i = 0; i < n; ++i)
            for (Index j = 0; j < n; ++j)
                if (i != j) off += a(i, j) * a(i, j);
        if (off < 1e-26 * std::max(1.0, a.squaredNorm())) break;
        for (Index p = 0; p < n - 1; ++p) {
            for (Index q = p + 1; q < n; ++q) {
                if (a(p, q) == 0.0) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
                const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (Index k = 0; k < n; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (Index k = 0; k < n; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
            }
        }
    }
    std::vector<double> ev(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) ev[static_cast<std::size_t>(i)] = a(i, i);
    std::sort(ev.begin(), ev.end());
    return ev;
}

/// Gaussian elimination with partial pivoting; solves A X = B.
inline Matrix gauss_solve(Matrix a, Matrix b) {
    const Index n = a.rows();
    for (Index col = 0; col < n; ++col) {
        Index piv = col;
        for (Index r = col + 1; r < n; ++r)
            if (std::abs(a(r, col)) > std::abs(a(piv, col))) piv = r;
        if (a(piv, col) == 0.0) throw std::runtime_error("gauss_solve: singular");
        a.row(col).swap(a.row(piv));
        b.row(col).swap(b.row(piv));
        for (Index r = col + 1; r < n; ++r) {
            const double f = a(r, col) / a(col, col);
            for (Index c = col; c < n; ++c) a(r, c) -= f * a(col, c);
            for (Index c = 0; c < b.cols(); ++c) b(r, c) -= f * b(col, c);
        }
    }
    Matrix x(n, b.cols());
    for (Index r = n - 1; r >= 0; --r) {
        for (Index c = 0; c < b.cols(); ++c) {
            double s = b(r, c);
            for (Index k = r + 1; k < n; ++k) s -= a(r, k) * x(k, c);
            x(r, c) = s / a(r, r);
        }
    }
    return x;
}

inline double act(const pntk::NetworkSpec& s, double z) {
    switch (s.activation) {
        case pntk::Activation::relu: return z > 0 ? z : 0.0;
        case pntk::Activation::leaky_relu: return z > 0 ? z : s.leaky_slope * z;
        case pntk::Activation::gelu: return 0.5 * z * std::erfc(-z / std::sqrt(2.0));
    }
    return 0.0;
}

inline double act_prime(const pntk::NetworkSpec& s, double z) {
    switch (s.activation) {
        case pntk::Activation::relu: return z > 0 ? 1.0 : 0.0;
        case pntk::Activation::leaky_relu: return z > 0 ? 1.0 : s.leaky_slope;
        case pntk::Activation::gelu: {
            const double cdf = 0.5 * std::erfc(-z / std::sqrt(2.0));
            const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI);
            return cdf + z * pdf;
        }
    }
    return 0.0;
}

/// Forward pass with explicit loops; returns per-layer inputs and pre-activations.
struct Trace {
    std::vector<std::vector<double>> in;
    std::vector<std::vector<double>> pre;
};

inline Trace run(const pntk::Network& net, const Vector& x) {
    Trace t;
    std::vector<double> h(x.data(), x.data() + x.size());
    for (std::size_t l = 0; l < net.depth(); ++l) {
        const Matrix& w = net.weight(l);
        std::vector<double> z(static_cast<std::size_t>(w.rows()), 0.0);
        for (Index i = 0; i < w.rows(); ++i)
            for (Index j = 0; j < w.cols(); ++j) z[static_cast<std::size_t>(i)] += w(i, j) * h[static_cast<std::size_t>(j)];
        t.in.push_back(h);
        t.pre.push_back(z);
        h.assign(z.size(), 0.0);
        for (std::size_t i = 0; i < z.size(); ++i) h[i] = act(net.spec(), z[i]);
    }
    return t;
}

inline Vector output(const pntk::Network& net, const Vector& x) {
    const auto t = run(net, x);
    return Eigen::Map<const Vector>(t.pre.back().data(), static_cast<Index>(t.pre.back().size()));
}

/// Jacobian by textbook backpropagation, one output at a time.
inline Matrix backprop_jacobian(const pntk::Network& net, const Vector& x) {
    const auto t = run(net, x);
    const auto o = net.output_dim();
    Matrix j = Matrix::Zero(static_cast<Index>(o), static_cast<Index>(net.param_count()));
    for (std::size_t r = 0; r < o; ++r) {
        std::vector<double> delta(o, 0.0);
        delta[r] = 1.0;
        for (std::size_t l = net.depth(); l-- > 0;) {
            const Matrix& w = net.weight(l);
            const std::size_t off = net.param_block(l).offset;
            for (Index i = 0; i < w.rows(); ++i)
                for (Index k = 0; k < w.cols(); ++k)
                    j(static_cast<Index>(r), static_cast<Index>(off + i * w.cols() + k)) =
                        delta[static_cast<std::size_t>(i)] * t.in[l][static_cast<std::size_t>(k)];
            if (l == 0) break;
            std::vector<double> below(static_cast<std::size_t>(w.cols()), 0.0);
            for (Index k = 0; k < w.cols(); ++k) {
                double s = 0.0;
                for (Index i = 0; i < w.rows(); ++i) s += delta[static_cast<std::size_t>(i)] * w(i, k);
                below[static_cast<std::size_t>(k)] = s * act_prime(net.spec(), t.pre[l - 1][static_cast<std::size_t>(k)]);
            }
            delta = std::move(below);
        }
    }
    return j;
}

/// Central finite difference of output `r` with respect to flat parameter `p`.
inline double fd_partial(const pntk::Network& net, const Vector& x, std::size_t r, std::size_t p, double h) {
    Vector theta = net.flat_params();
    theta(static_cast<Index>(p)) += h;
    const double up = output(net.with_params(theta), x)(static_cast<Index>(r));
    theta(static_cast<Index>(p)) -= 2 * h;
    const double down = output(net.with_params(theta), x)(static_cast<Index>(r));
    return (up - down) / (2 * h);
}

/// Dense eNTK Gram from explicit per-point Jacobians, point-major layout.
inline Matrix naive_entk(const pntk::Network& net, const Matrix& x1, const Matrix& x2) {
    const Index o = static_cast<Index>(net.output_dim());
    Matrix k(x1.rows() * o, x2.rows() * o);
    std::vector<Matrix> j2;
    for (Index b = 0; b < x2.rows(); ++b) j2.push_back(backprop_jacobian(net, x2.row(b).transpose()));
    for (Index a = 0; a < x1.rows(); ++a) {
        const Matrix j1 = backprop_jacobian(net, x1.row(a).transpose());
        for (Index b = 0; b < x2.rows(); ++b) k.block(a * o, b * o, o, o) = j1 * j2[static_cast<std::size_t>(b)].transpose();
    }
    return k;
}

/// Scalar kernel v^T Θ v assembled from explicit Jacobians.
inline Matrix naive_pntk(const pntk::Network& net, const Matrix& x1, const Matrix& x2, const Vector& v) {
    Matrix k(x1.rows(), x2.rows());
    for (Index a = 0; a < x1.rows(); ++a) {
        const Vector g1 = backprop_jacobian(net, x1.row(a).transpose()).transpose() * v;
        for (Index b = 0; b < x2.rows(); ++b) {
            const Vector g2 = backprop_jacobian(net, x2.row(b).transpose()).transpose() * v;
            k(a, b) = g1.dot(g2);
        }
    }
    return k;
}

inline Matrix random_matrix(Index rows, Index cols, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n;
    Matrix m(rows, cols);
    for (Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
    return m;
}

inline pntk::Network make_net(std::size_t d, std::vector<std::size_t> hidden, std::size_t o, std::uint64_t seed,
                              pntk::Activation a = pntk::Activation::relu) {
    pntk::NetworkSpec s;
    s.input_dim = d;
    s.hidden_widths = std::move(hidden);
    s.output_dim = o;
    s.activation = a;
    s.seed = seed;
    return pntk::init_network(s);
}

}  // namespace oracle
